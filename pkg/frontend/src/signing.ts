// Client-side login signing. The private key is pasted into the login form,
// used once to sign the server's nonce, and never leaves this function —
// it is not stored, not sent, and the buffer is zeroed on the way out.

import * as ed from "@noble/ed25519";
import { sha512 } from "@noble/hashes/sha2.js";

ed.hashes.sha512 = sha512;

export function hexToBytes(hex: string): Uint8Array {
  const clean = hex.trim().toLowerCase();
  if (!/^[0-9a-f]*$/.test(clean) || clean.length % 2 !== 0) {
    throw new Error("not valid hex");
  }
  const out = new Uint8Array(clean.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(clean.slice(i * 2, i * 2 + 2), 16);
  }
  return out;
}

export function bytesToHex(bytes: Uint8Array): string {
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

/** Sign the hex challenge with the hex private key; returns hex signature. */
export function signChallenge(privateKeyHex: string, challengeHex: string): string {
  const seed = hexToBytes(privateKeyHex);
  if (seed.length !== 32) throw new Error("private key must be 32 bytes");
  try {
    return bytesToHex(ed.sign(hexToBytes(challengeHex), seed));
  } finally {
    seed.fill(0);
  }
}

/** Derive the public key for self-custodial registration. */
export function publicKeyFor(privateKeyHex: string): string {
  const seed = hexToBytes(privateKeyHex);
  if (seed.length !== 32) throw new Error("private key must be 32 bytes");
  try {
    return bytesToHex(ed.getPublicKey(seed));
  } finally {
    seed.fill(0);
  }
}
