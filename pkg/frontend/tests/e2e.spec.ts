// End-to-end workflow against a live gateway, driven entirely through the
// rendered screens: register → upload → admin verify → certify → token in
// wallet → exemption request through Granted → public verification, plus a
// tamper scenario. Every displayed hash/status is compared byte-for-byte to
// the gateway payload, and every network call the portal makes is recorded
// and checked against the documented endpoint list.

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { afterAll, beforeAll, expect, test } from "vitest";
import * as api from "../src/api";
import { setGatewayUrl } from "../src/config";
import { startGateway, type Gateway } from "./gateway";
import {
  bannerText,
  byTestId,
  click,
  mountApp,
  mustGet,
  navigate,
  setValue,
  waitFor,
} from "./helpers";

let gw: Gateway;

// every (method, path template) the portal is allowed to issue
const DOCUMENTED = new Set([
  "POST /register",
  "POST /login",
  "POST /submissions",
  "GET /submissions",
  "POST /submissions/{id}/decision",
  "POST /certify/{id}",
  "GET /wallets/{id}",
  "GET /verify/{ref}",
  "POST /policies",
  "GET /policies",
  "POST /exemptions",
  "GET /exemptions",
  "GET /exemptions/{id}",
  "POST /exemptions/{id}/criteria",
  "POST /exemptions/{id}/fulfill",
  "POST /exemptions/{id}/grant",
  "POST /exemptions/{id}/deny",
]);

interface RecordedCall {
  method: string;
  template: string;
  screen: string;
}

const recorded: RecordedCall[] = [];

function templateOf(path: string): string {
  const clean = path.split("?")[0] ?? path;
  return clean
    .replace(/^\/submissions\/[^/]+\/decision$/, "/submissions/{id}/decision")
    .replace(/^\/certify\/[^/]+$/, "/certify/{id}")
    .replace(/^\/wallets\/[^/]+$/, "/wallets/{id}")
    .replace(/^\/verify\/[^/]+$/, "/verify/{ref}")
    .replace(/^\/exemptions\/[^/]+\/(criteria|fulfill|grant|deny)$/, "/exemptions/{id}/$1")
    .replace(/^\/exemptions\/[^/]+$/, "/exemptions/{id}");
}

beforeAll(async () => {
  gw = await startGateway();
  setGatewayUrl(gw.baseUrl);
  const realFetch = globalThis.fetch;
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    if (url.startsWith(gw.baseUrl)) {
      recorded.push({
        method: (init?.method ?? "GET").toUpperCase(),
        template: templateOf(url.slice(gw.baseUrl.length)),
        screen: location.hash || "#/login",
      });
    }
    return realFetch(input, init);
  }) as typeof fetch;
});

afterAll(() => gw.stop());

async function signOut(): Promise<void> {
  const logout = document.querySelector("nav a.logout") as HTMLAnchorElement | null;
  if (logout) logout.click();
  await navigate("#/login");
  await waitFor(() => byTestId("login-id"), "login screen");
}

async function signIn(id: string, key: string): Promise<void> {
  await waitFor(() => byTestId("login-id"), "login form");
  setValue("login-id", id);
  setValue("login-key", key);
  click("login-submit");
  await waitFor(
    () => byTestId("whoami")?.textContent?.startsWith(id),
    `session for ${id}`,
  );
}

let studentKey = "";
let submissionId = "";
let tokenId = "";
let anchorHash = "";
let requestId = "";

test("student registers through the portal and gets the key exactly once", async () => {
  await mountApp();
  setValue("register-name", "dana");
  setValue("register-institution", "uni-a");
  click("register-submit");
  const keyNode = await waitFor(() => byTestId("issued-key"), "issued key");
  studentKey = keyNode.textContent ?? "";
  expect(studentKey).toMatch(/^[0-9a-f]{64}$/);
  // the form prefills the account id for the first sign-in
  expect((mustGet("login-id") as HTMLInputElement).value).toBe("dana");
});

test("student uploads a credential and sees the confirmed submission state", async () => {
  await signIn("dana", studentKey);
  await waitFor(() => byTestId("up-course-id"), "student dashboard");

  setValue("up-course-id", "course-101");
  setValue("up-title", "Intro to Databases");
  setValue("up-provider", "uni-a");
  setValue("up-credits", "3");
  setValue("up-completed", "2024-01-15");
  setValue("up-document", "transcript: dana passed course-101 with distinction");
  click("up-submit");

  const statusNode = await waitFor(
    () => document.querySelector('[data-testid^="submission-status-"]'),
    "submission row",
  );
  submissionId = (statusNode.getAttribute("data-testid") ?? "").replace("submission-status-", "");
  expect(submissionId).toMatch(/^sub-/);

  // displayed status must equal the gateway's, byte for byte
  const fromApi = await api.listSubmissions();
  expect(fromApi).toHaveLength(1);
  expect(statusNode.textContent).toBe(fromApi[0]!.status);
  expect(statusNode.textContent).toBe("AwaitingVerification");
});

test("admin approves from the queue and the row moves to Verified", async () => {
  await signOut();
  await signIn("admin-uni-a", gw.adminSeed("uni-a"));
  await waitFor(() => byTestId(`queue-${submissionId}`), "queued submission");

  click(`approve-${submissionId}`);
  await waitFor(() => !byTestId(`queue-${submissionId}`), "row leaving the queue");
  const verifiedStatus = await waitFor(
    () => byTestId(`verified-status-${submissionId}`),
    "row in the certify table",
  );
  expect(verifiedStatus.textContent).toBe("Verified");

  const fromApi = await api.listSubmissions();
  expect(fromApi[0]!.status).toBe("Verified");
  expect(fromApi[0]!.decided_by).toBe("admin-uni-a");
});

test("admin certifies and the receipt shows the minted token", async () => {
  click(`certify-${submissionId}`);
  const tokenNode = await waitFor(() => byTestId("receipt-token"), "receipt");
  tokenId = tokenNode.textContent ?? "";
  anchorHash = mustGet("receipt-anchor").textContent ?? "";
  expect(tokenId).toMatch(/^[0-9a-f]{64}$/);
  expect(anchorHash).toMatch(/^[0-9a-f]{64}$/);
});

test("wallet token card equals the wallet payload byte for byte", async () => {
  await signOut();
  await signIn("dana", studentKey);
  await waitFor(() => byTestId(`token-${tokenId}`), "token card");

  const wallet = await api.getWallet("dana");
  expect(wallet.tokens).toHaveLength(1);
  const token = wallet.tokens[0]!;
  expect(mustGet("token-id").textContent).toBe(token.token_id);
  expect(mustGet("token-anchor").textContent).toBe(token.anchor_hash);
  expect(mustGet("token-id").textContent).toBe(tokenId);
  expect(mustGet("token-anchor").textContent).toBe(anchorHash);
  expect(mustGet("wallet-count").textContent).toBe("1 token(s)");
});

test("admin publishes a policy, student requests, officer takes it to Granted", async () => {
  await signOut();
  await signIn("admin-uni-b", gw.adminSeed("uni-b"));
  await waitFor(() => byTestId("pol-id"), "policy form");
  setValue("pol-id", "exempt-data-modelling");
  setValue("pol-institution", "uni-b");
  setValue("pol-target", "course-201");
  setValue("pol-requirement", '{"kind": "require_token", "course_id": "course-101"}');
  setValue("pol-assessment", "oral examination");
  click("pol-submit");
  await waitFor(
    () => document.body.textContent?.includes("exempt-data-modelling: course-201 @ uni-b"),
    "policy listed after publish",
  );

  await signOut();
  await signIn("dana", studentKey);
  await waitFor(() => byTestId("request-exempt-data-modelling"), "policy card");
  click("request-exempt-data-modelling");
  const statusNode = await waitFor(
    () => document.querySelector('[data-testid^="request-status-req-"]'),
    "request row",
  );
  requestId = (statusNode.getAttribute("data-testid") ?? "").replace("request-status-", "");
  expect(statusNode.textContent).toBe("Submitted");

  await signOut();
  await signIn("admin-uni-b", gw.adminSeed("uni-b"));
  await waitFor(() => byTestId(`adm-request-${requestId}`), "admin request row");
  setValue(`criteria-text-${requestId}`, "oral examination on relational algebra");
  click(`criteria-${requestId}`);
  await waitFor(
    () => byTestId(`adm-request-status-${requestId}`)?.textContent === "CriteriaIssued",
    "criteria issued",
  );
  click(`fulfill-${requestId}`);
  await waitFor(
    () => byTestId(`adm-request-status-${requestId}`)?.textContent === "Fulfilled",
    "fulfilled",
  );
  click(`grant-${requestId}`);
  await waitFor(
    () => byTestId(`adm-request-status-${requestId}`)?.textContent === "Granted",
    "granted",
  );

  // student's timeline shows the same confirmed state the gateway reports
  await signOut();
  await signIn("dana", studentKey);
  const studentStatus = await waitFor(
    () => byTestId(`request-status-${requestId}`),
    "student request row",
  );
  const fromApi = await api.listExemptions();
  expect(studentStatus.textContent).toBe(fromApi[0]!.status);
  expect(studentStatus.textContent).toBe("Granted");
  const criteria = mustGet(`request-criteria-${requestId}`).textContent ?? "";
  expect(criteria).toContain(fromApi[0]!.criteria!.description);
});

test("public verify page shows the gateway's checks verbatim", async () => {
  await signOut();
  await navigate("#/verify");
  await waitFor(() => byTestId("verify-input"), "verify page");
  setValue("verify-input", anchorHash);
  click("verify-submit");
  const verdict = await waitFor(() => byTestId("verify-verdict"), "verdict");
  expect(verdict.textContent).toBe("Authentic");

  const fromApi = await api.verify(anchorHash);
  expect(fromApi.authentic).toBe(true);
  for (const check of fromApi.checks) {
    const node = mustGet(`check-${check.name}`);
    expect(node.textContent).toContain(check.name);
    expect(node.textContent).toContain(check.detail);
    expect(node.textContent).toContain("✓");
  }
  // token id resolves the same certificate
  setValue("verify-input", tokenId);
  click("verify-submit");
  await waitFor(
    () => byTestId("verify-verdict")?.textContent === "Authentic",
    "verdict via token id",
  );
});

test("a tampered off-chain block renders NotAuthentic with the gateway reason", async () => {
  const objectPath = join(
    gw.dataDir,
    "store",
    "objects",
    anchorHash.slice(0, 2),
    anchorHash.slice(2, 4),
    anchorHash,
  );
  const original = readFileSync(objectPath);
  const tampered = Buffer.from(original);
  tampered[0] = tampered[0]! ^ 0x01;
  writeFileSync(objectPath, tampered);
  try {
    setValue("verify-input", anchorHash);
    click("verify-submit");
    await waitFor(
      () => byTestId("verify-verdict")?.textContent === "NotAuthentic",
      "tampered verdict",
    );
    const fromApi = await api.verify(anchorHash);
    expect(fromApi.authentic).toBe(false);
    expect(mustGet("verify-reason").textContent).toBe(fromApi.reason);
    expect(mustGet("verify-reason").textContent).toBe("off-chain hash mismatch");
  } finally {
    writeFileSync(objectPath, original);
  }
});

test("gateway errors render as machine code plus verbatim message", async () => {
  await navigate("#/login");
  await waitFor(() => byTestId("login-id"), "login form");
  setValue("login-id", "ghost");
  setValue("login-key", "ab".repeat(32));
  click("login-submit");
  await waitFor(() => bannerText() !== null, "error banner");
  expect(bannerText()).toBe("account_not_found: Account Not Found !!!");
});

test("the portal only ever issued documented endpoints, on every screen", () => {
  expect(recorded.length).toBeGreaterThan(20);
  const offenders = recorded.filter(
    (call) => !DOCUMENTED.has(`${call.method} ${call.template}`),
  );
  expect(offenders).toEqual([]);
  // and the run exercised every screen
  const screens = new Set(recorded.map((call) => call.screen.split("/")[1]));
  expect(screens).toEqual(new Set(["login", "student", "admin", "verify"]));
});
