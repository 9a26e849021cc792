// Sign-in and registration. The private key never goes to the server: the
// login flow asks the gateway for a nonce and signs it right here.

import * as api from "../api";
import { attempt, refresh, roleHome } from "../app";
import { button, el, field } from "../dom";
import { setSession } from "../session";
import { publicKeyFor, signChallenge } from "../signing";

export function renderLogin(outlet: HTMLElement): void {
  const idInput = el("input", { type: "text", "data-testid": "login-id" });
  const keyInput = el("input", {
    type: "password",
    "data-testid": "login-key",
    placeholder: "64 hex chars; used locally, never sent",
  });

  const loginForm = el(
    "section",
    { class: "card" },
    el("h2", {}, "Sign in"),
    field("Account id", idInput),
    field("Private key", keyInput),
    button(
      "Sign in",
      () =>
        void attempt(async () => {
          const id = idInput.value.trim();
          const { challenge } = await api.requestChallenge(id);
          const signature = signChallenge(keyInput.value, challenge);
          keyInput.value = "";
          const session = await api.redeemChallenge(id, signature);
          setSession({
            token: session.token,
            identityId: session.identity_id,
            role: session.role,
            expiresAt: session.expires_at,
          });
          location.hash = roleHome(session.role);
          await refresh();
        }),
      { "data-testid": "login-submit" },
    ),
  );

  const nameInput = el("input", { type: "text", "data-testid": "register-name" });
  const instInput = el("input", { type: "text", "data-testid": "register-institution" });
  const ownKeyInput = el("input", {
    type: "password",
    placeholder: "optional: bring your own 32-byte key (hex)",
    "data-testid": "register-key",
  });
  const registerOut = el("div", { "data-testid": "register-result" });

  const registerForm = el(
    "section",
    { class: "card" },
    el("h2", {}, "New student account"),
    field("Name (becomes your account id)", nameInput),
    field("Institution", instInput),
    field("Private key", ownKeyInput),
    button(
      "Register",
      () =>
        void attempt(async () => {
          const ownKey = ownKeyInput.value.trim();
          const result = await api.register(
            nameInput.value.trim(),
            instInput.value.trim(),
            ownKey ? publicKeyFor(ownKey) : undefined,
          );
          registerOut.replaceChildren(
            el("p", {}, `Registered ${result.identity.id} @ ${result.identity.institution}.`),
            result.private_key
              ? el(
                  "p",
                  { class: "keynote" },
                  "Your private key (shown once, save it now): ",
                  el("code", { "data-testid": "issued-key" }, result.private_key),
                )
              : el("p", {}, "Sign in with the key you registered."),
          );
          idInput.value = result.identity.id;
        }),
      { "data-testid": "register-submit" },
    ),
    registerOut,
  );

  outlet.append(loginForm, registerForm);
}
