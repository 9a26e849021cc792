// Public verification page — no account needed. Paste an anchor hash or a
// token id; every check the gateway ran is shown with its reason.

import * as api from "../api";
import { attempt } from "../app";
import { button, el, field } from "../dom";

export function renderVerify(outlet: HTMLElement): void {
  const reference = el("input", {
    type: "text",
    placeholder: "anchor hash or token id (hex)",
    "data-testid": "verify-input",
  });
  const result = el("div", { "data-testid": "verify-result" });

  const run = () =>
    void attempt(async () => {
      const verdict = await api.verify(reference.value.trim());
      const checks = verdict.checks.map((check) =>
        el(
          "li",
          { "data-testid": `check-${check.name}` },
          el("span", { class: check.passed ? "pass" : "fail" }, check.passed ? "✓" : "✗"),
          ` ${check.name}: ${check.detail}`,
        ),
      );
      result.replaceChildren(
        el(
          "p",
          {
            class: verdict.authentic ? "authentic" : "not-authentic",
            "data-testid": "verify-verdict",
          },
          verdict.authentic ? "Authentic" : "NotAuthentic",
        ),
        verdict.reason ? el("p", { "data-testid": "verify-reason" }, verdict.reason) : el("p", {}),
        el("ul", {}, ...checks),
      );
    });

  outlet.append(
    el(
      "section",
      { class: "card" },
      el("h2", {}, "Verify a certificate"),
      field("Reference", reference),
      button("Verify", run, { "data-testid": "verify-submit" }),
      result,
    ),
  );
}
