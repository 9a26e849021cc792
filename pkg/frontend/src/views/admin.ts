// Admin dashboard: the verification queue, certification of verified
// submissions, the policy form, and exemption-request actions.

import * as api from "../api";
import { attempt, refresh } from "../app";
import { button, el, field } from "../dom";

function queueCard(submissions: api.Submission[]): HTMLElement {
  const pending = submissions.filter((s) => s.status === "AwaitingVerification");
  const rows = pending.map((s) =>
    el(
      "tr",
      { "data-testid": `queue-${s.submission_id}` },
      el("td", {}, s.submission_id),
      el("td", {}, s.applicant_id),
      el("td", {}, `${s.metadata.course_id} — ${s.metadata.title}`),
      el("td", {}, s.document_hashes.length === 1 ? "1 document" : `${s.document_hashes.length} documents`),
      el(
        "td",
        {},
        button(
          "Approve",
          () =>
            void attempt(async () => {
              await api.decideSubmission(s.submission_id, "Verified");
              await refresh();
            }),
          { "data-testid": `approve-${s.submission_id}` },
        ),
        button(
          "Reject",
          () =>
            void attempt(async () => {
              await api.decideSubmission(s.submission_id, "Rejected");
              await refresh();
            }),
          { "data-testid": `reject-${s.submission_id}` },
        ),
      ),
    ),
  );
  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Verification queue"),
    pending.length === 0
      ? el("p", { "data-testid": "queue-empty" }, "Queue is empty.")
      : el(
          "table",
          {},
          el(
            "thead",
            {},
            el("tr", {}, el("th", {}, "Id"), el("th", {}, "Applicant"), el("th", {}, "Course"), el("th", {}, "Documents"), el("th", {}, "Decision")),
          ),
          el("tbody", {}, ...rows),
        ),
  );
}

function certifyCard(submissions: api.Submission[]): HTMLElement {
  const verified = submissions.filter((s) => s.status === "Verified");
  const receiptOut = el("div", { "data-testid": "receipt" });
  const rows = verified.map((s) =>
    el(
      "tr",
      { "data-testid": `verified-${s.submission_id}` },
      el("td", {}, s.submission_id),
      el("td", {}, s.applicant_id),
      el("td", {}, `${s.metadata.course_id} — ${s.metadata.title}`),
      el("td", { "data-testid": `verified-status-${s.submission_id}` }, s.status),
      el(
        "td",
        {},
        button(
          "Certify",
          () =>
            void attempt(async () => {
              const receipt = await api.certify(s.submission_id);
              receiptOut.replaceChildren(
                el(
                  "p",
                  {},
                  `Certified ${s.submission_id} at height ${receipt.block_height}. `,
                  "Token ",
                  el("code", { "data-testid": "receipt-token" }, receipt.token_id),
                  " anchored at ",
                  el("code", { "data-testid": "receipt-anchor" }, receipt.anchor_hash),
                ),
              );
            }),
          { "data-testid": `certify-${s.submission_id}` },
        ),
      ),
    ),
  );
  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Ready to certify"),
    verified.length === 0
      ? el("p", {}, "No verified submissions waiting.")
      : el(
          "table",
          {},
          el(
            "thead",
            {},
            el("tr", {}, el("th", {}, "Id"), el("th", {}, "Applicant"), el("th", {}, "Course"), el("th", {}, "Status"), el("th", {}, "")),
          ),
          el("tbody", {}, ...rows),
        ),
    receiptOut,
  );
}

function policyCard(policies: api.Policy[]): HTMLElement {
  const policyId = el("input", { type: "text", "data-testid": "pol-id" });
  const institution = el("input", { type: "text", "data-testid": "pol-institution" });
  const target = el("input", { type: "text", "data-testid": "pol-target" });
  const requirement = el("textarea", {
    rows: "3",
    placeholder: '{"kind": "require_token", "course_id": "…"}',
    "data-testid": "pol-requirement",
  });
  const assessment = el("input", { type: "text", "data-testid": "pol-assessment" });

  const existing = policies.map((p) =>
    el("li", {}, `${p.policy_id}: ${p.target_course_id} @ ${p.institution}`),
  );

  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Exemption policies"),
    existing.length === 0 ? el("p", {}, "None published.") : el("ul", {}, ...existing),
    el("h3", {}, "Publish a policy"),
    field("Policy id", policyId),
    field("Institution", institution),
    field("Target course", target),
    field("Requirement (JSON)", requirement),
    field("Assessment template", assessment),
    button(
      "Publish",
      () =>
        void attempt(async () => {
          await api.createPolicy({
            policy_id: policyId.value.trim(),
            institution: institution.value.trim(),
            target_course_id: target.value.trim(),
            requirement: JSON.parse(requirement.value) as Record<string, unknown>,
            assessment_template: assessment.value.trim(),
          });
          await refresh();
        }),
      { "data-testid": "pol-submit" },
    ),
  );
}

function requestsCard(requests: api.ExemptionRequest[]): HTMLElement {
  const rows = requests.map((r) => {
    const actions: HTMLElement[] = [];
    if (r.status === "Submitted") {
      const description = el("input", {
        type: "text",
        placeholder: "assessment criteria",
        "data-testid": `criteria-text-${r.request_id}`,
      });
      actions.push(
        description,
        button(
          "Issue criteria",
          () =>
            void attempt(async () => {
              await api.issueCriteria(r.request_id, description.value.trim());
              await refresh();
            }),
          { "data-testid": `criteria-${r.request_id}` },
        ),
      );
    }
    if (r.status === "CriteriaIssued") {
      actions.push(
        button(
          "Mark fulfilled",
          () =>
            void attempt(async () => {
              await api.fulfillExemption(r.request_id);
              await refresh();
            }),
          { "data-testid": `fulfill-${r.request_id}` },
        ),
      );
    }
    if (r.status === "Fulfilled") {
      actions.push(
        button(
          "Grant",
          () =>
            void attempt(async () => {
              await api.grantExemption(r.request_id);
              await refresh();
            }),
          { "data-testid": `grant-${r.request_id}` },
        ),
      );
    }
    if (r.status === "Submitted" || r.status === "CriteriaIssued") {
      actions.push(
        button(
          "Deny",
          () =>
            void attempt(async () => {
              await api.denyExemption(r.request_id);
              await refresh();
            }),
          { "data-testid": `deny-${r.request_id}` },
        ),
      );
    }
    return el(
      "div",
      { class: "request", "data-testid": `adm-request-${r.request_id}` },
      el("h3", {}, `${r.request_id} — ${r.student_id} → ${r.policy_id}`),
      el("p", {}, "Status: ", el("strong", { "data-testid": `adm-request-status-${r.request_id}` }, r.status)),
      r.criteria ? el("p", {}, `Criteria: ${r.criteria.description}`) : null,
      el("div", { class: "actions" }, ...actions),
    );
  });
  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Exemption requests"),
    requests.length === 0 ? el("p", {}, "None for this institution.") : el("div", {}, ...rows),
  );
}

export async function renderAdmin(outlet: HTMLElement): Promise<void> {
  const [submissions, policies, requests] = await Promise.all([
    api.listSubmissions(),
    api.listPolicies(),
    api.listExemptions(),
  ]);
  outlet.append(
    queueCard(submissions),
    certifyCard(submissions),
    policyCard(policies),
    requestsCard(requests),
  );
}
