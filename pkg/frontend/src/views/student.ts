// Student dashboard: upload a credential claim, track submissions, browse
// the wallet, and walk an exemption request through its lifecycle.

import * as api from "../api";
import { attempt, refresh } from "../app";
import { button, el, field } from "../dom";
import { getSession } from "../session";

function toBase64(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  return btoa(binary);
}

function uploadCard(): HTMLElement {
  const courseId = el("input", { type: "text", "data-testid": "up-course-id" });
  const title = el("input", { type: "text", "data-testid": "up-title" });
  const provider = el("input", { type: "text", "data-testid": "up-provider" });
  const credits = el("input", { type: "text", "data-testid": "up-credits" });
  const completed = el("input", { type: "text", placeholder: "YYYY-MM-DD", "data-testid": "up-completed" });
  const stackId = el("input", { type: "text", placeholder: "optional stack id", "data-testid": "up-stack" });
  const document_ = el("textarea", {
    rows: "4",
    placeholder: "paste the credential document (transcript, certificate text…)",
    "data-testid": "up-document",
  });

  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Upload a credential"),
    field("Course id", courseId),
    field("Title", title),
    field("Provider", provider),
    field("Credits", credits),
    field("Completion date", completed),
    field("Stack", stackId),
    field("Document", document_),
    button(
      "Submit for verification",
      () =>
        void attempt(async () => {
          const course: api.CourseMetadata = {
            course_id: courseId.value.trim(),
            title: title.value.trim(),
            provider: provider.value.trim(),
            credits: credits.value.trim(),
            completion_date: completed.value.trim(),
          };
          const stack = stackId.value.trim();
          if (stack) course.stack_id = stack;
          await api.createSubmission(course, [
            { name: "document.txt", content_b64: toBase64(document_.value) },
          ]);
          await refresh();
        }),
      { "data-testid": "up-submit" },
    ),
  );
}

function submissionsCard(submissions: api.Submission[]): HTMLElement {
  const rows = submissions.map((s) =>
    el(
      "tr",
      { "data-testid": `submission-${s.submission_id}` },
      el("td", {}, s.submission_id),
      el("td", {}, `${s.metadata.course_id} — ${s.metadata.title}`),
      el("td", { "data-testid": `submission-status-${s.submission_id}` }, s.status),
      el("td", {}, s.decided_by ?? ""),
    ),
  );
  return el(
    "section",
    { class: "card" },
    el("h2", {}, "My submissions"),
    submissions.length === 0
      ? el("p", {}, "Nothing submitted yet.")
      : el(
          "table",
          {},
          el(
            "thead",
            {},
            el("tr", {}, el("th", {}, "Id"), el("th", {}, "Course"), el("th", {}, "Status"), el("th", {}, "Decided by")),
          ),
          el("tbody", {}, ...rows),
        ),
  );
}

function walletCard(wallet: api.Wallet): HTMLElement {
  const cards = wallet.tokens.map((token) =>
    el(
      "div",
      { class: "token", "data-testid": `token-${token.token_id}` },
      el("h3", {}, `${token.metadata.title} (${token.metadata.course_id})`),
      el("p", {}, `${token.metadata.provider} · ${token.metadata.credits} credits · completed ${token.metadata.completion_date}`),
      el("p", {}, "Token id: ", el("code", { "data-testid": "token-id" }, token.token_id)),
      el("p", {}, "Anchor: ", el("code", { "data-testid": "token-anchor" }, token.anchor_hash)),
      el("p", {}, `Issued ${token.issued_at}`),
    ),
  );
  return el(
    "section",
    { class: "card" },
    el("h2", {}, `Wallet of ${wallet.owner}`),
    el("p", { "data-testid": "wallet-count" }, `${wallet.tokens.length} token(s)`),
    ...cards,
  );
}

function requirementSummary(req: Record<string, unknown>): string {
  return JSON.stringify(req);
}

function exemptionsCard(
  policies: api.Policy[],
  requests: api.ExemptionRequest[],
): HTMLElement {
  const policyRows = policies.map((p) =>
    el(
      "div",
      { class: "policy", "data-testid": `policy-${p.policy_id}` },
      el("h3", {}, p.policy_id),
      el("p", {}, `Exempts ${p.target_course_id} at ${p.institution}`),
      el("p", {}, `Requires: ${requirementSummary(p.requirement)}`),
      p.assessment_template ? el("p", {}, `Assessment: ${p.assessment_template}`) : null,
      button(
        "Request exemption",
        () =>
          void attempt(async () => {
            await api.createExemption(p.policy_id); // presents the whole wallet
            await refresh();
          }),
        { "data-testid": `request-${p.policy_id}` },
      ),
    ),
  );

  const requestRows = requests.map((r) =>
    el(
      "div",
      { class: "request", "data-testid": `request-row-${r.request_id}` },
      el("h3", {}, `${r.request_id} → ${r.policy_id}`),
      el("p", {}, "Status: ", el("strong", { "data-testid": `request-status-${r.request_id}` }, r.status)),
      r.criteria
        ? el("p", { "data-testid": `request-criteria-${r.request_id}` }, `Assessment criteria: ${r.criteria.description} (issued by ${r.criteria.issued_by})`)
        : null,
      el("p", {}, `Presented tokens: ${r.presented_tokens.length}`),
    ),
  );

  return el(
    "section",
    { class: "card" },
    el("h2", {}, "Course exemptions"),
    el("h3", {}, "Published policies"),
    policies.length === 0 ? el("p", {}, "No policies published.") : el("div", {}, ...policyRows),
    el("h3", {}, "My requests"),
    requests.length === 0 ? el("p", {}, "No requests yet.") : el("div", {}, ...requestRows),
  );
}

export async function renderStudent(outlet: HTMLElement): Promise<void> {
  const session = getSession();
  if (!session) return;
  const [submissions, wallet, policies, requests] = await Promise.all([
    api.listSubmissions(),
    api.getWallet(session.identityId),
    api.listPolicies(),
    api.listExemptions(),
  ]);
  outlet.append(
    uploadCard(),
    submissionsCard(submissions),
    walletCard(wallet),
    exemptionsCard(policies, requests),
  );
}
