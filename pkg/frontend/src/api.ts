// Typed client for the gateway's JSON API. Every function here maps to one
// documented endpoint — the portal must never talk to anything else, and a
// test enumerates the calls each screen makes to hold it to that.

import { getGatewayUrl } from "./config";
import { getSession } from "./session";

export interface Identity {
  id: string;
  role: string;
  institution: string;
  public_key: string;
}

export interface Track {
  kind: string;
  stack_id?: string | null;
}

export interface CourseMetadata {
  course_id: string;
  title: string;
  provider: string;
  credits: string;
  completion_date: string;
  stack_id?: string; // request-side only
  track?: Track; // response-side only
}

export interface Token {
  token_id: string;
  metadata: CourseMetadata;
  anchor_hash: string;
  issued_at: string;
}

export interface Wallet {
  owner: string;
  tokens: Token[];
}

export interface Submission {
  submission_id: string;
  applicant_id: string;
  status: string;
  metadata: CourseMetadata;
  document_hashes: string[];
  decided_by: string | null;
  timestamps: { created_at: string; decided_at: string | null };
}

export interface Receipt {
  token_id: string;
  anchor_hash: string;
  block_height: number;
}

export interface VerifyCheck {
  name: string;
  passed: boolean;
  detail: string;
}

export interface VerifyResult {
  authentic: boolean;
  checks: VerifyCheck[];
  reason: string | null;
}

export interface Policy {
  policy_id: string;
  institution: string;
  target_course_id: string;
  requirement: Record<string, unknown>;
  assessment_template: string;
  min_total_credits: string | null;
}

export interface ExemptionRequest {
  request_id: string;
  student_id: string;
  policy_id: string;
  status: string;
  presented_tokens: string[];
  criteria: {
    criteria_id: string;
    description: string;
    issued_by: string;
    issued_at: string;
  } | null;
  created_at: string;
}

export interface SessionInfo {
  token: string;
  identity_id: string;
  role: string;
  expires_at: string;
}

export interface RegisterResult {
  identity: Identity;
  wallet: Wallet;
  private_key: string | null;
}

/** A gateway error, carrying the machine envelope verbatim. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail?: unknown,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function call<T>(
  method: string,
  path: string,
  body?: unknown,
  opts: { auth?: boolean } = {},
): Promise<T> {
  const headers: Record<string, string> = {};
  if (body !== undefined) headers["content-type"] = "application/json";
  if (opts.auth !== false) {
    const session = getSession();
    if (session) headers["authorization"] = `Bearer ${session.token}`;
  }
  const response = await fetch(getGatewayUrl() + path, {
    method,
    headers,
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const payload = await response.json();
  if (!response.ok) {
    throw new ApiError(
      payload.status ?? response.status,
      payload.code ?? "unknown_error",
      payload.message ?? "unexpected error",
      payload.detail,
    );
  }
  return payload as T;
}

// -- identity ---------------------------------------------------------------

export function register(
  name: string,
  institution: string,
  publicKey?: string,
): Promise<RegisterResult> {
  const body: Record<string, string> = { name, institution };
  if (publicKey) body.public_key = publicKey;
  return call("POST", "/register", body, { auth: false });
}

export function requestChallenge(id: string): Promise<{ challenge: string }> {
  return call("POST", "/login", { id }, { auth: false });
}

export function redeemChallenge(
  id: string,
  signature: string,
): Promise<SessionInfo> {
  return call("POST", "/login", { id, signature }, { auth: false });
}

// -- submissions and certification -------------------------------------------

export function createSubmission(
  course: CourseMetadata,
  documents: { name?: string; content_b64: string }[],
): Promise<Submission> {
  return call("POST", "/submissions", { course, documents });
}

export function listSubmissions(status?: string): Promise<Submission[]> {
  const query = status ? `?status=${encodeURIComponent(status)}` : "";
  return call("GET", `/submissions${query}`);
}

export function decideSubmission(
  submissionId: string,
  decision: "Verified" | "Rejected",
): Promise<Submission> {
  return call("POST", `/submissions/${submissionId}/decision`, { decision });
}

export function certify(submissionId: string): Promise<Receipt> {
  return call("POST", `/certify/${submissionId}`, {});
}

export function getWallet(ownerId: string): Promise<Wallet> {
  return call("GET", `/wallets/${ownerId}`);
}

export function verify(reference: string): Promise<VerifyResult> {
  return call("GET", `/verify/${reference}`, undefined, { auth: false });
}

// -- exemptions ---------------------------------------------------------------

export function createPolicy(policy: {
  policy_id: string;
  institution: string;
  target_course_id: string;
  requirement: Record<string, unknown>;
  assessment_template?: string;
  min_total_credits?: string;
}): Promise<Policy> {
  return call("POST", "/policies", policy);
}

export function listPolicies(): Promise<Policy[]> {
  return call("GET", "/policies");
}

export function createExemption(
  policyId: string,
  tokenIds: string[] = [],
): Promise<ExemptionRequest> {
  return call("POST", "/exemptions", {
    policy_id: policyId,
    token_ids: tokenIds,
  });
}

export function listExemptions(): Promise<ExemptionRequest[]> {
  return call("GET", "/exemptions");
}

export function issueCriteria(
  requestId: string,
  description: string,
): Promise<ExemptionRequest> {
  return call("POST", `/exemptions/${requestId}/criteria`, { description });
}

export function fulfillExemption(requestId: string): Promise<ExemptionRequest> {
  return call("POST", `/exemptions/${requestId}/fulfill`);
}

export function grantExemption(
  requestId: string,
): Promise<{ request: ExemptionRequest; grant: Record<string, unknown> }> {
  return call("POST", `/exemptions/${requestId}/grant`);
}

export function denyExemption(requestId: string): Promise<ExemptionRequest> {
  return call("POST", `/exemptions/${requestId}/deny`);
}
