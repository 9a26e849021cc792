// In-memory session only. Nothing is written to localStorage or cookies, so
// a page refresh drops the token and the user signs in again — that is the
// intended custody model, not an oversight.

export interface Session {
  token: string;
  identityId: string;
  role: string;
  expiresAt: string;
}

let current: Session | null = null;

export function setSession(session: Session): void {
  current = session;
}

export function getSession(): Session | null {
  return current;
}

export function clearSession(): void {
  current = null;
}
