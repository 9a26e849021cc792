// Hash-routed single-page shell. Screens render only confirmed server state:
// every action awaits the gateway, then re-fetches whatever it touched.
//
// Navigation discipline: changing location.hash is the only way to switch
// screens, and route() is the only function that writes to the outlet. Each
// screen is built off-DOM first, then swapped in whole — a navigation that
// starts while a slower one is still fetching supersedes it (the stale build
// is dropped), so the visible DOM never mixes two screens.

import { ApiError } from "./api";
import { clear, el } from "./dom";
import { clearSession, getSession } from "./session";
import { renderAdmin } from "./views/admin";
import { renderLogin } from "./views/login";
import { renderStudent } from "./views/student";
import { renderVerify } from "./views/verify";

let outlet: HTMLElement;
let banner: HTMLElement;
let nav: HTMLElement;

export function roleHome(role: string): string {
  if (role === "Student") return "#/student";
  if (role === "InstitutionAdmin") return "#/admin";
  return "#/verify";
}

/** Render a gateway failure verbatim: machine code, then message. */
export function showError(err: unknown): void {
  clear(banner);
  const text =
    err instanceof ApiError
      ? `${err.code}: ${err.message}`
      : err instanceof Error
        ? err.message
        : String(err);
  banner.append(
    el("div", { class: "error-banner", role: "alert", "data-testid": "error-banner" }, text),
  );
}

export function clearError(): void {
  clear(banner);
}

/** Run a gateway action; on failure render the error and report false. */
export async function attempt(action: () => Promise<unknown>): Promise<boolean> {
  clearError();
  try {
    await action();
    return true;
  } catch (err) {
    showError(err);
    return false;
  }
}

function renderNav(): void {
  clear(nav);
  const session = getSession();
  const links: [string, string][] = [["Verify a certificate", "#/verify"]];
  if (!session) {
    links.unshift(["Sign in", "#/login"]);
  } else if (session.role === "Student") {
    links.unshift(["My dashboard", "#/student"]);
  } else if (session.role === "InstitutionAdmin") {
    links.unshift(["Admin dashboard", "#/admin"]);
  }
  for (const [label, hash] of links) {
    nav.append(el("a", { href: hash }, label));
  }
  if (session) {
    nav.append(
      el("span", { class: "whoami", "data-testid": "whoami" }, `${session.identityId} (${session.role})`),
    );
    const logout = el("a", { href: "#/login", class: "logout" }, "Sign out");
    logout.addEventListener("click", (event) => {
      event.preventDefault();
      clearSession();
      if (location.hash === "#/login") {
        void route();
      } else {
        location.hash = "#/login";
      }
    });
    nav.append(logout);
  }
}

let renderSeq = 0;

async function route(): Promise<void> {
  const seq = ++renderSeq;
  clearError();
  renderNav();
  const session = getSession();
  const hash = location.hash || "#/login";
  let screen: HTMLElement;
  if (hash.startsWith("#/student")) {
    if (!session || session.role !== "Student") {
      location.hash = "#/login";
      return;
    }
    screen = await renderStudent();
  } else if (hash.startsWith("#/admin")) {
    if (!session || session.role !== "InstitutionAdmin") {
      location.hash = "#/login";
      return;
    }
    screen = await renderAdmin();
  } else if (hash.startsWith("#/verify")) {
    screen = renderVerify();
  } else {
    screen = renderLogin();
  }
  if (seq !== renderSeq) return; // a newer navigation superseded this build
  clear(outlet);
  outlet.append(screen);
}

/** Re-render the current screen from fresh server state. */
export async function refresh(): Promise<void> {
  await route();
}

let hashListener: (() => void) | null = null;

export function initApp(root: HTMLElement): Promise<void> {
  clear(root);
  banner = el("div", { id: "banner" });
  nav = el("nav", { id: "nav" });
  outlet = el("main", { id: "outlet" });
  root.append(el("header", {}, el("h1", {}, "Credential Portal"), nav), banner, outlet);
  if (hashListener) window.removeEventListener("hashchange", hashListener);
  hashListener = () => void route();
  window.addEventListener("hashchange", hashListener);
  return route();
}
