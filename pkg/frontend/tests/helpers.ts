// DOM-side test utilities: mount the app, poll for expected state, and the
// form/click idioms every spec shares.

import { initApp } from "../src/app";
import { clearSession } from "../src/session";

export async function mountApp(): Promise<HTMLElement> {
  clearSession();
  location.hash = "";
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.append(root);
  await initApp(root);
  return root;
}

export async function waitFor<T>(
  probe: () => T | null | undefined | false,
  what = "condition",
  timeoutMs = 20_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const value = probe();
    if (value) return value;
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

export function byTestId(id: string): HTMLElement | null {
  return document.querySelector(`[data-testid="${id}"]`);
}

export function mustGet(id: string): HTMLElement {
  const node = byTestId(id);
  if (!node) throw new Error(`missing element ${id}`);
  return node;
}

export function setValue(id: string, value: string): void {
  const node = mustGet(id) as HTMLInputElement | HTMLTextAreaElement;
  node.value = value;
}

export function click(id: string): void {
  (mustGet(id) as HTMLButtonElement).click();
}

export async function navigate(hash: string): Promise<void> {
  location.hash = hash;
  // jsdom fires hashchange asynchronously; yield until the router ran
  await new Promise((r) => setTimeout(r, 0));
}

export function bannerText(): string | null {
  return byTestId("error-banner")?.textContent ?? null;
}
