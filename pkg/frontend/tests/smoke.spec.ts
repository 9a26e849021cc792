import { afterAll, beforeAll, expect, test } from "vitest";
import { setGatewayUrl } from "../src/config";
import { startGateway, type Gateway } from "./gateway";
import { mountApp } from "./helpers";

let gw: Gateway;

beforeAll(async () => {
  gw = await startGateway();
  setGatewayUrl(gw.baseUrl);
});

afterAll(() => gw.stop());

test("app mounts and fetch reaches the live gateway", async () => {
  await mountApp();
  expect(document.querySelector("h1")?.textContent).toBe("Credential Portal");
  const response = await fetch(`${gw.baseUrl}/verify/00`);
  expect(response.ok).toBe(true);
  const body = await response.json();
  expect(body.authentic).toBe(false);
});
