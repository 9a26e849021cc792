// The only piece of configuration the portal takes: where the gateway lives.
// Empty string means same-origin. A deployment can set window.GATEWAY_URL
// before loading the bundle; tests point it at their spawned server.

let gatewayUrl: string =
  (globalThis as { GATEWAY_URL?: string }).GATEWAY_URL ?? "";

export function setGatewayUrl(url: string): void {
  gatewayUrl = url.replace(/\/$/, "");
}

export function getGatewayUrl(): string {
  return gatewayUrl;
}
