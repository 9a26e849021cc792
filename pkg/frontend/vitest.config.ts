import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    // each spec file boots its own gateway; keep them sequential so the
    // python processes don't fight over CPU and the logs stay readable
    fileParallelism: false,
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
