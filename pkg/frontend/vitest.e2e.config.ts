import { defineConfig } from "vitest/config";

// Drives the real HTTP service end to end; start-up and run polling need
// generous timeouts and a single worker so only one server spawns.
export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["e2e/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
    fileParallelism: false,
  },
});
