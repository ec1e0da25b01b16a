import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    // reconnect tests wait on real backoff timers
    testTimeout: 15000,
  },
});
