import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the integration suite boots the real pipeline service and runs jobs
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
