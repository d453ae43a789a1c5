import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 300_000,
    hookTimeout: 60_000,
    // tfjs state is process-global; keep runs sequential and deterministic
    fileParallelism: false,
  },
});
