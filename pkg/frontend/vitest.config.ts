import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000,
    hookTimeout: 30_000,
    // The e2e spawns one real service process; keep files sequential so two
    // suites never race for it.
    fileParallelism: false,
  },
});
