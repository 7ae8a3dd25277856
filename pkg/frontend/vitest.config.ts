import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the steering test drives a real simulator process end to end
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
