import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the UI-loop test boots the segmentation server in a hook
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
