import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/roundtrip.live.test.ts"],
  },
});
