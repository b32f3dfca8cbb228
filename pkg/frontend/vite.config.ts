import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      "/sessions": "http://127.0.0.1:8750",
    },
  },
  test: {
    environment: "jsdom",
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
