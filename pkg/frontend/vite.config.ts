import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // the labeling session API served by `pointbrush serve`
      "/api": {
        target: process.env.POINTBRUSH_API ?? "http://127.0.0.1:8765",
        changeOrigin: true,
      },
    },
  },
  test: {
    environment: "node",
  },
});
