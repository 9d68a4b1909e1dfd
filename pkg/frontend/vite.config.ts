import { defineConfig } from "vitest/config";
import react from "@vitejs/plugin-react";

export default defineConfig({
  plugins: [react()],
  base: "./",
  build: { outDir: "dist" },
  server: {
    proxy: {
      // during development the python service runs separately
      "/model": "http://127.0.0.1:8787",
      "/risk": "http://127.0.0.1:8787",
      "/events": "http://127.0.0.1:8787",
      "/whatif": "http://127.0.0.1:8787",
      "/bats": "http://127.0.0.1:8787",
    },
  },
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.{ts,tsx}"],
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
