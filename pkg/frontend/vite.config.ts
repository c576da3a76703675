/// <reference types="vitest/config" />
import { defineConfig } from "vite";

export default defineConfig({
  // Relative base so the bundle works when the service mounts it at any path.
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  test: {
    environment: "happy-dom",
    testTimeout: 15_000,
    hookTimeout: 60_000,
  },
});
