import { defineConfig } from "@playwright/test";

export default defineConfig({
  testDir: "tests",
  testMatch: "**/*.spec.ts",
  timeout: 60_000,
  use: {
    baseURL: process.env.STYLEBOT_UI_BASE ?? "http://127.0.0.1:8717",
  },
});
