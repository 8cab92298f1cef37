import { defineConfig } from 'vitest/config';

// Several tests shell out to the scoring package's Python CLI, which
// dominates the runtime; the timeouts account for that, not for any
// slowness in the exporter itself.
export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
