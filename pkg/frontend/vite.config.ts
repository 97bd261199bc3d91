import { defineConfig } from 'vitest/config';

// The dev server proxies /api to the simulator service so the UI stays
// same-origin; set EWCELL_API to point elsewhere.
export default defineConfig({
  server: {
    proxy: {
      '/api': {
        target: process.env.EWCELL_API ?? 'http://127.0.0.1:8000',
        changeOrigin: true,
        rewrite: (path) => path.replace(/^\/api/, ''),
      },
    },
  },
  test: {
    environment: 'node',
  },
});
