import { App } from './app';

const base = import.meta.env.VITE_API_BASE ?? '/api';
const app = new App(base);
app
  .start()
  .then(() => app.populateColormaps())
  .catch((err) => {
    const node = document.getElementById('result-error');
    if (node) node.textContent = `cannot reach the simulator service: ${err}`;
  });
