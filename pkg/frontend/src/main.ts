/**
 * Entry point: configuration is the server address, campaign id, and the
 * evaluator's token, read from query parameters:
 *
 *   index.html?server=http://127.0.0.1:8000&campaign=<id>&token=<token>
 */

import { ApiClient, fetchTransport } from './api.js';
import { SessionController } from './session.js';
import { renderView } from './view.js';

function param(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

function boot(): void {
  const root = document.getElementById('app');
  if (!root) {
    throw new Error('missing #app element');
  }
  const server = param('server') ?? 'http://127.0.0.1:8000';
  const campaign = param('campaign');
  const token = param('token');
  if (!campaign || !token) {
    root.textContent = 'configure via query parameters: ?server=…&campaign=…&token=…';
    return;
  }
  const client = new ApiClient(server, campaign, token, fetchTransport());
  const controller: SessionController = new SessionController(client, (view) =>
    renderView(root, view, controller),
  );
  void controller.start();
}

boot();
