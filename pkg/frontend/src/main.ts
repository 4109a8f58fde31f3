// Panel bootstrap: one store, one poll loop, one event stream, re-render
// on every change. All daemon traffic is asynchronous; the last snapshot
// wins whenever polling and pushes disagree momentarily.

import { DaemonApi } from './api.js';
import { OrderFormInput, Store } from './state.js';
import { mount } from './dom.js';
import { app } from './view.js';

const POLL_INTERVAL_MS = 2000;

export function boot(root: Element, base?: string) {
  const api = new DaemonApi(base ?? `http://${location.hostname}:7800`);
  const store = new Store();
  const form: OrderFormInput = { buyAsset: '', sellAsset: '', size: '', limitPrice: '' };
  let formSubmitted = false;

  const actions = {
    submitOrder(input: OrderFormInput) {
      formSubmitted = true;
      api.placeOrder(
        input.buyAsset.trim(), input.sellAsset.trim(),
        Number(input.size), input.limitPrice.trim() || undefined,
      ).then(() => {
        form.buyAsset = form.sellAsset = form.size = form.limitPrice = '';
        formSubmitted = false;
        refresh();
      }).catch((err) => {
        store.applyEvent({
          event: 'error', data: { detail: String(err.message ?? err) }, at: Date.now() / 1000,
        });
      });
      render();
    },
    decide(sessionId: string, accept: boolean) {
      api.decide(sessionId, accept).then(refresh).catch((err) => {
        store.applyEvent({
          event: 'error', data: { detail: String(err.message ?? err) }, at: Date.now() / 1000,
        });
      });
    },
  };

  function readForm() {
    for (const [field, id] of [
      ['buyAsset', 'buy-asset'], ['sellAsset', 'sell-asset'],
      ['size', 'size'], ['limitPrice', 'limit'],
    ] as const) {
      const el = root.ownerDocument.getElementById(id);
      if (el instanceof HTMLInputElement) form[field] = el.value;
    }
  }

  function render() {
    mount(root, app(store.state, store.openDecisions(), form, formSubmitted, actions));
  }

  async function refresh() {
    try {
      const [status, orders, decisions, sessions, fills] = await Promise.all([
        api.status(), api.orders(), api.decisions(), api.sessions(), api.fills(),
      ]);
      store.applySnapshot({ status, orders, decisions, sessions, fills });
    } catch {
      store.state = { ...store.state, connected: false };
      render();
    }
  }

  root.addEventListener('input', readForm);
  store.subscribe(render);
  render();
  refresh();
  setInterval(refresh, POLL_INTERVAL_MS);
  setInterval(render, 1000); // countdowns tick even without traffic

  (async function streamForever() {
    for (;;) {
      try {
        await api.streamEvents((event) => store.applyEvent(event));
      } catch {
        // stream dropped; polling covers the gap
      }
      await new Promise((r) => setTimeout(r, 1000));
    }
  })();
}

declare global {
  interface Window { darkpoolBoot?: typeof boot }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined') {
  window.darkpoolBoot = boot;
  const root = document.getElementById('app');
  if (root) {
    const params = new URLSearchParams(location.search);
    boot(root, params.get('daemon') ?? undefined);
  }
}
