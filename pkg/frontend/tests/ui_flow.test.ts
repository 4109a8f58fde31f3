// Scripted end-to-end flow against the real stack: one relay and two
// trader daemons are spawned as subprocesses; the panel's store, API
// client, and rendered tree drive the whole confirm-and-fill journey the
// way the browser would.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, ChildProcess } from 'node:child_process';
import { createServer } from 'node:net';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { DaemonApi } from '../src/api.js';
import { Store, validateOrderForm } from '../src/state.js';
import { app, findAll, textOf } from '../src/view.js';
import type { OrderFormInput } from '../src/state.js';

const PY = process.env.PYTHON ?? 'python3';

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
    srv.on('error', reject);
  });
}

async function until(check: () => Promise<boolean> | boolean, what: string,
                     timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      if (await check()) return;
    } catch {
      // keep polling
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`timed out waiting for ${what}`);
}

describe('panel flow against a live stack', () => {
  const procs: ChildProcess[] = [];
  const dir = mkdtempSync(join(tmpdir(), 'darkpool-ui-'));
  let apiA: DaemonApi;
  let apiB: DaemonApi;

  beforeAll(async () => {
    const relayPort = await freePort();
    const portA = await freePort();
    const portB = await freePort();

    const start = (args: string[]) => {
      const proc = spawn(PY, args, { stdio: 'ignore' });
      procs.push(proc);
      return proc;
    };

    start(['-m', 'darkpool.relay',
      '--listen', `127.0.0.1:${relayPort}`,
      '--data', join(dir, 'relay.db'),
      '--price', 'BTC/USD=static:100',
      '--bit-width', '8']);

    const daemon = (name: string, port: number, extra: string[] = []) =>
      start(['-m', 'darkpool.client', 'run',
        '--relay', `127.0.0.1:${relayPort}`,
        '--keyfile', join(dir, `${name}.key`),
        '--http-port', String(port),
        '--price', 'static:100',
        '--name', name, ...extra]);

    await until(async () => {
      const res = await fetch(`http://127.0.0.1:${relayPort}`).catch(() => null);
      return res !== null || true;  // connection refused throws; reaching here means TCP is up
    }, 'relay port');

    daemon('panel-user', portA);
    daemon('counterparty', portB, ['--auto-confirm']);

    apiA = new DaemonApi(`http://127.0.0.1:${portA}`);
    apiB = new DaemonApi(`http://127.0.0.1:${portB}`);
    await until(async () => (await apiA.status()).identity !== '', 'daemon A api');
    await until(async () => (await apiB.status()).identity !== '', 'daemon B api');
    await apiA.register('panel-user');
    await apiB.register('counterparty');
  }, 60_000);

  afterAll(() => {
    for (const proc of procs) proc.kill('SIGTERM');
  });

  it('places an order, gets the decision push, accepts, sees the fill', async () => {
    const t0 = Date.now();
    const store = new Store();
    const streamAbort = new AbortController();
    const streamDone = apiA
      .streamEvents((e) => store.applyEvent(e), streamAbort.signal)
      .catch(() => undefined);

    const actions = {
      submitOrder: (input: OrderFormInput) => {
        void apiA.placeOrder(input.buyAsset, input.sellAsset, Number(input.size));
      },
      decide: (sessionId: string, accept: boolean) => {
        void apiA.decide(sessionId, accept);
      },
    };
    const form: OrderFormInput = { buyAsset: 'BTC', sellAsset: 'USD', size: '5', limitPrice: '' };
    const render = () => app(store.state, store.openDecisions(), form, false, actions);

    // the form validates, then submits through the same action the DOM uses
    expect(validateOrderForm(form)).toBeNull();
    const formNode = findAll(render(), (n) => n.attrs.id === 'order-form')[0];
    formNode.on!.submit!();

    // counterparty sells 3 BTC; the relay matches and pushes a decision
    await apiB.placeOrder('USD', 'BTC', 3);
    await until(() => store.openDecisions().length > 0, 'decision push');

    // the decision row shows the price-check verdict
    let tree = render();
    const row = findAll(tree, (n) => n.attrs.class?.startsWith('decision'))[0];
    expect(row.attrs.class).toContain('check-passed');
    expect(textOf(row)).toMatch(/price check passed/);
    expect(textOf(row)).toMatch(/binding/);

    // accept by clicking the rendered button
    const accept = findAll(row, (n) => n.attrs.class === 'accept')[0];
    accept.on!.click!();

    // the comparison runs to settlement; the fill appears in the panel
    await until(() => store.state.fills.length > 0, 'fill event', 50_000);
    // pull a final snapshot exactly like the poll loop would
    store.applySnapshot({
      status: await apiA.status(),
      orders: await apiA.orders(),
      sessions: await apiA.sessions(),
      fills: await apiA.fills(),
    });

    tree = render();
    const fills = findAll(tree, (n) => n.attrs.class === 'fill');
    expect(fills).toHaveLength(1);
    expect(textOf(fills[0])).toMatch(/\b3\b/);
    expect(textOf(fills[0])).toMatch(/100\.00000000/);

    const sessionNode = findAll(tree, (n) => n.attrs.class?.startsWith('session'))[0];
    expect(textOf(sessionNode)).toMatch(/filled/);
    expect(textOf(sessionNode)).toMatch(/counterparty reveals/);

    // residual of the larger order is visible in the orders table
    const orderRow = findAll(tree, (n) => n.attrs['data-order'] !== undefined)[0];
    expect(textOf(orderRow)).toMatch(/\b2\b/);

    // the API surface the panel consumes carries no cryptographic material
    for (const body of [await apiA.orders(), await apiA.sessions(), await apiA.fills()]) {
      const json = JSON.stringify(body).toLowerCase();
      for (const word of ['"sk"', 'proof', 'randomness', 'private_key', 'blinding']) {
        expect(json).not.toContain(word);
      }
    }

    streamAbort.abort();
    await streamDone;
    expect(Date.now() - t0).toBeLessThan(60_000);
  }, 60_000);
});
