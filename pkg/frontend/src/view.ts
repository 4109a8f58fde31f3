// Render functions produce a plain node tree; mounting it onto the real
// DOM lives in dom.ts. Keeping the tree inspectable lets the scripted
// tests assert exactly what the panel shows without a browser.

import {
  Banner,
  OrderFormInput,
  STAGES,
  TERMINAL_STATES,
  ViewState,
  stageIndex,
  validateOrderForm,
} from './state.js';
import type { DecisionView, FillView, OrderView, SessionView } from './types.js';

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
  on?: Record<string, (payload?: unknown) => void>;
}

export function h(tag: string, attrs: Record<string, string> = {},
                  children: (VNode | string)[] = [],
                  on?: Record<string, (payload?: unknown) => void>): VNode {
  return { tag, attrs, children, ...(on ? { on } : {}) };
}

/** Depth-first search used by tests and by nothing else. */
export function findAll(root: VNode, predicate: (n: VNode) => boolean): VNode[] {
  const out: VNode[] = [];
  const walk = (node: VNode | string) => {
    if (typeof node === 'string') return;
    if (predicate(node)) out.push(node);
    node.children.forEach(walk);
  };
  walk(root);
  return out;
}

export function textOf(node: VNode): string {
  return node.children
    .map((c) => (typeof c === 'string' ? c : textOf(c)))
    .join(' ');
}

export interface Actions {
  submitOrder: (input: OrderFormInput) => void;
  decide: (sessionId: string, accept: boolean) => void;
}

// --- order entry ------------------------------------------------------------

export function orderForm(input: OrderFormInput, actions: Actions,
                          submitted: boolean): VNode {
  const error = submitted ? validateOrderForm(input) : null;
  return h('form', { class: 'order-form', id: 'order-form' }, [
    h('input', { id: 'buy-asset', placeholder: 'buy asset', value: input.buyAsset }),
    h('input', { id: 'sell-asset', placeholder: 'sell asset', value: input.sellAsset }),
    h('input', { id: 'size', placeholder: 'size (units)', value: input.size }),
    h('input', { id: 'limit', placeholder: 'limit price (optional)', value: input.limitPrice }),
    h('button', { type: 'submit', id: 'place-order' }, ['place order']),
    ...(error ? [h('p', { class: 'form-error' }, [error])] : []),
  ], {
    submit: () => {
      if (validateOrderForm(input) === null) actions.submitOrder(input);
    },
  });
}

export function ordersTable(orders: OrderView[]): VNode {
  return h('table', { class: 'orders', id: 'orders' }, [
    h('thead', {}, [h('tr', {}, [
      h('th', {}, ['pair']), h('th', {}, ['size']), h('th', {}, ['filled']),
      h('th', {}, ['residual']), h('th', {}, ['limit']), h('th', {}, ['status']),
    ])]),
    h('tbody', {}, orders.map((o) =>
      h('tr', { 'data-order': o.order_id, class: `order-${o.status}` }, [
        h('td', {}, [`${o.buy_asset}/${o.sell_asset}`]),
        h('td', {}, [String(o.size)]),
        h('td', {}, [String(o.filled)]),
        h('td', {}, [String(o.residual)]),
        h('td', {}, [o.limit_price ?? 'market']),
        h('td', { class: 'status' }, [o.status]),
      ]))),
  ]);
}

// --- the confirm/abort moment -------------------------------------------------

export function decisionPanel(
  items: { decision: DecisionView; remaining: number; expired: boolean }[],
  actions: Actions,
): VNode {
  return h('section', { id: 'decisions' },
    items.length === 0
      ? [h('p', { class: 'empty' }, ['no pending matches'])]
      : items.map(({ decision, remaining, expired }) =>
          decisionRow(decision, remaining, expired, actions)));
}

function decisionRow(decision: DecisionView, remaining: number,
                     expired: boolean, actions: Actions): VNode {
  const check = decision.price_check;
  const failing = check.verdict !== 'pass';
  const verdictLine = check.verdict === 'pass'
    ? `price check passed (quoted ${check.quoted}, reference ${check.reference})`
    : check.verdict === 'fail'
      ? `PRICE CHECK FAILED: quoted ${check.quoted} vs reference ${check.reference ?? '?'}`
      : `price reference unavailable: ${check.warning ?? ''}`;
  if (expired) {
    return h('article', {
      class: 'decision expired',
      'data-session': decision.session_id,
    }, [
      h('p', {}, [`match at ${decision.ticket.market_price} expired unanswered`]),
    ]);
  }
  return h('article', {
    class: `decision ${failing ? 'check-failed' : 'check-passed'}`,
    'data-session': decision.session_id,
  }, [
    h('h3', {}, [`matched at ${decision.ticket.market_price} on ${decision.ticket.instrument}`]),
    h('p', { class: `price-check ${check.verdict}` }, [verdictLine]),
    h('p', { class: 'countdown' }, [`${remaining}s to answer`]),
    h('p', { class: 'binding-warning' },
      ['accepting is binding: abandoning the trade after this gets you expelled']),
    h('button', {
      class: 'accept',
      'data-needs-confirmation': failing ? 'true' : 'false',
      ...(failing ? {} : { autofocus: 'true' }),
    }, [failing ? 'accept anyway' : 'accept'], {
      click: () => actions.decide(decision.session_id, true),
    }),
    h('button', {
      class: 'decline',
      ...(failing ? { autofocus: 'true' } : {}),
    }, ['decline'], {
      click: () => actions.decide(decision.session_id, false),
    }),
  ]);
}

// --- session progress ------------------------------------------------------------

export function sessionTracker(sessions: SessionView[]): VNode {
  return h('section', { id: 'sessions' }, sessions.map(sessionRow));
}

function sessionRow(session: SessionView): VNode {
  const terminal = TERMINAL_STATES[session.state];
  const current = stageIndex(session.round);
  const fillText = session.state === 'filled' ? 'filled' : terminal;
  return h('article', {
    class: `session ${terminal ? 'terminal' : 'running'}`,
    'data-session': session.session_id,
  }, [
    h('ol', { class: 'stages' }, STAGES.map((label, i) =>
      h('li', {
        class: i === current && !terminal ? 'stage current' : 'stage',
        'data-stage': label,
      }, [label]))),
    ...(session.verdict
      ? [h('p', { class: 'verdict' }, [
          session.verdict.we_reveal
            ? 'our order is the smaller: revealing size'
            : 'counterparty reveals their (smaller) size',
        ])]
      : []),
    ...(terminal
      ? [h('p', {
          class: session.state.startsWith('peer_') ? 'terminal-banner red' : 'terminal-banner',
        }, [fillText ?? session.state])]
      : []),
  ]);
}

// --- fills -----------------------------------------------------------------------

export function fillsTable(fills: FillView[]): VNode {
  return h('table', { id: 'fills' }, [
    h('thead', {}, [h('tr', {}, [
      h('th', {}, ['instrument']), h('th', {}, ['size']), h('th', {}, ['price']),
    ])]),
    h('tbody', {}, fills.map((f) =>
      h('tr', { class: 'fill', 'data-session': f.session_id }, [
        h('td', {}, [f.instrument ?? '?']),
        h('td', {}, [String(f.size)]),
        h('td', {}, [f.price ?? '?']),
      ]))),
  ]);
}

export function banners(items: Banner[]): VNode {
  return h('div', { id: 'banners' }, items.map((b) =>
    h('p', { class: `banner ${b.kind === 'error' ? '' : 'red'} ${b.kind}` }, [b.text])));
}

// --- whole panel --------------------------------------------------------------------

export function app(state: ViewState,
                    decisions: { decision: DecisionView; remaining: number; expired: boolean }[],
                    form: OrderFormInput, formSubmitted: boolean,
                    actions: Actions): VNode {
  return h('main', { class: 'panel' }, [
    h('header', {}, [
      h('h1', {}, ['dark pool panel']),
      h('p', { class: state.connected ? 'conn ok' : 'conn down' },
        [state.connected ? 'daemon connected' : 'daemon unreachable']),
    ]),
    banners(state.banners),
    h('h2', {}, ['new order']),
    orderForm(form, actions, formSubmitted),
    h('h2', {}, ['orders']),
    ordersTable(state.orders),
    h('h2', {}, ['pending matches']),
    decisionPanel(decisions, actions),
    h('h2', {}, ['sessions']),
    sessionTracker(state.sessions),
    h('h2', {}, ['fills']),
    fillsTable(state.fills),
  ]);
}
