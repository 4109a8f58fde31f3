// View state and the logic that maintains it. Pure data in, pure data
// out: every mutation comes from an API snapshot or a stream event, so a
// refresh always reproduces what is on screen.

import type {
  DaemonEvent,
  DaemonStatus,
  DecisionView,
  FillView,
  OrderView,
  SessionView,
} from './types.js';

export const STAGES = [
  'keys',
  'encrypted bits',
  'shuffle',
  'blind',
  'decrypt',
  'verdict',
  'reveal',
] as const;

/** Protocol step number -> position on the stage tracker. */
export function stageIndex(round: number): number {
  if (round <= 6) return 0;        // key exchange and bit preparation
  if (round <= 8) return 1;        // encrypted bits and circuit
  if (round <= 10) return 2;       // the two shuffles
  if (round === 11) return 3;      // blinding
  if (round <= 13) return 4;       // decryption shares
  if (round === 14) return 5;      // verdict
  return 6;                        // reveal and check
}

export const TERMINAL_STATES: Record<string, string> = {
  filled: 'filled',
  aborted: 'aborted',
  expired: 'aborted',
  peer_punished: 'counterparty punished',
  peer_misbehaved: 'counterparty punished',
};

export interface OrderFormInput {
  buyAsset: string;
  sellAsset: string;
  size: string;
  limitPrice: string;
}

/** Client-side validation; an error string means no API call is made. */
export function validateOrderForm(input: OrderFormInput): string | null {
  const buy = input.buyAsset.trim();
  const sell = input.sellAsset.trim();
  if (!buy || !sell) return 'both assets are required';
  if (buy === sell) return 'buy and sell assets must differ';
  if (!/^[0-9]+$/.test(input.size.trim())) {
    return 'size must be a positive integer';
  }
  const size = Number(input.size.trim());
  if (!Number.isSafeInteger(size) || size <= 0) {
    return 'size must be a positive integer';
  }
  if (input.limitPrice.trim() !== '' && !(Number(input.limitPrice) > 0)) {
    return 'limit price must be a positive number';
  }
  return null;
}

export interface Banner {
  kind: 'punish' | 'error' | 'banned';
  text: string;
}

export interface ViewState {
  status: DaemonStatus | null;
  orders: OrderView[];
  decisions: DecisionView[];
  sessions: SessionView[];
  fills: FillView[];
  banners: Banner[];
  connected: boolean;
}

export function emptyState(): ViewState {
  return {
    status: null,
    orders: [],
    decisions: [],
    sessions: [],
    fills: [],
    banners: [],
    connected: false,
  };
}

export function secondsLeft(decision: DecisionView, nowSeconds: number): number {
  return Math.max(0, Math.floor(decision.expires_at - nowSeconds));
}

export function isExpired(decision: DecisionView, nowSeconds: number): boolean {
  return secondsLeft(decision, nowSeconds) <= 0;
}

type Listener = (state: ViewState) => void;

export class Store {
  state: ViewState = emptyState();
  private listeners: Listener[] = [];

  constructor(private now: () => number = () => Date.now() / 1000) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit() {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Poll reconciliation: the latest snapshot wins wholesale. */
  applySnapshot(snapshot: {
    status?: DaemonStatus;
    orders?: OrderView[];
    decisions?: DecisionView[];
    sessions?: SessionView[];
    fills?: FillView[];
  }) {
    this.state = {
      ...this.state,
      status: snapshot.status ?? this.state.status,
      orders: snapshot.orders ?? this.state.orders,
      decisions: snapshot.decisions ?? this.state.decisions,
      sessions: snapshot.sessions ?? this.state.sessions,
      fills: snapshot.fills ?? this.state.fills,
      connected: true,
    };
    this.emit();
  }

  applyEvent(event: DaemonEvent) {
    const data = event.data as Record<string, any>;
    switch (event.event) {
      case 'order':
        this.upsert('orders', 'order_id', data as OrderView);
        break;
      case 'decision':
        this.upsert('decisions', 'session_id', data as DecisionView);
        break;
      case 'decision_taken':
      case 'decision_expired':
        this.state = {
          ...this.state,
          decisions: this.state.decisions.filter(
            (d) => d.session_id !== data.session_id,
          ),
        };
        break;
      case 'session':
        this.upsert('sessions', 'session_id', data as SessionView);
        break;
      case 'fill':
        if (!this.state.fills.some(
          (f) => f.session_id === data.session_id
            && f.order_id === data.order_id)) {
          this.state = { ...this.state, fills: [...this.state.fills, data as FillView] };
        }
        break;
      case 'punish':
        this.state = {
          ...this.state,
          banners: [
            ...this.state.banners,
            data.you
              ? { kind: 'banned', text: 'you were expelled from the pool' }
              : {
                  kind: 'punish',
                  text: `counterparty punished: ${data.reason ?? 'misbehavior'}`,
                },
          ],
        };
        break;
      case 'abort':
        this.state = {
          ...this.state,
          decisions: this.state.decisions.filter(
            (d) => d.session_id !== data.session_id,
          ),
        };
        break;
      case 'error':
        this.state = {
          ...this.state,
          banners: [
            ...this.state.banners,
            { kind: 'error', text: String(data.detail ?? data.code ?? 'error') },
          ],
        };
        break;
      default:
        return; // unknown events are ignored; polling reconciles
    }
    this.emit();
  }

  private upsert<K extends 'orders' | 'decisions' | 'sessions'>(
    collection: K, key: string, value: ViewState[K][number],
  ) {
    const list = this.state[collection] as unknown as Record<string, unknown>[];
    const idx = list.findIndex((item) => item[key] === (value as any)[key]);
    const next = idx >= 0
      ? [...list.slice(0, idx), value, ...list.slice(idx + 1)]
      : [...list, value];
    this.state = { ...this.state, [collection]: next };
  }

  /** Decisions still awaiting the human, newest last. */
  openDecisions(): { decision: DecisionView; remaining: number; expired: boolean }[] {
    const now = this.now();
    return this.state.decisions.map((decision) => ({
      decision,
      remaining: secondsLeft(decision, now),
      expired: isExpired(decision, now),
    }));
  }
}
