// Thin client of the daemon's loopback HTTP API plus its SSE event
// stream. The stream is parsed off a fetch body so the same code runs in
// the browser and under node-based tests.

import type {
  DaemonEvent,
  DaemonStatus,
  DecisionView,
  FillView,
  OrderView,
  SessionView,
} from './types.js';

export type FetchLike = typeof fetch;

export class DaemonApi {
  constructor(
    private base: string,
    private fetchFn: FetchLike = fetch.bind(globalThis),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`);
    const body = await res.json();
    if (!res.ok) throw new Error(body.detail ?? body.error ?? `HTTP ${res.status}`);
    return body as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
    const body = await res.json();
    if (!res.ok) throw new Error(body.detail ?? body.error ?? `HTTP ${res.status}`);
    return body as T;
  }

  status(): Promise<DaemonStatus> {
    return this.get('/status');
  }

  async orders(): Promise<OrderView[]> {
    return (await this.get<{ orders: OrderView[] }>('/orders')).orders;
  }

  async decisions(): Promise<DecisionView[]> {
    return (await this.get<{ decisions: DecisionView[] }>('/decisions')).decisions;
  }

  async sessions(): Promise<SessionView[]> {
    return (await this.get<{ sessions: SessionView[] }>('/sessions')).sessions;
  }

  async fills(): Promise<FillView[]> {
    return (await this.get<{ fills: FillView[] }>('/fills')).fills;
  }

  register(displayName: string): Promise<unknown> {
    return this.post('/register', { display_name: displayName });
  }

  placeOrder(buyAsset: string, sellAsset: string, size: number,
             limitPrice?: string): Promise<OrderView> {
    const payload: Record<string, unknown> = {
      buy_asset: buyAsset,
      sell_asset: sellAsset,
      size,
    };
    if (limitPrice !== undefined && limitPrice !== '') {
      payload.limit_price = limitPrice;
    }
    return this.post<OrderView>('/orders', payload);
  }

  decide(sessionId: string, accept: boolean): Promise<unknown> {
    return this.post(`/decisions/${sessionId}`, { accept });
  }

  /** Consume the SSE stream until aborted; events go to the callback. */
  async streamEvents(onEvent: (e: DaemonEvent) => void,
                     signal?: AbortSignal): Promise<void> {
    const res = await this.fetchFn(`${this.base}/events`, { signal });
    if (!res.body) throw new Error('event stream has no body');
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = '';
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let idx;
      while ((idx = buffer.indexOf('\n\n')) >= 0) {
        const chunk = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 2);
        for (const line of chunk.split('\n')) {
          if (line.startsWith('data:')) {
            try {
              onEvent(JSON.parse(line.slice(5)));
            } catch {
              // tolerate malformed frames; the poll loop reconciles
            }
          }
        }
      }
    }
  }
}
