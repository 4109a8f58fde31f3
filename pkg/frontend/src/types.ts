// Shapes of the trader daemon's loopback API. Sizes appear here because
// the daemon is the owner's own process; nothing cryptographic ever does.

export interface DaemonStatus {
  identity: string;
  registered: boolean;
  banned: boolean;
  bit_width: number | null;
  relay: string;
  orders: number;
  open_decisions: number;
  active_sessions: number;
}

export interface OrderView {
  order_id: string;
  buy_asset: string;
  sell_asset: string;
  size: number;
  filled: number;
  residual: number;
  limit_price: string | null;
  status: string;
  timeline: { at: number; status: string }[];
}

export interface PriceCheck {
  verdict: 'pass' | 'fail' | 'unavailable';
  quoted: string;
  reference?: string;
  tolerance?: number;
  warning?: string;
}

export interface MatchTicket {
  session_id: string;
  instrument: string;
  market_price: string;
  role1: string;
  role2: string;
  bit_width: number;
  issued_at: number;
  confirm_deadline: number;
}

export interface DecisionView {
  session_id: string;
  ticket: MatchTicket;
  price_check: PriceCheck;
  expires_at: number;
}

export interface VerdictView {
  smaller_role: number;
  is_strict: boolean;
  we_reveal: boolean;
}

export interface SessionView {
  session_id: string;
  order_id: string;
  role: number;
  round: number;
  stage: string;
  state: string;
  verdict: VerdictView | null;
}

export interface FillView {
  session_id: string;
  order_id: string;
  instrument: string | null;
  price: string | null;
  size: number;
  counterparty: string;
  at: number;
}

export interface DaemonEvent {
  event: string;
  data: Record<string, unknown>;
  at: number;
}
