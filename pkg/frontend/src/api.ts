/** Typed client for the chat service. The UI renders these values verbatim;
 * no scores or routing decisions are computed client-side. */

export interface ChatResponse {
  response: string;
  route: string;
  turn_id: string;
  trace_ref: string;
}

export interface TraceCandidate {
  tokens: string[];
  score: number;
}

export interface Trace {
  turn_id: string;
  input: string[];
  route: { label: string; probability: number };
  generator: { tokens: string[]; confidence: number };
  candidates: TraceCandidate[] | null;
  gate: {
    response_perplexity: number | null;
    window: [number, number];
    verdict: string;
  };
  final: string[];
  durations_ms: Record<string, number>;
}

export interface Health {
  status: string;
  components: Record<string, boolean>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function errorOf(res: Response): Promise<ApiError> {
  let message = `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, message);
}

export interface Api {
  chat(sessionId: string, utterance: string): Promise<ChatResponse>;
  trace(ref: string): Promise<Trace>;
  health(): Promise<Health>;
}

export function createApi(baseUrl = ""): Api {
  return {
    async chat(sessionId: string, utterance: string): Promise<ChatResponse> {
      const res = await fetch(`${baseUrl}/api/chat`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ session_id: sessionId, utterance }),
      });
      if (!res.ok) throw await errorOf(res);
      return (await res.json()) as ChatResponse;
    },

    async trace(ref: string): Promise<Trace> {
      const path = ref.startsWith("/") ? ref : `/api/trace/${ref}`;
      const res = await fetch(`${baseUrl}${path}`);
      if (!res.ok) throw await errorOf(res);
      return (await res.json()) as Trace;
    },

    async health(): Promise<Health> {
      const res = await fetch(`${baseUrl}/api/health`);
      if (!res.ok) throw await errorOf(res);
      return (await res.json()) as Health;
    },
  };
}
