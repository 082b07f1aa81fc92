/** Chat client: transcript rendering, route badges, expandable trace
 * panels, health-gated composer. All displayed numbers come straight from
 * the server. */

import { Api, ApiError, ChatResponse, Trace } from "./api";

export interface AppOptions {
  healthIntervalMs?: number;
}

export interface AppHandle {
  root: HTMLElement;
  input: HTMLInputElement;
  sendButton: HTMLButtonElement;
  banner: HTMLElement;
  transcript: HTMLElement;
  ready: Promise<void>;
  send(text: string): Promise<void>;
  stop(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function sessionId(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c && "randomUUID" in c) return c.randomUUID();
  return `s-${Math.random().toString(36).slice(2)}`;
}

function fmtScore(value: number): string {
  return value.toFixed(4);
}

function renderGateWindow(trace: Trace): HTMLElement {
  const [low, high] = trace.gate.window;
  const ppl = trace.gate.response_perplexity;
  const wrap = el("div", "gate-window");
  wrap.appendChild(
    el(
      "div",
      "gate-window-label",
      `gate window [${fmtScore(low)}, ${fmtScore(high)}]` +
        (ppl === null ? " — no perplexity (empty candidate)" : ` — response perplexity ${fmtScore(ppl)}`),
    ),
  );
  const track = el("div", "gate-track");
  const scale = high * 1.25;
  const pct = (v: number) => `${Math.min(100, Math.max(0, (v / scale) * 100))}%`;
  const band = el("div", "gate-band");
  band.style.left = pct(low);
  band.style.width = `calc(${pct(high)} - ${pct(low)})`;
  track.appendChild(band);
  if (ppl !== null) {
    const marker = el("div", "ppl-marker");
    marker.style.left = pct(ppl);
    marker.title = `response perplexity ${fmtScore(ppl)}`;
    track.appendChild(marker);
  }
  wrap.appendChild(track);
  return wrap;
}

function renderTracePanel(trace: Trace): HTMLElement {
  const panel = el("div", "trace-panel");

  const verdict = el("div", `verdict-line verdict-${trace.gate.verdict}`);
  verdict.appendChild(el("span", "verdict-word", trace.gate.verdict));
  if (trace.gate.verdict !== "accept") {
    verdict.appendChild(
      el(
        "span",
        "fallback-reason",
        trace.gate.verdict === "fallback_low_confidence"
          ? " — generator confidence below the floor; standard response used"
          : " — perplexity outside the gate window; standard response used",
      ),
    );
  }
  panel.appendChild(verdict);
  panel.appendChild(renderGateWindow(trace));

  const gen = el(
    "div",
    "generator-line",
    `generator: "${trace.generator.tokens.join(" ")}" (confidence ${fmtScore(trace.generator.confidence)})`,
  );
  panel.appendChild(gen);

  if (trace.candidates !== null) {
    const table = el("table", "candidate-table");
    const head = el("tr");
    head.appendChild(el("th", undefined, "candidate"));
    head.appendChild(el("th", undefined, "score"));
    table.appendChild(head);
    for (const candidate of trace.candidates) {
      const row = el("tr", "candidate-row");
      if (candidate.tokens.join(" ") === trace.final.join(" ")) row.classList.add("selected");
      row.appendChild(el("td", undefined, candidate.tokens.join(" ")));
      row.appendChild(el("td", undefined, fmtScore(candidate.score)));
      table.appendChild(row);
    }
    panel.appendChild(table);
  }
  return panel;
}

function renderBotBubble(reply: ChatResponse, api: Api): HTMLElement {
  const bubble = el("div", "bubble bot");
  bubble.appendChild(el("div", "bot-text", reply.response));

  const meta = el("div", "meta");
  meta.appendChild(el("span", `route-badge route-${reply.route}`, reply.route));
  const toggle = el("button", "trace-toggle", "trace");
  toggle.type = "button";
  meta.appendChild(toggle);
  bubble.appendChild(meta);

  let panel: HTMLElement | null = null;
  let loading = false;
  toggle.addEventListener("click", async () => {
    if (panel) {
      panel.hidden = !panel.hidden;
      return;
    }
    if (loading) return;
    loading = true;
    try {
      const trace = await api.trace(reply.trace_ref);
      panel = renderTracePanel(trace);
      meta.appendChild(el("span", `verdict-badge verdict-${trace.gate.verdict}`, trace.gate.verdict));
    } catch (err) {
      panel = el(
        "div",
        "trace-panel trace-expired",
        err instanceof ApiError && err.status === 404 ? "trace expired" : "trace unavailable",
      );
    } finally {
      loading = false;
    }
    bubble.appendChild(panel);
  });
  return bubble;
}

export function createApp(root: HTMLElement, api: Api, options: AppOptions = {}): AppHandle {
  const interval = options.healthIntervalMs ?? 700;
  const session = sessionId();

  const banner = el("div", "banner", "engine loading…");
  banner.id = "banner";
  const transcript = el("main", "transcript");
  transcript.id = "transcript";
  const form = el("form", "composer");
  form.id = "composer";
  const input = el("input", "chat-input");
  input.id = "chat-input";
  input.placeholder = "say something…";
  input.autocomplete = "off";
  const sendButton = el("button", "send-btn", "send");
  sendButton.id = "send-btn";
  sendButton.type = "submit";
  form.appendChild(input);
  form.appendChild(sendButton);

  const header = el("header");
  header.appendChild(el("h1", undefined, "stylebot"));
  root.appendChild(header);
  root.appendChild(banner);
  root.appendChild(transcript);
  root.appendChild(form);

  let engineReady = false;
  let inflight = false;
  let stopped = false;

  function refreshControls(): void {
    const blank = input.value.trim().length === 0;
    input.disabled = !engineReady || inflight;
    sendButton.disabled = !engineReady || inflight || blank;
    banner.hidden = engineReady;
  }

  async function checkHealth(): Promise<boolean> {
    try {
      const health = await api.health();
      return health.status === "ok";
    } catch {
      return false;
    }
  }

  let resolveReady!: () => void;
  const ready = new Promise<void>((resolve) => {
    resolveReady = resolve;
  });

  async function pollUntilReady(): Promise<void> {
    while (!stopped) {
      if (await checkHealth()) {
        engineReady = true;
        refreshControls();
        resolveReady();
        return;
      }
      engineReady = false;
      refreshControls();
      await new Promise((r) => setTimeout(r, interval));
    }
  }

  function appendErrorBubble(text: string, utterance: string): void {
    const bubble = el("div", "bubble bot error");
    bubble.appendChild(el("div", "bot-text", `error: ${text}`));
    const retry = el("button", "retry", "retry");
    retry.type = "button";
    retry.addEventListener("click", () => {
      bubble.remove();
      void send(utterance);
    });
    bubble.appendChild(retry);
    transcript.appendChild(bubble);
  }

  async function send(text: string): Promise<void> {
    const utterance = text.trim();
    if (!utterance || inflight || !engineReady) return;
    inflight = true;
    refreshControls();
    const turn = el("div", "turn");
    turn.appendChild(el("div", "bubble user", utterance));
    transcript.appendChild(turn);
    try {
      const reply = await api.chat(session, utterance);
      turn.appendChild(renderBotBubble(reply, api));
    } catch (err) {
      if (err instanceof ApiError && err.status === 503) {
        engineReady = false;
        appendErrorBubble("engine loading", utterance);
        void pollUntilReady();
      } else if (err instanceof ApiError) {
        appendErrorBubble(err.message, utterance);
      } else {
        appendErrorBubble("network failure", utterance);
      }
    } finally {
      inflight = false;
      refreshControls();
      transcript.scrollTop = transcript.scrollHeight;
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = "";
    refreshControls();
    void send(text);
  });
  input.addEventListener("input", refreshControls);

  refreshControls();
  void pollUntilReady();

  return {
    root,
    input,
    sendButton,
    banner,
    transcript,
    ready,
    send,
    stop() {
      stopped = true;
    },
  };
}
