// Chat view: message list with kind badges and a proof panel per answer.
//
// All rendered state derives from server data (BotReply objects), so a
// page refresh restores the conversation from the context endpoint alone.

import { ApiClient, ApiError, BotReply } from "./api.js";
import { dotToSvg } from "./dot.js";

const BADGE_TEXT: Record<string, string> = {
  answer: "answer",
  "clarifying-question": "clarification",
  "extraction-report": "extraction",
};

export class ChatView {
  readonly root: HTMLElement;
  readonly messages: HTMLElement;
  readonly input: HTMLInputElement;
  readonly sendButton: HTMLButtonElement;
  readonly status: HTMLElement;
  sessionId: string | null = null;
  private inFlight = false;

  constructor(root: HTMLElement, private api: ApiClient) {
    this.root = root;
    root.innerHTML = `
      <div class="chat">
        <div class="messages" data-role="messages"></div>
        <div class="status" data-role="status"></div>
        <form class="composer" data-role="composer">
          <input type="text" data-role="input" placeholder="Ask a question" autocomplete="off">
          <button type="submit" data-role="send">Send</button>
        </form>
      </div>`;
    this.messages = root.querySelector('[data-role="messages"]')!;
    this.status = root.querySelector('[data-role="status"]')!;
    this.input = root.querySelector('[data-role="input"]')!;
    this.sendButton = root.querySelector('[data-role="send"]')!;
    root.querySelector('[data-role="composer"]')!.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.send(this.input.value);
    });
  }

  async start(): Promise<string> {
    try {
      const info = await this.api.createSession();
      this.sessionId = info.session;
      this.status.textContent = "";
      return info.session;
    } catch (err) {
      this.status.textContent = `Connection failed: ${(err as Error).message}. Retry?`;
      this.status.classList.add("error");
      throw err;
    }
  }

  /** Rebuild the message list from the server's turn history. */
  async restore(sessionId: string): Promise<void> {
    const context = await this.api.getContext(sessionId);
    this.sessionId = context.session;
    this.messages.innerHTML = "";
    for (const turn of context.turns) {
      this.appendUser(turn.utterance);
      this.appendBot(turn.reply);
    }
  }

  async send(text: string): Promise<BotReply | null> {
    const trimmed = text.trim();
    if (!trimmed || this.inFlight || this.sessionId === null) {
      return null;
    }
    this.inFlight = true;
    this.input.value = "";
    this.setComposerEnabled(false);
    this.appendUser(trimmed);
    try {
      const reply = await this.api.sendMessage(this.sessionId, trimmed);
      this.appendBot(reply);
      this.inFlight = false;
      this.setComposerEnabled(true);
      if (reply.kind === "clarifying-question") {
        this.input.focus();
      }
      return reply;
    } catch (err) {
      this.appendSystem(err instanceof ApiError ? `Error ${err.status}: ${err.message}` : String(err));
      return null;
    } finally {
      this.inFlight = false;
      this.setComposerEnabled(true);
    }
  }

  private setComposerEnabled(enabled: boolean): void {
    this.input.disabled = !enabled;
    this.sendButton.disabled = !enabled;
  }

  private appendUser(text: string): void {
    const bubble = document.createElement("div");
    bubble.className = "message user";
    bubble.textContent = text;
    this.messages.appendChild(bubble);
  }

  private appendSystem(text: string): void {
    const bubble = document.createElement("div");
    bubble.className = "message system";
    bubble.textContent = text;
    this.messages.appendChild(bubble);
  }

  private appendBot(reply: BotReply): void {
    const bubble = document.createElement("div");
    bubble.className = `message bot kind-${reply.kind}`;

    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = BADGE_TEXT[reply.kind] ?? reply.kind;
    bubble.appendChild(badge);

    const body = document.createElement("div");
    body.className = "body";
    if (reply.kind === "answer" && reply.cards.length > 0) {
      for (const card of reply.cards) {
        const cardEl = document.createElement("div");
        cardEl.className = "card";
        for (const line of card.lines) {
          const lineEl = document.createElement("div");
          lineEl.textContent = line;
          cardEl.appendChild(lineEl);
        }
        body.appendChild(cardEl);
      }
    } else {
      body.textContent = reply.text;
    }
    bubble.appendChild(body);

    if (reply.kind === "answer") {
      bubble.appendChild(this.buildProofPanel(reply));
    }
    this.messages.appendChild(bubble);
  }

  private buildProofPanel(reply: BotReply): HTMLElement {
    const panel = document.createElement("details");
    panel.className = "proof";
    const summary = document.createElement("summary");
    summary.textContent = "Proof";
    panel.appendChild(summary);

    if (reply.sparql) {
      const pre = document.createElement("pre");
      pre.className = "sparql";
      pre.textContent = reply.sparql;
      panel.appendChild(pre);
    }

    const table = document.createElement("table");
    table.className = "proof-triples";
    const head = table.createTHead().insertRow();
    for (const title of ["Subject", "Predicate", "Object"]) {
      const th = document.createElement("th");
      th.textContent = title;
      head.appendChild(th);
    }
    const tbody = table.createTBody();
    for (const row of reply.proof) {
      for (const entry of row) {
        const tr = tbody.insertRow();
        for (const term of entry.triple) {
          tr.insertCell().textContent = term;
        }
      }
    }
    panel.appendChild(table);

    if (reply.dot) {
      const graph = document.createElement("div");
      graph.className = "graph";
      graph.innerHTML = dotToSvg(reply.dot);
      panel.appendChild(graph);
    }
    return panel;
  }
}
