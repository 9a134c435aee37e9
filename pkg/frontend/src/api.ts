// Typed client for the ontoquery HTTP API.

export interface Card {
  lines: string[];
  text: string;
}

export interface ProofEntry {
  pattern: string;
  triple: [string, string, string];
}

export type ReplyKind = "answer" | "clarifying-question" | "extraction-report";

export interface BotReply {
  kind: ReplyKind;
  text: string;
  state: string;
  condition: string;
  cards: Card[];
  sparql: string | null;
  proof: ProofEntry[][];
  dot: string | null;
}

export interface SessionInfo {
  session: string;
  state: string;
}

export interface TurnRecord {
  utterance: string;
  reply: BotReply;
  condition: string;
  augmented: string;
}

export interface SessionContext {
  session: string;
  state: string;
  turns: TurnRecord[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `cannot reach server: ${String(err)}`);
  }
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  createSession(): Promise<SessionInfo> {
    return request<SessionInfo>(`${this.base}/sessions`, { method: "POST" });
  }

  sendMessage(sessionId: string, text: string): Promise<BotReply> {
    return request<BotReply>(`${this.base}/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getContext(sessionId: string): Promise<SessionContext> {
    return request<SessionContext>(`${this.base}/sessions/${sessionId}/context`);
  }

  health(): Promise<{ status: string; triples: number }> {
    return request(`${this.base}/health`);
  }
}
