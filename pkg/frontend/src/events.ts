/**
 * Server-sent-event consumption with strict seq ordering.
 *
 * The server emits one JSON document per frame: {"seq", "kind", "payload"},
 * with comment frames as keepalives. Frames must be applied in seq order;
 * a duplicate (replayed backlog) is dropped and a gap means this client
 * missed events, so the owner must refetch everything and then reset the
 * feed to the refetched seq.
 */
import type { EventMessage } from "./types.js";

// --- frame parsing -------------------------------------------------------------

/**
 * Split raw stream text into complete SSE frames, returning the parsed
 * messages and the unconsumed tail. Comment frames and bare id lines are
 * skipped; only data lines carry the event document.
 */
export function parseEventChunk(buffer: string): {
  messages: EventMessage[];
  rest: string;
} {
  const messages: EventMessage[] = [];
  const frames = buffer.split("\n\n");
  // The last piece is complete only if the buffer ended with a separator;
  // split leaves "" there in that case, so the tail is always safe to keep.
  const rest = frames.pop() ?? "";
  for (const frame of frames) {
    const dataLines: string[] = [];
    for (const line of frame.split("\n")) {
      if (line.startsWith("data:")) {
        dataLines.push(line.slice("data:".length).trimStart());
      }
    }
    if (dataLines.length === 0) continue;
    messages.push(JSON.parse(dataLines.join("\n")) as EventMessage);
  }
  return { messages, rest };
}

// --- ordered delivery ------------------------------------------------------------

export interface FeedHandlers {
  /** Called once per event, in seq order with no gaps. */
  onApply: (message: EventMessage) => void;
  /** Called when a seq gap is detected; the owner must refetch and reset. */
  onGap: (message: EventMessage) => void;
}

export class EventFeed {
  lastSeq: number;
  private buffer = "";
  private resyncing = false;

  constructor(
    private readonly handlers: FeedHandlers,
    lastSeq = 0,
  ) {
    this.lastSeq = lastSeq;
  }

  /** Feed raw stream text; complete frames are dispatched immediately. */
  ingest(text: string): void {
    const { messages, rest } = parseEventChunk(this.buffer + text);
    this.buffer = rest;
    for (const message of messages) {
      this.deliver(message);
    }
  }

  /** Deliver one already-parsed message, enforcing the seq contract. */
  deliver(message: EventMessage): void {
    // While a refetch is in flight the snapshot will cover these anyway.
    if (this.resyncing) return;
    if (message.seq <= this.lastSeq) return;
    if (message.seq === this.lastSeq + 1) {
      this.lastSeq = message.seq;
      this.handlers.onApply(message);
      return;
    }
    this.resyncing = true;
    this.handlers.onGap(message);
  }

  /**
   * Stop applying until reset. The owner calls this when it starts a
   * refetch for reasons other than a gap (a gap sets it by itself), so
   * frames racing the refetch cannot patch documents it will replace.
   */
  beginResync(): void {
    this.resyncing = true;
  }

  /** After a full refetch: resume delivery from the snapshot's seq. */
  reset(lastSeq: number): void {
    this.lastSeq = lastSeq;
    this.buffer = "";
    this.resyncing = false;
  }
}

// --- transport -------------------------------------------------------------------

/**
 * Pump a streaming Response into the feed until the stream ends or stop()
 * is called. Kept separate from EventFeed so tests can drive ingest()
 * directly with synthetic frames.
 */
export function pumpEventStream(
  response: Response,
  feed: EventFeed,
): { done: Promise<void>; stop: () => void } {
  const body = response.body;
  if (body === null) {
    return { done: Promise.resolve(), stop: () => undefined };
  }
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let stopped = false;
  const done = (async () => {
    try {
      for (;;) {
        const { value, done: finished } = await reader.read();
        if (finished || stopped) return;
        feed.ingest(decoder.decode(value, { stream: true }));
      }
    } finally {
      reader.releaseLock();
    }
  })();
  return {
    done,
    stop: () => {
      stopped = true;
      void reader.cancel().catch(() => undefined);
    },
  };
}
