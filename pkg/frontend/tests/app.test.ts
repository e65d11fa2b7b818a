/**
 * Whole-client behavior against a stubbed transport: every mutation is a
 * real HTTP call, nothing updates until the event stream says so, and a
 * seq gap resyncs with one full refetch.
 */
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import type { FetchLike } from "../src/api.js";
import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import {
  inspectionFixture,
  paperFixtures,
  projectionFixture,
  sessionFixture,
} from "./fixtures.js";

interface Call {
  method: string;
  path: string;
  body: unknown;
}

interface Stub {
  api: ApiClient;
  calls: Call[];
}

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function stubApi(): Stub {
  const calls: Call[] = [];
  const papers = new Map(paperFixtures().map((p) => [p.arxiv_id, p]));

  const route = (method: string, path: string): Response => {
    if (method === "POST" && path === "/sessions") {
      return jsonResponse(sessionFixture());
    }
    if (method === "GET" && path === "/sessions/s1") {
      return jsonResponse(sessionFixture());
    }
    if (method === "GET" && path === "/sessions/s1/projection") {
      return jsonResponse(projectionFixture());
    }
    const paperMatch = path.match(/^\/sessions\/s1\/papers\/(.+)$/);
    if (method === "GET" && paperMatch) {
      const paper = papers.get(paperMatch[1]!);
      return paper
        ? jsonResponse(paper)
        : jsonResponse({ error: "UnknownPaper", message: "not here" }, 404);
    }
    if (method === "GET" && path === "/pipelines/p1/nodes/n1") {
      return jsonResponse(inspectionFixture("n1"));
    }
    if (method === "GET" && path === "/pipelines/p2/nodes/n6") {
      return jsonResponse(inspectionFixture("n6"));
    }
    if (method === "GET" && path.startsWith("/pipelines/")) {
      return jsonResponse(
        { error: "NoOutput", message: "nothing to inspect" },
        409,
      );
    }
    if (method === "POST" && path === "/nodes/n1/approve") {
      return jsonResponse(sessionFixture().pipelines[0]);
    }
    if (method === "POST" && path === "/pipelines/p1/nodes/n1/edit") {
      return jsonResponse(sessionFixture().pipelines[0]);
    }
    if (method === "POST" && path.match(/^\/papers\/.+\/state$/)) {
      return jsonResponse({
        arxiv_id: "x",
        relevance_score: 0.5,
        agent_rationale: "r",
        user_state: "neutral",
        excerpt_dropped: false,
      });
    }
    return jsonResponse({ error: "MissingEntity", message: path }, 404);
  };

  const fetchFn: FetchLike = (input, init) => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://stub.local");
    const body =
      typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    calls.push({ method, path: url.pathname, body });
    return Promise.resolve(route(method, url.pathname));
  };

  return { api: new ApiClient("", fetchFn), calls };
}

function frame(seq: number, kind: string, payload: object): string {
  return `id: ${seq}\ndata: ${JSON.stringify({ seq, kind, payload })}\n\n`;
}

const flush = () => new Promise<void>((resolve) => setTimeout(resolve, 0));

describe("App", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.append(root);
  });

  afterEach(() => {
    document.body.innerHTML = "";
  });

  async function started(): Promise<{ app: App; calls: Call[] }> {
    const { api, calls } = stubApi();
    const app = new App(root, api);
    await app.start("s1", { stream: false });
    return { app, calls };
  }

  it("creates a session when started without one", async () => {
    const { api, calls } = stubApi();
    const app = new App(root, api);
    await app.start(undefined, { stream: false });
    expect(calls[0]).toMatchObject({ method: "POST", path: "/sessions" });
    expect(app.sessionId).toBe("s1");
  });

  it("round-trips an approval: API call, then the event moves the badge", async () => {
    const { app, calls } = await started();
    const badge = () =>
      root
        .querySelector('[data-node-id="n1"] .badge')!
        .getAttribute("data-status");
    const sessionGets = () =>
      calls.filter((c) => c.method === "GET" && c.path === "/sessions/s1")
        .length;

    expect(badge()).toBe("awaiting_approval");
    const getsBefore = sessionGets();

    (
      root.querySelector(
        '[data-node-id="n1"] .action.approve',
      ) as HTMLButtonElement
    ).click();
    await flush();

    expect(
      calls.some(
        (c) => c.method === "POST" && c.path === "/nodes/n1/approve",
      ),
    ).toBe(true);
    // The response is not trusted; the badge waits for the stream.
    expect(badge()).toBe("awaiting_approval");

    app.feed.ingest(
      frame(43, "node_approved", { pipeline_id: "p1", node_id: "n1" }),
    );

    expect(badge()).toBe("approved");
    // No reload, no refetch: the badge moved purely from the event.
    expect(sessionGets()).toBe(getsBefore);
  });

  it("cycles a paper verdict Accept, Reject, Neutral through the API", async () => {
    const { app, calls } = await started();
    const glyph = () =>
      root.querySelector('[data-arxiv-id="2401.00003"]') as SVGElement;
    const stateBodies = () =>
      calls
        .filter(
          (c) =>
            c.method === "POST" && c.path === "/papers/2401.00003/state",
        )
        .map((c) => (c.body as { state: string }).state);

    expect(glyph().getAttribute("data-display-state")).toBe("blue");

    glyph().dispatchEvent(new MouseEvent("click"));
    await flush();
    expect(stateBodies()).toEqual(["accepted"]);
    app.feed.ingest(
      frame(43, "user_state_set", {
        arxiv_id: "2401.00003",
        state: "accepted",
      }),
    );
    expect(glyph().getAttribute("data-display-state")).toBe("green");

    glyph().dispatchEvent(new MouseEvent("click"));
    await flush();
    expect(stateBodies()).toEqual(["accepted", "rejected"]);
    app.feed.ingest(
      frame(44, "user_state_set", {
        arxiv_id: "2401.00003",
        state: "rejected",
      }),
    );
    expect(glyph().getAttribute("data-display-state")).toBe("red");

    glyph().dispatchEvent(new MouseEvent("click"));
    await flush();
    expect(stateBodies()).toEqual(["accepted", "rejected", "neutral"]);
    app.feed.ingest(
      frame(45, "user_state_set", {
        arxiv_id: "2401.00003",
        state: "neutral",
      }),
    );
    expect(glyph().getAttribute("data-display-state")).toBe("blue");
  });

  it("refetches everything once on a seq gap", async () => {
    const { app, calls } = await started();
    const sessionGets = () =>
      calls.filter((c) => c.method === "GET" && c.path === "/sessions/s1")
        .length;
    const getsBefore = sessionGets();

    // last_seq is 42; 44 skips a frame this client never saw.
    app.feed.ingest(
      frame(44, "node_approved", { pipeline_id: "p1", node_id: "n1" }),
    );
    await flush();

    expect(sessionGets()).toBe(getsBefore + 1);
    // The skipped patch never landed; the snapshot is authoritative.
    expect(
      root
        .querySelector('[data-node-id="n1"] .badge')!
        .getAttribute("data-status"),
    ).toBe("awaiting_approval");
    expect(app.feed.lastSeq).toBe(42);
  });

  it("refetches when an event is too bulky to patch from", async () => {
    const { app, calls } = await started();
    const sessionGets = () =>
      calls.filter((c) => c.method === "GET" && c.path === "/sessions/s1")
        .length;
    const getsBefore = sessionGets();

    app.feed.ingest(frame(43, "papers_ingested", { papers: [] }));
    await flush();

    expect(sessionGets()).toBe(getsBefore + 1);
  });

  it("edits a payload through the inspector editor", async () => {
    const { app, calls } = await started();
    app.beginEdit("p1", "n1");
    await flush();

    const textarea = root.querySelector(
      ".editor textarea",
    ) as HTMLTextAreaElement;
    expect(textarea).not.toBeNull();
    expect(JSON.parse(textarea.value)).toEqual({
      kind: "keyword_set",
      data: { keywords: ["agents", "interpretability", "steering"] },
    });

    textarea.value = JSON.stringify({
      kind: "keyword_set",
      data: { keywords: ["alpha", "beta"] },
    });
    (root.querySelector(".action.save") as HTMLButtonElement).click();
    await flush();

    const edit = calls.find(
      (c) => c.method === "POST" && c.path === "/pipelines/p1/nodes/n1/edit",
    );
    expect(edit).toBeDefined();
    expect(edit!.body).toEqual({
      payload: { kind: "keyword_set", data: { keywords: ["alpha", "beta"] } },
    });
    expect(app.store.view.editingNode).toBeNull();
  });

  it("rejects malformed editor JSON locally without calling the API", async () => {
    const { app, calls } = await started();
    app.beginEdit("p1", "n1");
    await flush();

    const textarea = root.querySelector(
      ".editor textarea",
    ) as HTMLTextAreaElement;
    textarea.value = "{not json";
    (root.querySelector(".action.save") as HTMLButtonElement).click();
    await flush();

    expect(
      calls.some((c) => c.path === "/pipelines/p1/nodes/n1/edit"),
    ).toBe(false);
    expect(root.querySelector(".status-note.error")).not.toBeNull();
    // Still editing; the user can fix the text.
    expect(app.store.view.editingNode).toBe("n1");
  });

  it("fetches a paper document once for the hover card", async () => {
    const { app, calls } = await started();
    const paperGets = () =>
      calls.filter(
        (c) =>
          c.method === "GET" && c.path === "/sessions/s1/papers/2401.00001",
      ).length;

    app.hover("2401.00001");
    await flush();
    expect(paperGets()).toBe(1);
    const card = root.querySelector(".detail-card")!;
    expect(card.querySelector(".card-title")!.textContent).toBe(
      "Steerable Pipelines for Research Agents",
    );
    expect(card.querySelector(".card-year")!.textContent).toBe("2024");

    app.hover(null);
    app.hover("2401.00001");
    await flush();
    expect(paperGets()).toBe(1);
  });

  it("falls back to the session's node record when inspection has no output", async () => {
    const { app } = await started();
    app.select("p1", "n3");
    await flush();

    const inspector = root.querySelector(".inspector.open")!;
    expect(inspector).not.toBeNull();
    const values = [...inspector.querySelectorAll(".meta-value")].map(
      (n) => n.textContent,
    );
    expect(values).toContain("n3");
    expect(inspector.querySelector(".payload")).toBeNull();
    expect(app.store.inspection!.provenance).toEqual([]);
  });

  it("shows provenance entries for an inspected search output", async () => {
    const { app } = await started();
    app.select("p2", "n6");
    await flush();

    const entries = root.querySelectorAll(".provenance-entry");
    expect(entries.length).toBe(3);
    expect(entries[0]!.querySelector("a")!.getAttribute("href")).toBe(
      "http://arxiv.org/abs/2401.00001v1",
    );
  });

  it("renders the same state to identical DOM twice", async () => {
    const { app } = await started();
    app.render();
    const first = root.innerHTML;
    app.render();
    expect(root.innerHTML).toBe(first);
  });

  it("surfaces API errors in the status note and recovers", async () => {
    const { app, calls } = await started();
    app.materialize("t9");
    await flush();

    const note = root.querySelector(".status-note.error")!;
    expect(note.textContent).toContain("MissingEntity");

    // The next successful mutation clears the note.
    app.approve("n1");
    await flush();
    expect(root.querySelector(".status-note.error")).toBeNull();
    expect(calls.some((c) => c.path === "/tree/t9/materialize")).toBe(true);
  });
});
