/**
 * Top-level application: fetches the session, renders the three
 * coordinated views plus the inspector, and keeps them current from the
 * event stream. All mutations go through the API client; handlers never
 * patch the store themselves, so what the user sees always came from a
 * fetch or an applied event. A seq gap, or any event the reducer cannot
 * apply faithfully, triggers one full refetch.
 */
import { ApiClient, ApiError } from "./api.js";
import { el, clear } from "./dom.js";
import { EventFeed, pumpEventStream } from "./events.js";
import { SessionStore } from "./store.js";
import type { InspectionDoc, UserState } from "./types.js";
import { NEXT_USER_STATE } from "./types.js";
import { renderInspector } from "./views/inspector.js";
import { renderProjection } from "./views/projection.js";
import { renderTree } from "./views/tree.js";
import { renderWorkflow } from "./views/workflow.js";

const RECONNECT_DELAY_MS = 2000;

export class App {
  readonly store = new SessionStore();
  readonly feed: EventFeed;

  private stopStream: (() => void) | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private refetching: Promise<void> | null = null;
  private stopped = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.feed = new EventFeed({
      onApply: (message) => {
        if (this.store.applyEvent(message) === "refetch") {
          this.feed.beginResync();
          void this.refetchAll();
        } else {
          this.store.emit();
        }
      },
      onGap: () => {
        void this.refetchAll();
      },
    });
    this.store.subscribe(() => this.render());
  }

  /** Fetch or create the session, paint, and (optionally) follow events. */
  async start(sessionId?: string, options: { stream?: boolean } = {}): Promise<void> {
    const session = sessionId
      ? await this.api.getSession(sessionId)
      : await this.api.createSession();
    this.store.loadSession(session);
    this.feed.reset(session.last_seq);
    await this.refreshProjection();
    this.store.emit();
    if (options.stream ?? true) this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.stopStream) this.stopStream();
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
  }

  get sessionId(): string {
    const session = this.store.session;
    if (session === null) throw new Error("no session loaded");
    return session.session_id;
  }

  // --- stream -----------------------------------------------------------------

  private connect(): void {
    if (this.stopped) return;
    void this.api
      .openEvents(this.sessionId, this.feed.lastSeq)
      .then((response) => {
        const pump = pumpEventStream(response, this.feed);
        this.stopStream = pump.stop;
        return pump.done;
      })
      .catch(() => {
        this.store.setNote({ level: "error", text: "event stream dropped" });
        this.store.emit();
      })
      .finally(() => {
        // The server closed the stream or the fetch failed; come back.
        if (this.stopped) return;
        this.reconnectTimer = setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
      });
  }

  /** One full resync: session, projection, then resume the feed. */
  private refetchAll(): Promise<void> {
    if (this.refetching) return this.refetching;
    this.refetching = (async () => {
      try {
        const session = await this.api.getSession(this.sessionId);
        this.store.loadSession(session);
        await this.refreshProjection();
        this.feed.reset(session.last_seq);
      } catch (error) {
        this.noteError(error);
      } finally {
        this.refetching = null;
        this.store.emit();
      }
    })();
    return this.refetching;
  }

  private async refreshProjection(): Promise<void> {
    const session = this.store.session;
    if (session === null) return;
    if (!session.has_projection) {
      this.store.loadProjection(null);
      return;
    }
    this.store.loadProjection(
      await this.api.getProjection(session.session_id),
    );
  }

  // --- actions ----------------------------------------------------------------

  private noteError(error: unknown): void {
    const text =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : String(error);
    this.store.setNote({ level: "error", text });
    this.store.emit();
  }

  /** Run an API mutation; state changes arrive via the event stream. */
  private mutate(call: () => Promise<unknown>): void {
    void call()
      .then(() => {
        if (this.store.note !== null) {
          this.store.setNote(null);
          this.store.emit();
        }
      })
      .catch((error) => this.noteError(error));
  }

  startPipeline(queryText: string): void {
    const text = queryText.trim();
    if (!text) return;
    this.mutate(() => this.api.createPipeline(this.sessionId, text));
  }

  step(pipelineId: string): void {
    this.mutate(() => this.api.step(pipelineId));
  }

  approve(nodeId: string): void {
    this.mutate(() => this.api.approve(nodeId));
  }

  rerun(nodeId: string): void {
    this.mutate(() => this.api.rerun(nodeId));
  }

  beginEdit(pipelineId: string, nodeId: string): void {
    this.store.view.editingNode = nodeId;
    this.select(pipelineId, nodeId);
  }

  submitEdit(text: string): void {
    const inspection = this.store.inspection;
    if (inspection === null) return;
    let payload: Record<string, unknown>;
    try {
      payload = JSON.parse(text) as Record<string, unknown>;
    } catch (error) {
      this.noteError(error);
      return;
    }
    const nodeId = inspection.node.node_id;
    const pipelineId = inspection.pipeline_id;
    void this.api
      .edit(pipelineId, nodeId, payload)
      .then(() => {
        this.store.view.editingNode = null;
        this.store.setNote(null);
        // The edited output is in the store by now (the event beat the
        // response); refresh the open inspector to match.
        return this.fetchInspection(pipelineId, nodeId);
      })
      .catch((error) => this.noteError(error));
  }

  cancelEdit(): void {
    this.store.view.editingNode = null;
    this.store.emit();
  }

  select(pipelineId: string, nodeId: string): void {
    this.store.view.selectedPipeline = pipelineId;
    this.store.view.selectedNode = nodeId;
    void this.fetchInspection(pipelineId, nodeId);
  }

  closeInspector(): void {
    this.store.view.selectedNode = null;
    this.store.view.editingNode = null;
    this.store.inspection = null;
    this.store.emit();
  }

  toggleIteration(treeNodeId: string): void {
    const selection = this.store.view.selectedTreeIterations;
    if (selection.has(treeNodeId)) {
      selection.delete(treeNodeId);
    } else {
      selection.add(treeNodeId);
    }
    this.store.emit();
  }

  materialize(treeNodeId: string): void {
    this.mutate(() => this.api.materialize(treeNodeId));
  }

  propose(treeNodeId: string): void {
    this.mutate(() => this.api.propose(treeNodeId));
  }

  cycleState(arxivId: string): void {
    const next: UserState = NEXT_USER_STATE[this.store.userStateOf(arxivId)];
    this.mutate(() => this.api.setPaperState(arxivId, next, this.sessionId));
  }

  hover(ownerId: string | null): void {
    this.store.view.hoverTarget = ownerId;
    if (ownerId !== null && !this.store.papers.has(ownerId)) {
      void this.api
        .getPaper(this.sessionId, ownerId)
        .then((paper) => {
          this.store.cachePaper(paper);
          this.store.emit();
        })
        .catch(() => {
          // Tree-node hover targets have no paper document; nothing to show.
        });
    }
    this.store.emit();
  }

  private async fetchInspection(
    pipelineId: string,
    nodeId: string,
  ): Promise<void> {
    try {
      this.store.inspection = await this.api.inspect(pipelineId, nodeId);
    } catch (error) {
      // Nodes without output cannot be inspected server-side; fall back
      // to the node document already fetched with the session.
      const found = this.store.findNode(nodeId);
      if (found === null) {
        this.noteError(error);
        return;
      }
      const fallback: InspectionDoc = {
        node: found.node,
        pipeline_id: pipelineId,
        provenance: [],
      };
      this.store.inspection = fallback;
    }
    this.store.emit();
  }

  // --- rendering ----------------------------------------------------------------

  render(): void {
    const session = this.store.session;
    clear(this.root);
    if (session === null) {
      this.root.append(el("p", { class: "empty-hint" }, "Connecting…"));
      return;
    }

    const queryInput = el("input", {
      class: "query-input",
      type: "text",
      placeholder: "Start a new research query",
    });
    const header = el(
      "header",
      { class: "app-header" },
      el("h1", {}, "litsteer"),
      el("span", { class: "chip session" }, session.session_id),
      el(
        "span",
        { class: "chip counts" },
        `${session.paper_count} papers, ${session.reviewed_count} reviewed`,
      ),
      el(
        "form",
        {
          class: "query-form",
          onsubmit: (event: Event) => {
            event.preventDefault();
            this.startPipeline(queryInput.value);
            queryInput.value = "";
          },
        },
        queryInput,
        el("button", { class: "action start", type: "submit" }, "Run"),
      ),
    );
    const note = this.store.note;
    const noteBar = note
      ? el("div", { class: `status-note ${note.level}` }, note.text)
      : null;

    const workflow = renderWorkflow(session, this.store.view, {
      onStep: (pid) => this.step(pid),
      onApprove: (nid) => this.approve(nid),
      onEdit: (pid, nid) => this.beginEdit(pid, nid),
      onRerun: (nid) => this.rerun(nid),
      onSelect: (pid, nid) => this.select(pid, nid),
    });
    const tree = renderTree(session.tree, this.store.view, {
      onToggleIteration: (id) => this.toggleIteration(id),
      onMaterialize: (id) => this.materialize(id),
      onPropose: (id) => this.propose(id),
    });
    const projection = renderProjection(
      this.store.projection,
      this.store.papers,
      this.store.view,
      {
        onCycleState: (arxivId) => this.cycleState(arxivId),
        onHover: (ownerId) => this.hover(ownerId),
      },
    );
    const inspector = renderInspector(this.store.inspection, this.store.view, {
      onClose: () => this.closeInspector(),
      onStartEdit: () => {
        const inspection = this.store.inspection;
        if (inspection) {
          this.store.view.editingNode = inspection.node.node_id;
          this.store.emit();
        }
      },
      onSubmitEdit: (text) => this.submitEdit(text),
      onCancelEdit: () => this.cancelEdit(),
    });

    const main = el(
      "main",
      { class: "layout" },
      el("div", { class: "col-left" }, workflow, tree),
      el("div", { class: "col-center" }, projection),
      inspector,
    );
    this.root.append(header);
    if (noteBar) this.root.append(noteBar);
    this.root.append(main);
  }
}
