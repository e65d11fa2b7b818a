/**
 * Client-side cache of one session plus the view state.
 *
 * The server is the only authority; this store holds the latest fetched
 * documents and patches them from the event stream so badges update
 * without a reload. Events whose payloads cannot reproduce the served
 * documents (bulk ingests, projection rebuilds) report "refetch" instead
 * of guessing. Timestamps are not carried on event frames, so patched
 * nodes drop them until the next fetch; only the inspector shows them,
 * and it fetches fresh.
 */
import type {
  DisplayState,
  EventMessage,
  InspectionDoc,
  NodeDoc,
  NodeKind,
  PaperDoc,
  PayloadDoc,
  PipelineDoc,
  ProjectionDoc,
  SessionDoc,
  TreeNodeDoc,
  UserState,
} from "./types.js";
import { ACCEPTING_STATUSES, displayStateOf } from "./types.js";

const STAGE_ORDER: readonly NodeKind[] = [
  "query_expansion",
  "search",
  "review",
  "synthesis",
];

export type ApplyOutcome = "applied" | "refetch";

export interface ViewState {
  selectedPipeline: string | null;
  selectedNode: string | null;
  /** Tree-node ids whose tagged points the projection view highlights. */
  selectedTreeIterations: Set<string>;
  /** Owner id (arxiv id or tree-node id) under the pointer, if any. */
  hoverTarget: string | null;
  /** Node currently open for payload editing in the inspector. */
  editingNode: string | null;
}

export interface StatusNote {
  level: "info" | "error";
  text: string;
}

export class SessionStore {
  session: SessionDoc | null = null;
  projection: ProjectionDoc | null = null;
  inspection: InspectionDoc | null = null;
  readonly papers = new Map<string, PaperDoc>();
  view: ViewState = {
    selectedPipeline: null,
    selectedNode: null,
    selectedTreeIterations: new Set(),
    hoverTarget: null,
    editingNode: null,
  };
  note: StatusNote | null = null;

  private listeners: Array<() => void> = [];

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  emit(): void {
    for (const listener of this.listeners) listener();
  }

  // --- loading --------------------------------------------------------------

  loadSession(doc: SessionDoc): void {
    this.session = doc;
    this.pruneSelections();
  }

  loadProjection(doc: ProjectionDoc | null): void {
    this.projection = doc;
  }

  cachePaper(doc: PaperDoc): void {
    this.papers.set(doc.arxiv_id, doc);
  }

  setNote(note: StatusNote | null): void {
    this.note = note;
  }

  // --- selectors --------------------------------------------------------------

  pipeline(pipelineId: string): PipelineDoc | null {
    return (
      this.session?.pipelines.find((p) => p.pipeline_id === pipelineId) ?? null
    );
  }

  findNode(nodeId: string): { pipeline: PipelineDoc; node: NodeDoc } | null {
    for (const pipeline of this.session?.pipelines ?? []) {
      const node = pipeline.nodes.find((n) => n.node_id === nodeId);
      if (node) return { pipeline, node };
    }
    return null;
  }

  treeNode(treeNodeId: string): TreeNodeDoc | null {
    return (
      this.session?.tree.nodes.find((n) => n.node_id === treeNodeId) ?? null
    );
  }

  userStateOf(arxivId: string): UserState {
    const cached = this.papers.get(arxivId);
    if (cached?.verdict) return cached.verdict.user_state;
    const point = this.projection?.points.find(
      (p) => p.owner_kind === "paper" && p.owner_id === arxivId,
    );
    if (point?.display_state === "green") return "accepted";
    if (point?.display_state === "red") return "rejected";
    return "neutral";
  }

  /** Drop selections that no longer resolve in the fetched documents. */
  pruneSelections(): void {
    const view = this.view;
    if (view.selectedPipeline && !this.pipeline(view.selectedPipeline)) {
      view.selectedPipeline = null;
    }
    if (view.selectedNode && !this.findNode(view.selectedNode)) {
      view.selectedNode = null;
      this.inspection = null;
    }
    if (view.editingNode && !this.findNode(view.editingNode)) {
      view.editingNode = null;
    }
    for (const id of [...view.selectedTreeIterations]) {
      if (!this.treeNode(id)) view.selectedTreeIterations.delete(id);
    }
  }

  // --- event reducer ------------------------------------------------------------

  /**
   * Patch the cached documents from one stream event. Returns "refetch"
   * when the payload cannot reproduce what the server would serve.
   */
  applyEvent(message: EventMessage): ApplyOutcome {
    if (this.session === null) return "refetch";
    const payload = message.payload;
    switch (message.kind) {
      case "session_created":
        return "applied";
      case "node_started": {
        const node = this.payloadNode(payload);
        if (!node) return "refetch";
        node.status = "running";
        node.revision = payload["revision"] as number;
        node.output = null;
        node.error = null;
        node.started_at = null;
        node.finished_at = null;
        this.refreshIndex(payload);
        return "applied";
      }
      case "node_finished": {
        const node = this.payloadNode(payload);
        if (!node) return "refetch";
        if (payload["status"] === "failed") {
          node.status = "failed";
          node.error = payload["error"] as string;
        } else {
          node.status = "awaiting_approval";
          node.output = payload["output"] as PayloadDoc;
        }
        node.finished_at = null;
        this.refreshIndex(payload);
        return "applied";
      }
      case "node_approved": {
        const node = this.payloadNode(payload);
        if (!node) return "refetch";
        node.status = "approved";
        this.propagateKeywords(payload, node);
        this.refreshIndex(payload);
        return "applied";
      }
      case "node_edited": {
        const node = this.payloadNode(payload);
        if (!node) return "refetch";
        node.status = "edited";
        node.output = payload["payload"] as PayloadDoc;
        node.error = null;
        node.revision = payload["revision"] as number;
        this.propagateKeywords(payload, node);
        this.refreshIndex(payload);
        return "applied";
      }
      case "node_invalidated": {
        const pipeline = this.pipeline(payload["pipeline_id"] as string);
        if (!pipeline) return "refetch";
        for (const nodeId of payload["node_ids"] as string[]) {
          const node = pipeline.nodes.find((n) => n.node_id === nodeId);
          if (!node) return "refetch";
          node.status = "pending";
          node.output = null;
          node.error = null;
          node.started_at = null;
          node.finished_at = null;
        }
        this.refreshIndex(payload);
        return "applied";
      }
      case "user_state_set": {
        const arxivId = payload["arxiv_id"] as string;
        const state = payload["state"] as UserState;
        this.setUserState(arxivId, state);
        return "applied";
      }
      case "pipeline_created": {
        this.session.pipelines.push(freshPipeline(payload));
        this.session.tree.nodes.push({
          node_id: payload["tree_node_id"] as string,
          parent_id: (payload["parent_id"] as string | null) ?? null,
          query_text: payload["query_text"] as string,
          state: "explored",
          keyword_set: [],
          pipeline_id: payload["pipeline_id"] as string,
          proposal: null,
        });
        if (this.session.tree.root_id === null) {
          this.session.tree.root_id = payload["tree_node_id"] as string;
        }
        // Edge metrics are computed server-side at read time; a fresh
        // child has no keywords or embedding yet, so both sides render
        // empty until the next tree fetch.
        this.pushEdgeIfChild(payload["tree_node_id"] as string);
        return "applied";
      }
      case "node_materialized": {
        const treeNode = this.treeNode(payload["tree_node_id"] as string);
        if (!treeNode) return "refetch";
        treeNode.state = "explored";
        treeNode.pipeline_id = payload["pipeline_id"] as string;
        treeNode.proposal = null;
        this.session.pipelines.push(freshPipeline(payload));
        return "applied";
      }
      case "directions_proposed": {
        const parentId = payload["parent_node_id"] as string;
        if (!this.treeNode(parentId)) return "refetch";
        const proposals = payload["proposals"] as Array<
          Record<string, string>
        >;
        for (const doc of proposals) {
          this.session.tree.nodes.push({
            node_id: doc["node_id"]!,
            parent_id: parentId,
            query_text: doc["seed_query"]!,
            state: "proposed",
            keyword_set: [],
            pipeline_id: null,
            proposal: {
              title: doc["title"]!,
              rationale: doc["rationale"]!,
              seed_query: doc["seed_query"]!,
            },
          });
          this.pushEdgeIfChild(doc["node_id"]!);
        }
        return "applied";
      }
      default:
        // papers_ingested, embeddings_added, projection_updated and any
        // future kinds carry more than this cache can decorate honestly.
        return "refetch";
    }
  }

  private payloadNode(payload: Record<string, unknown>): NodeDoc | null {
    const pipeline = this.pipeline(payload["pipeline_id"] as string);
    return (
      pipeline?.nodes.find((n) => n.node_id === payload["node_id"]) ?? null
    );
  }

  /** The gate index is derived, so recompute it after any status patch. */
  private refreshIndex(payload: Record<string, unknown>): void {
    const pipeline = this.pipeline(payload["pipeline_id"] as string);
    if (!pipeline) return;
    let index = pipeline.nodes.length;
    for (let i = 0; i < pipeline.nodes.length; i += 1) {
      if (!ACCEPTING_STATUSES.includes(pipeline.nodes[i]!.status)) {
        index = i;
        break;
      }
    }
    pipeline.current_index = index;
  }

  /** Accepted keyword sets flow onto the pipeline's tree node. */
  private propagateKeywords(
    payload: Record<string, unknown>,
    node: NodeDoc,
  ): void {
    if (node.kind !== "query_expansion" || node.output === null) return;
    const pipeline = this.pipeline(payload["pipeline_id"] as string);
    const treeNode = pipeline ? this.treeNode(pipeline.tree_node_id) : null;
    if (treeNode) {
      treeNode.keyword_set = [
        ...(node.output.data["keywords"] as string[]),
      ].sort();
    }
  }

  private pushEdgeIfChild(childId: string): void {
    const child = this.treeNode(childId);
    if (!child || child.parent_id === null || this.session === null) return;
    this.session.tree.edges.push({
      parent_id: child.parent_id,
      child_id: childId,
      semantic_offset_pct: null,
      added: [],
      removed: [],
      label: "",
    });
  }

  private setUserState(arxivId: string, state: UserState): void {
    const paper = this.papers.get(arxivId);
    if (paper?.verdict) {
      paper.verdict.user_state = state;
      paper.display_state = displayStateOf(state);
    }
    if (this.projection) {
      for (const point of this.projection.points) {
        if (point.owner_kind === "paper" && point.owner_id === arxivId) {
          point.display_state = displayStateOf(state) as DisplayState;
        }
      }
    }
  }
}

/** Mirror of the server's fresh pipeline: four pending stages in order. */
function freshPipeline(payload: Record<string, unknown>): PipelineDoc {
  const nodeIds = payload["node_ids"] as string[];
  return {
    pipeline_id: payload["pipeline_id"] as string,
    tree_node_id: payload["tree_node_id"] as string,
    nodes: nodeIds.map((nodeId, i) => ({
      node_id: nodeId,
      kind: STAGE_ORDER[i]!,
      status: "pending",
      input_ref:
        i === 0
          ? `query:${payload["tree_node_id"] as string}`
          : `node:${nodeIds[i - 1]!}`,
      output: null,
      error: null,
      revision: 0,
      started_at: null,
      finished_at: null,
    })),
    auto_approve: payload["auto_approve"] as Record<string, boolean>,
    run_to_next_checkpoint: payload["run_to_next_checkpoint"] as boolean,
    created_at: "",
    current_index: 0,
  };
}
