/**
 * JSON document shapes served by the litsteer HTTP API.
 *
 * These mirror the server's serialization exactly; the client never
 * invents fields of its own. Everything here is plain data so views can
 * stay pure functions of it.
 */

// --- enums (string unions matching the server's values) -----------------------

export type NodeKind = "query_expansion" | "search" | "review" | "synthesis";

export type NodeStatus =
  | "pending"
  | "running"
  | "awaiting_approval"
  | "approved"
  | "edited"
  | "failed";

export type TreeNodeState = "explored" | "proposed";

export type UserState = "neutral" | "accepted" | "rejected";

export type DisplayState = "green" | "red" | "blue";

/** Statuses whose output the pipeline gate accepts as settled. */
export const ACCEPTING_STATUSES: readonly NodeStatus[] = ["approved", "edited"];

/** Click cycle on a paper glyph: Accept, then Reject, then back to Neutral. */
export const NEXT_USER_STATE: Record<UserState, UserState> = {
  neutral: "accepted",
  accepted: "rejected",
  rejected: "neutral",
};

/** User judgment wins over the agent score, whatever the score says. */
export function displayStateOf(state: UserState): DisplayState {
  if (state === "accepted") return "green";
  if (state === "rejected") return "red";
  return "blue";
}

// --- pipeline documents --------------------------------------------------------

export type PayloadKind =
  | "keyword_set"
  | "paper_list"
  | "review_result"
  | "synthesis_report";

export interface PayloadDoc {
  kind: PayloadKind;
  data: Record<string, unknown>;
}

export interface NodeDoc {
  node_id: string;
  kind: NodeKind;
  status: NodeStatus;
  input_ref: string;
  output: PayloadDoc | null;
  error: string | null;
  revision: number;
  started_at: string | null;
  finished_at: string | null;
}

export interface PipelineDoc {
  pipeline_id: string;
  tree_node_id: string;
  nodes: NodeDoc[];
  auto_approve: Record<string, boolean>;
  run_to_next_checkpoint: boolean;
  created_at: string;
  current_index: number;
}

// --- exploration tree documents ------------------------------------------------

export interface ProposalDoc {
  title: string;
  rationale: string;
  seed_query: string;
}

export interface TreeNodeDoc {
  node_id: string;
  parent_id: string | null;
  query_text: string;
  state: TreeNodeState;
  keyword_set: string[];
  pipeline_id: string | null;
  proposal: ProposalDoc | null;
}

export interface TreeEdgeDoc {
  parent_id: string;
  child_id: string;
  semantic_offset_pct: number | null;
  added: string[];
  removed: string[];
  label: string;
}

export interface TreeDoc {
  root_id: string | null;
  nodes: TreeNodeDoc[];
  edges: TreeEdgeDoc[];
}

// --- projection and paper documents ---------------------------------------------

export interface ProjectionConfigDoc {
  n_neighbors: number;
  min_dist: number;
  epochs: number;
  seed: number;
}

export interface ProjectionPointDoc {
  owner: string;
  x: number;
  y: number;
  iteration_tags: string[];
  owner_kind: "paper" | "query";
  owner_id: string;
  display_state: DisplayState | null;
  title: string | null;
}

export interface ProjectionDoc {
  config: ProjectionConfigDoc;
  points: ProjectionPointDoc[];
  stale: boolean;
}

export interface VerdictDoc {
  arxiv_id: string;
  relevance_score: number;
  agent_rationale: string;
  user_state: UserState;
  excerpt_dropped: boolean;
}

export interface PaperDoc {
  arxiv_id: string;
  title: string;
  abstract: string;
  authors: string[];
  published: string;
  updated: string;
  primary_category: string;
  abs_url: string;
  iteration_tags: string[];
  verdict: VerdictDoc | null;
  display_state: DisplayState | null;
  chunk_ids: string[];
}

// --- session, inspection, events -------------------------------------------------

export interface SessionDoc {
  session_id: string;
  created_at: string;
  pipelines: PipelineDoc[];
  tree: TreeDoc;
  paper_count: number;
  reviewed_count: number;
  has_projection: boolean;
  last_seq: number;
}

/** One resolved reference from a node output; fields vary by payload kind. */
export interface ProvenanceEntry {
  arxiv_id: string | null;
  title: string | null;
  abs_url?: string | null;
  chunk_id?: string;
  marker?: number;
  start?: number;
  end?: number;
  text?: string | null;
}

export interface InspectionDoc {
  node: NodeDoc;
  pipeline_id: string;
  provenance: ProvenanceEntry[];
}

/** One frame from the session event stream. */
export interface EventMessage {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}
