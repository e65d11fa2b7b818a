/**
 * A fixed session snapshot shaped exactly like the service documents.
 *
 * The story behind the numbers: the root query was expanded, approved,
 * and branched into an explored child (whose pipeline ran to completion
 * once, then had its review rerun fail) and one unmaterialized proposal.
 * The root's expansion was rerun afterwards, so it sits at checkpoint 1
 * again with a fresh revision while the tree still carries its earlier
 * accepted keywords. Exports hand out deep copies so tests can mutate
 * freely.
 */
import type {
  InspectionDoc,
  PaperDoc,
  ProjectionDoc,
  SessionDoc,
} from "../src/types.js";

const SESSION: SessionDoc = {
  session_id: "s1",
  created_at: "2026-08-19T10:00:00+00:00",
  pipelines: [
    {
      pipeline_id: "p1",
      tree_node_id: "t1",
      nodes: [
        {
          node_id: "n1",
          kind: "query_expansion",
          status: "awaiting_approval",
          input_ref: "query:t1",
          output: {
            kind: "keyword_set",
            data: { keywords: ["agents", "interpretability", "steering"] },
          },
          error: null,
          revision: 1,
          started_at: "2026-08-19T10:20:00+00:00",
          finished_at: "2026-08-19T10:20:01+00:00",
        },
        {
          node_id: "n2",
          kind: "search",
          status: "pending",
          input_ref: "node:n1",
          output: null,
          error: null,
          revision: 0,
          started_at: null,
          finished_at: null,
        },
        {
          node_id: "n3",
          kind: "review",
          status: "pending",
          input_ref: "node:n2",
          output: null,
          error: null,
          revision: 0,
          started_at: null,
          finished_at: null,
        },
        {
          node_id: "n4",
          kind: "synthesis",
          status: "pending",
          input_ref: "node:n3",
          output: null,
          error: null,
          revision: 0,
          started_at: null,
          finished_at: null,
        },
      ],
      auto_approve: {
        query_expansion: false,
        search: false,
        review: false,
        synthesis: false,
      },
      run_to_next_checkpoint: false,
      created_at: "2026-08-19T10:01:00+00:00",
      current_index: 0,
    },
    {
      pipeline_id: "p2",
      tree_node_id: "t2",
      nodes: [
        {
          node_id: "n5",
          kind: "query_expansion",
          status: "approved",
          input_ref: "query:t2",
          output: {
            kind: "keyword_set",
            data: { keywords: ["agents", "benchmark"] },
          },
          error: null,
          revision: 0,
          started_at: "2026-08-19T10:05:00+00:00",
          finished_at: "2026-08-19T10:05:01+00:00",
        },
        {
          node_id: "n6",
          kind: "search",
          status: "approved",
          input_ref: "node:n5",
          output: {
            kind: "paper_list",
            data: { arxiv_ids: ["2401.00001", "2401.00002", "2401.00003"] },
          },
          error: null,
          revision: 0,
          started_at: "2026-08-19T10:06:00+00:00",
          finished_at: "2026-08-19T10:06:02+00:00",
        },
        {
          node_id: "n7",
          kind: "review",
          status: "failed",
          input_ref: "node:n6",
          output: null,
          error: "UpstreamFailure: chat provider unavailable after 3 attempts",
          revision: 1,
          started_at: "2026-08-19T10:18:00+00:00",
          finished_at: "2026-08-19T10:18:05+00:00",
        },
        {
          node_id: "n8",
          kind: "synthesis",
          status: "pending",
          input_ref: "node:n7",
          output: null,
          error: null,
          revision: 0,
          started_at: null,
          finished_at: null,
        },
      ],
      auto_approve: {
        query_expansion: false,
        search: false,
        review: false,
        synthesis: false,
      },
      run_to_next_checkpoint: false,
      created_at: "2026-08-19T10:04:00+00:00",
      current_index: 2,
    },
  ],
  tree: {
    root_id: "t1",
    nodes: [
      {
        node_id: "t1",
        parent_id: null,
        query_text: "human steering for research agents",
        state: "explored",
        keyword_set: ["agents", "interpretability"],
        pipeline_id: "p1",
        proposal: null,
      },
      {
        node_id: "t2",
        parent_id: "t1",
        query_text: "agent benchmarks",
        state: "explored",
        keyword_set: ["agents", "benchmark"],
        pipeline_id: "p2",
        proposal: null,
      },
      {
        node_id: "t3",
        parent_id: "t1",
        query_text: "agent evaluation benchmarks",
        state: "proposed",
        keyword_set: [],
        pipeline_id: null,
        proposal: {
          title: "Benchmark-first survey",
          rationale: "Shift the reading list toward evaluation articles",
          seed_query: "agent evaluation benchmarks",
        },
      },
    ],
    edges: [
      {
        parent_id: "t1",
        child_id: "t2",
        semantic_offset_pct: 11.11,
        added: ["benchmark"],
        removed: ["interpretability"],
        label: "+benchmark −interpretability",
      },
      {
        parent_id: "t1",
        child_id: "t3",
        semantic_offset_pct: null,
        added: [],
        removed: [],
        label: "",
      },
    ],
  },
  paper_count: 3,
  reviewed_count: 3,
  has_projection: true,
  last_seq: 42,
};

const PROJECTION: ProjectionDoc = {
  config: { n_neighbors: 15, min_dist: 0.1, epochs: 200, seed: 42 },
  points: [
    {
      owner: "paper:2401.00001",
      x: 0.0,
      y: 0.0,
      iteration_tags: ["t2"],
      owner_kind: "paper",
      owner_id: "2401.00001",
      display_state: "green",
      title: "Steerable Pipelines for Research Agents",
    },
    {
      owner: "paper:2401.00002",
      x: 2.0,
      y: 1.0,
      iteration_tags: ["t2"],
      owner_kind: "paper",
      owner_id: "2401.00002",
      display_state: "red",
      title: "Benchmarking Agent Workflows",
    },
    {
      owner: "paper:2401.00003",
      x: 1.0,
      y: 2.0,
      iteration_tags: ["t2"],
      owner_kind: "paper",
      owner_id: "2401.00003",
      display_state: "blue",
      title: "A Survey of Literature Discovery Tools",
    },
    {
      owner: "query:t1",
      x: 0.2,
      y: 0.4,
      iteration_tags: ["t1"],
      owner_kind: "query",
      owner_id: "t1",
      display_state: null,
      title: "human steering for research agents",
    },
    {
      owner: "query:t2",
      x: 1.8,
      y: 0.8,
      iteration_tags: ["t2"],
      owner_kind: "query",
      owner_id: "t2",
      display_state: null,
      title: "agent benchmarks",
    },
  ],
  stale: false,
};

const PAPERS: PaperDoc[] = [
  {
    arxiv_id: "2401.00001",
    title: "Steerable Pipelines for Research Agents",
    abstract:
      "We study checkpointed pipelines that keep a human in control of "
      + "query expansion, search, review, and synthesis.",
    authors: ["R. Alvarez", "M. Chen"],
    published: "2024-01-05T00:00:00+00:00",
    updated: "2024-01-05T00:00:00+00:00",
    primary_category: "cs.CL",
    abs_url: "http://arxiv.org/abs/2401.00001v1",
    iteration_tags: ["t2"],
    verdict: {
      arxiv_id: "2401.00001",
      relevance_score: 0.9,
      agent_rationale: "Directly on topic.",
      user_state: "accepted",
      excerpt_dropped: false,
    },
    display_state: "green",
    chunk_ids: ["c1"],
  },
  {
    arxiv_id: "2401.00002",
    title: "Benchmarking Agent Workflows",
    abstract: "A benchmark suite for multi-stage agent workflows.",
    authors: ["P. Okafor"],
    published: "2024-01-09T00:00:00+00:00",
    updated: "2024-01-10T00:00:00+00:00",
    primary_category: "cs.AI",
    abs_url: "http://arxiv.org/abs/2401.00002v1",
    iteration_tags: ["t2"],
    verdict: {
      arxiv_id: "2401.00002",
      relevance_score: 0.4,
      agent_rationale: "Benchmark focus, little steering content.",
      user_state: "rejected",
      excerpt_dropped: false,
    },
    display_state: "red",
    chunk_ids: ["c2"],
  },
  {
    arxiv_id: "2401.00003",
    title: "A Survey of Literature Discovery Tools",
    abstract: "We survey tools that help researchers find related work.",
    authors: ["L. Novak", "S. Iyer", "D. Fontaine"],
    published: "2024-01-12T00:00:00+00:00",
    updated: "2024-01-12T00:00:00+00:00",
    primary_category: "cs.IR",
    abs_url: "http://arxiv.org/abs/2401.00003v1",
    iteration_tags: ["t2"],
    verdict: {
      arxiv_id: "2401.00003",
      relevance_score: 0.7,
      agent_rationale: "Useful context for discovery interfaces.",
      user_state: "neutral",
      excerpt_dropped: false,
    },
    display_state: "blue",
    chunk_ids: ["c3"],
  },
];

const INSPECTION_N1: InspectionDoc = {
  node: SESSION.pipelines[0]!.nodes[0]!,
  pipeline_id: "p1",
  provenance: [],
};

const INSPECTION_N6: InspectionDoc = {
  node: SESSION.pipelines[1]!.nodes[1]!,
  pipeline_id: "p2",
  provenance: [
    {
      arxiv_id: "2401.00001",
      title: "Steerable Pipelines for Research Agents",
      abs_url: "http://arxiv.org/abs/2401.00001v1",
    },
    {
      arxiv_id: "2401.00002",
      title: "Benchmarking Agent Workflows",
      abs_url: "http://arxiv.org/abs/2401.00002v1",
    },
    {
      arxiv_id: "2401.00003",
      title: "A Survey of Literature Discovery Tools",
      abs_url: "http://arxiv.org/abs/2401.00003v1",
    },
  ],
};

export function sessionFixture(): SessionDoc {
  return structuredClone(SESSION);
}

export function projectionFixture(): ProjectionDoc {
  return structuredClone(PROJECTION);
}

export function paperFixtures(): PaperDoc[] {
  return structuredClone(PAPERS);
}

export function inspectionFixture(nodeId: "n1" | "n6"): InspectionDoc {
  return structuredClone(nodeId === "n1" ? INSPECTION_N1 : INSPECTION_N6);
}
