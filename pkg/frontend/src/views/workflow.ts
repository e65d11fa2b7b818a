/**
 * Transparent workflow view: every pipeline as a left-to-right node-link
 * row of its four stages, each cell carrying a status badge and the
 * controls legal for that status. Badges change only when the store
 * changes, which happens through fetches and stream events, never from
 * button handlers guessing outcomes.
 */
import { el } from "../dom.js";
import type { ViewState } from "../store.js";
import type {
  NodeDoc,
  NodeKind,
  PipelineDoc,
  SessionDoc,
} from "../types.js";

export interface WorkflowActions {
  onStep(pipelineId: string): void;
  onApprove(nodeId: string): void;
  onEdit(pipelineId: string, nodeId: string): void;
  onRerun(nodeId: string): void;
  onSelect(pipelineId: string, nodeId: string): void;
}

const KIND_LABELS: Record<NodeKind, string> = {
  query_expansion: "Query expansion",
  search: "Search",
  review: "Review",
  synthesis: "Synthesis",
};

export function statusLabel(status: string): string {
  return status.replace(/_/g, " ");
}

export function renderWorkflow(
  session: SessionDoc,
  view: ViewState,
  actions: WorkflowActions,
): HTMLElement {
  const section = el("section", { class: "workflow", "aria-label": "Pipelines" });
  section.append(el("h2", {}, "Pipelines"));
  if (session.pipelines.length === 0) {
    section.append(
      el("p", { class: "empty-hint" }, "No pipelines yet. Start one above."),
    );
    return section;
  }
  for (const pipeline of session.pipelines) {
    section.append(renderPipeline(session, pipeline, view, actions));
  }
  return section;
}

function renderPipeline(
  session: SessionDoc,
  pipeline: PipelineDoc,
  view: ViewState,
  actions: WorkflowActions,
): HTMLElement {
  const treeNode = session.tree.nodes.find(
    (n) => n.node_id === pipeline.tree_node_id,
  );
  const complete = pipeline.current_index >= pipeline.nodes.length;
  const gateNode = complete ? null : pipeline.nodes[pipeline.current_index]!;

  const header = el(
    "header",
    { class: "pipeline-header" },
    el("span", { class: "pipeline-id" }, pipeline.pipeline_id),
    el("span", { class: "pipeline-query" }, treeNode?.query_text ?? ""),
  );
  if (complete) {
    header.append(el("span", { class: "chip complete" }, "complete"));
  } else if (gateNode !== null && gateNode.status === "pending") {
    header.append(
      el(
        "button",
        {
          class: "action step",
          onclick: () => actions.onStep(pipeline.pipeline_id),
        },
        "Step",
      ),
    );
  }

  const row = el("div", { class: "pipeline-row" });
  pipeline.nodes.forEach((node, i) => {
    if (i > 0) row.append(el("span", { class: "link-arrow" }, "→"));
    row.append(renderStage(pipeline, node, view, actions));
  });

  return el(
    "article",
    {
      class:
        view.selectedPipeline === pipeline.pipeline_id
          ? "pipeline selected"
          : "pipeline",
      "data-pipeline-id": pipeline.pipeline_id,
    },
    header,
    row,
  );
}

function renderStage(
  pipeline: PipelineDoc,
  node: NodeDoc,
  view: ViewState,
  actions: WorkflowActions,
): HTMLElement {
  const classes = ["stage", `status-${node.status}`];
  if (view.selectedNode === node.node_id) classes.push("selected");

  const cell = el(
    "div",
    {
      class: classes.join(" "),
      "data-node-id": node.node_id,
      onclick: () => actions.onSelect(pipeline.pipeline_id, node.node_id),
    },
    el("span", { class: "stage-kind" }, KIND_LABELS[node.kind]),
    el(
      "span",
      {
        class: `badge status-${node.status}`,
        "data-status": node.status,
      },
      statusLabel(node.status),
    ),
  );
  if (node.revision > 0) {
    cell.append(el("span", { class: "chip revision" }, `rev ${node.revision}`));
  }
  if (node.status === "failed" && node.error !== null) {
    cell.append(el("div", { class: "stage-error", title: node.error }, node.error));
  }

  const buttons = stageButtons(pipeline, node, actions);
  if (buttons.length > 0) {
    const bar = el("div", { class: "stage-actions" });
    for (const button of buttons) bar.append(button);
    cell.append(bar);
  }
  return cell;
}

function stageButtons(
  pipeline: PipelineDoc,
  node: NodeDoc,
  actions: WorkflowActions,
): HTMLElement[] {
  const button = (label: string, cls: string, handler: () => void) =>
    el(
      "button",
      {
        class: `action ${cls}`,
        onclick: (event: Event) => {
          // The cell behind the button selects on click; keep those apart.
          event.stopPropagation();
          handler();
        },
      },
      label,
    );
  const approve = button("Approve", "approve", () =>
    actions.onApprove(node.node_id),
  );
  const edit = button("Edit", "edit", () =>
    actions.onEdit(pipeline.pipeline_id, node.node_id),
  );
  const rerun = button("Rerun", "rerun", () => actions.onRerun(node.node_id));

  switch (node.status) {
    case "awaiting_approval":
      return [approve, edit, rerun];
    case "approved":
    case "edited":
      return [edit, rerun];
    case "failed":
      return [rerun];
    case "pending":
    case "running":
      return [];
  }
}
