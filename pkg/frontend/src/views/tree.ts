/**
 * Query exploring tree: the session's refinement history as a nested
 * list. Explored nodes are filled yellow and proposed ones drawn dashed
 * with a Materialize control; every child edge carries the semantic
 * offset percentage and the +added/−removed keyword delta computed
 * by the server. Clicking a node toggles it in the iteration selection
 * that the projection view highlights by.
 */
import { el } from "../dom.js";
import type { ViewState } from "../store.js";
import type { TreeDoc, TreeEdgeDoc, TreeNodeDoc } from "../types.js";

export interface TreeActions {
  onToggleIteration(treeNodeId: string): void;
  onMaterialize(treeNodeId: string): void;
  onPropose(treeNodeId: string): void;
}

/** Yellow fill marking explored nodes. */
export const EXPLORED_FILL = "#ffd54f";

export function formatOffset(pct: number | null): string {
  return pct === null ? "" : `${pct.toFixed(2)}%`;
}

export function renderTree(
  tree: TreeDoc,
  view: ViewState,
  actions: TreeActions,
): HTMLElement {
  const section = el("section", {
    class: "exploration",
    "aria-label": "Exploration tree",
  });
  section.append(el("h2", {}, "Exploration"));
  if (tree.root_id === null) {
    section.append(el("p", { class: "empty-hint" }, "Nothing explored yet."));
    return section;
  }
  const children = new Map<string, TreeNodeDoc[]>();
  for (const node of tree.nodes) {
    if (node.parent_id === null) continue;
    const bucket = children.get(node.parent_id) ?? [];
    bucket.push(node);
    children.set(node.parent_id, bucket);
  }
  const edges = new Map<string, TreeEdgeDoc>();
  for (const edge of tree.edges) edges.set(edge.child_id, edge);

  const root = tree.nodes.find((n) => n.node_id === tree.root_id);
  if (root) {
    section.append(
      el(
        "ul",
        { class: "tree" },
        renderBranch(root, children, edges, view, actions),
      ),
    );
  }
  return section;
}

function renderBranch(
  node: TreeNodeDoc,
  children: Map<string, TreeNodeDoc[]>,
  edges: Map<string, TreeEdgeDoc>,
  view: ViewState,
  actions: TreeActions,
): HTMLElement {
  const item = el("li", {});
  const edge = edges.get(node.node_id);
  if (edge) item.append(renderEdge(edge));
  item.append(renderCard(node, view, actions));
  const kids = children.get(node.node_id) ?? [];
  if (kids.length > 0) {
    const list = el("ul", { class: "tree" });
    for (const kid of kids) {
      list.append(renderBranch(kid, children, edges, view, actions));
    }
    item.append(list);
  }
  return item;
}

function renderEdge(edge: TreeEdgeDoc): HTMLElement {
  const label = el("div", {
    class: "tree-edge",
    "data-parent": edge.parent_id,
    "data-child": edge.child_id,
  });
  const offset = formatOffset(edge.semantic_offset_pct);
  if (offset) label.append(el("span", { class: "edge-offset" }, offset));
  if (edge.label) label.append(el("span", { class: "edge-delta" }, edge.label));
  return label;
}

function renderCard(
  node: TreeNodeDoc,
  view: ViewState,
  actions: TreeActions,
): HTMLElement {
  const selected = view.selectedTreeIterations.has(node.node_id);
  const classes = ["tree-node", node.state];
  if (selected) classes.push("iteration-selected");

  const card = el(
    "div",
    {
      class: classes.join(" "),
      "data-node-id": node.node_id,
      "data-state": node.state,
      "aria-pressed": selected ? "true" : "false",
      // Explored nodes are the yellow ones; proposed stay unfilled.
      style: node.state === "explored" ? `background:${EXPLORED_FILL}` : undefined,
      onclick: () => actions.onToggleIteration(node.node_id),
    },
    el("strong", { class: "tree-query" }, node.query_text),
  );
  if (node.keyword_set.length > 0) {
    card.append(
      el("div", { class: "tree-keywords" }, node.keyword_set.join(", ")),
    );
  }
  const stop = (handler: () => void) => (event: Event) => {
    // Card clicks toggle selection; control clicks must not.
    event.stopPropagation();
    handler();
  };
  if (node.state === "proposed" && node.proposal) {
    card.append(
      el("div", { class: "proposal-title" }, node.proposal.title),
      el("div", { class: "proposal-rationale" }, node.proposal.rationale),
      el(
        "button",
        {
          class: "action materialize",
          onclick: stop(() => actions.onMaterialize(node.node_id)),
        },
        "Materialize",
      ),
    );
  }
  if (node.state === "explored") {
    card.append(
      el(
        "button",
        {
          class: "action propose",
          onclick: stop(() => actions.onPropose(node.node_id)),
        },
        "Propose directions",
      ),
    );
  }
  return card;
}
