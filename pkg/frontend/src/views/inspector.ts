/**
 * Inspector panel: a side drawer showing the selected node's record and
 * the provenance of its output, with an in-place JSON editor for nodes
 * whose output may be replaced. Submitting an edit posts the payload to
 * the service; nothing is mutated locally.
 */
import { el } from "../dom.js";
import type { ViewState } from "../store.js";
import type { InspectionDoc, ProvenanceEntry } from "../types.js";
import { statusLabel } from "./workflow.js";

export interface InspectorActions {
  onClose(): void;
  onStartEdit(): void;
  onSubmitEdit(text: string): void;
  onCancelEdit(): void;
}

const EDITABLE_STATUSES = ["awaiting_approval", "approved", "edited"];

export function renderInspector(
  inspection: InspectionDoc | null,
  view: ViewState,
  actions: InspectorActions,
): HTMLElement {
  const drawer = el("aside", {
    class: inspection ? "inspector open" : "inspector",
    "aria-label": "Inspector",
  });
  if (inspection === null) {
    drawer.append(el("p", { class: "empty-hint" }, "Select a node to inspect."));
    return drawer;
  }
  const node = inspection.node;
  drawer.append(
    el(
      "header",
      { class: "inspector-header" },
      el("h2", {}, node.kind.replace(/_/g, " ")),
      el("button", { class: "action close", onclick: () => actions.onClose() }, "×"),
    ),
    metaRow("node", node.node_id),
    metaRow("pipeline", inspection.pipeline_id),
    metaRow("status", statusLabel(node.status)),
    metaRow("revision", String(node.revision)),
    metaRow("input", node.input_ref),
  );
  if (node.started_at) drawer.append(metaRow("started", node.started_at));
  if (node.finished_at) drawer.append(metaRow("finished", node.finished_at));
  if (node.error !== null) {
    drawer.append(el("div", { class: "inspector-error" }, node.error));
  }

  if (view.editingNode === node.node_id && node.output !== null) {
    drawer.append(renderEditor(node.output, actions));
  } else if (node.output !== null) {
    drawer.append(
      el("pre", { class: "payload" }, JSON.stringify(node.output, null, 2)),
    );
    if (EDITABLE_STATUSES.includes(node.status)) {
      drawer.append(
        el(
          "button",
          { class: "action edit", onclick: () => actions.onStartEdit() },
          "Edit output",
        ),
      );
    }
  }

  if (inspection.provenance.length > 0) {
    drawer.append(el("h3", {}, "Provenance"));
    const list = el("ul", { class: "provenance" });
    for (const entry of inspection.provenance) {
      list.append(renderProvenance(entry));
    }
    drawer.append(list);
  }
  return drawer;
}

function metaRow(label: string, value: string): HTMLElement {
  return el(
    "div",
    { class: "meta-row" },
    el("span", { class: "meta-label" }, label),
    el("span", { class: "meta-value" }, value),
  );
}

function renderEditor(
  output: object,
  actions: InspectorActions,
): HTMLElement {
  const textarea = el("textarea", {
    class: "edit-payload",
    rows: "12",
    spellcheck: "false",
  });
  textarea.value = JSON.stringify(output, null, 2);
  return el(
    "div",
    { class: "editor" },
    textarea,
    el(
      "div",
      { class: "editor-actions" },
      el(
        "button",
        {
          class: "action save",
          onclick: () => actions.onSubmitEdit(textarea.value),
        },
        "Save",
      ),
      el(
        "button",
        {
          class: "action cancel",
          onclick: () => actions.onCancelEdit(),
        },
        "Cancel",
      ),
    ),
  );
}

function renderProvenance(entry: ProvenanceEntry): HTMLElement {
  const item = el("li", { class: "provenance-entry" });
  if (entry.marker !== undefined) {
    item.append(el("span", { class: "prov-marker" }, `[${entry.marker}]`));
  }
  if (entry.chunk_id !== undefined) {
    item.append(el("code", { class: "prov-chunk" }, entry.chunk_id));
  }
  if (entry.title) {
    if (entry.abs_url) {
      item.append(
        el(
          "span",
          { class: "prov-title" },
          el("a", { href: entry.abs_url, target: "_blank" }, entry.title),
        ),
      );
    } else {
      item.append(el("span", { class: "prov-title" }, entry.title));
    }
  } else if (entry.arxiv_id) {
    item.append(el("span", { class: "prov-title" }, entry.arxiv_id));
  }
  if (entry.text) {
    item.append(el("blockquote", { class: "prov-text" }, entry.text));
  }
  return item;
}
