/**
 * Semantic similarity view: the shared 2D embedding map as an SVG
 * scatterplot. Paper glyphs take their color from the server's
 * display_state (green accepted, red rejected, blue otherwise); query
 * centroids get a distinct diamond glyph. Hovering a paper shows its
 * detail card, clicking cycles its verdict Accept, Reject, Neutral, and
 * a non-empty tree selection dims every point not tagged by it.
 */
import { el, svgEl } from "../dom.js";
import type { ViewState } from "../store.js";
import type {
  DisplayState,
  PaperDoc,
  ProjectionDoc,
  ProjectionPointDoc,
} from "../types.js";

export interface ProjectionActions {
  onCycleState(arxivId: string): void;
  onHover(ownerId: string | null): void;
}

/** Glyph fills for the three verdict display states. */
export const DISPLAY_FILL: Record<DisplayState, string> = {
  green: "#2e7d32",
  red: "#c62828",
  blue: "#1565c0",
};

const UNREVIEWED_FILL = "#9e9e9e";
const CENTROID_FILL = "#424242";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = 24;

export function renderProjection(
  projection: ProjectionDoc | null,
  papers: Map<string, PaperDoc>,
  view: ViewState,
  actions: ProjectionActions,
): HTMLElement {
  const section = el("section", {
    class: "projection",
    "aria-label": "Semantic map",
  });
  const heading = el("h2", {}, "Semantic map");
  section.append(heading);
  if (projection === null) {
    section.append(el("p", { class: "empty-hint" }, "No projection yet."));
    return section;
  }
  if (projection.stale) {
    heading.append(el("span", { class: "chip stale" }, "stale"));
  }

  const svg = svgEl("svg", {
    class: "scatter",
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    role: "img",
  });
  const place = makeScales(projection.points);
  const selection = view.selectedTreeIterations;
  for (const point of projection.points) {
    svg.append(renderGlyph(point, place, selection, actions));
  }
  section.append(svg);
  section.append(renderLegend());

  if (view.hoverTarget !== null) {
    const hovered = projection.points.find(
      (p) => p.owner_id === view.hoverTarget,
    );
    if (hovered && hovered.owner_kind === "paper") {
      section.append(renderDetailCard(hovered, papers.get(hovered.owner_id)));
    }
  }
  return section;
}

// --- placement ------------------------------------------------------------------

type Place = (point: ProjectionPointDoc) => { cx: number; cy: number };

function makeScales(points: ProjectionPointDoc[]): Place {
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  // Degenerate extents (single point, collinear axis) still need a span.
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  return (point) => ({
    cx: MARGIN + ((point.x - minX) / spanX) * (WIDTH - 2 * MARGIN),
    cy: MARGIN + ((point.y - minY) / spanY) * (HEIGHT - 2 * MARGIN),
  });
}

// --- glyphs ---------------------------------------------------------------------

function renderGlyph(
  point: ProjectionPointDoc,
  place: Place,
  selection: Set<string>,
  actions: ProjectionActions,
): SVGElement {
  const { cx, cy } = place(point);
  const linked =
    selection.size === 0 ||
    point.iteration_tags.some((tag) => selection.has(tag));

  let glyph: SVGElement;
  if (point.owner_kind === "paper") {
    glyph = svgEl("circle", {
      class: `glyph paper ${point.display_state ?? "unreviewed"}`,
      cx: String(cx),
      cy: String(cy),
      r: "6",
      fill: point.display_state
        ? DISPLAY_FILL[point.display_state]
        : UNREVIEWED_FILL,
      "data-arxiv-id": point.owner_id,
      "data-display-state": point.display_state ?? "none",
      onclick: () => actions.onCycleState(point.owner_id),
      onmouseenter: () => actions.onHover(point.owner_id),
      onmouseleave: () => actions.onHover(null),
    });
  } else {
    const d = `M ${cx} ${cy - 8} L ${cx + 8} ${cy} L ${cx} ${cy + 8} L ${cx - 8} ${cy} Z`;
    glyph = svgEl("path", {
      class: "glyph centroid",
      d,
      fill: CENTROID_FILL,
      "data-node-id": point.owner_id,
    });
    glyph.append(svgEl("title", {}, point.title ?? point.owner_id));
  }
  if (!linked) {
    glyph.classList.add("dimmed");
    glyph.setAttribute("opacity", "0.15");
  } else if (selection.size > 0) {
    glyph.classList.add("linked");
  }
  return glyph;
}

// --- detail card and legend -------------------------------------------------------

function renderDetailCard(
  point: ProjectionPointDoc,
  paper: PaperDoc | undefined,
): HTMLElement {
  const card = el("div", {
    class: "detail-card",
    "data-arxiv-id": point.owner_id,
  });
  if (paper === undefined) {
    card.append(
      el("div", { class: "card-title" }, point.title ?? point.owner_id),
      el("div", { class: "card-loading" }, "Loading paper…"),
    );
    return card;
  }
  card.append(
    el("div", { class: "card-title" }, paper.title),
    el(
      "div",
      { class: "card-url" },
      el("a", { href: paper.abs_url, target: "_blank" }, paper.abs_url),
    ),
    el("div", { class: "card-year" }, paper.published.slice(0, 4)),
    el("div", { class: "card-authors" }, paper.authors.join(", ")),
  );
  return card;
}

function renderLegend(): HTMLElement {
  const entry = (state: DisplayState, label: string) =>
    el(
      "span",
      { class: "legend-entry" },
      el("span", {
        class: `legend-swatch ${state}`,
        style: `background:${DISPLAY_FILL[state]}`,
      }),
      label,
    );
  return el(
    "div",
    { class: "legend" },
    entry("green", "Accepted"),
    entry("red", "Rejected"),
    entry("blue", "Neutral"),
  );
}
