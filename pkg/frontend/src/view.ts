import { DisplayView } from "./model.js";
import { THEME, stylesheet } from "./theme.js";

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

/**
 * Pure view of the latest display snapshot: ingredient boxes in a left
 * column, recipe title centered on top, one bubble per step with the
 * current one highlighted, its detail text beneath, and the dial zone
 * outlined in the projector's own pixel space. Rendering the same
 * snapshot twice produces identical DOM.
 */
export class ProjectionView {
  readonly stage: HTMLElement;
  private readonly titleEl: HTMLElement;
  private readonly boxColumn: HTMLElement;
  private readonly bubbleRow: HTMLElement;
  private readonly detailEl: HTMLElement;
  private readonly dialOutline: SVGPolygonElement;
  private readonly linkStatus: HTMLElement;

  constructor(root: HTMLElement) {
    const style = document.createElement("style");
    style.textContent = stylesheet();
    root.appendChild(style);

    this.stage = el("div", "stage idle");
    const splash = el("div", "splash");
    splash.textContent = "waiting for core";
    this.titleEl = el("div", "title");
    this.boxColumn = el("div", "boxes");
    this.bubbleRow = el("div", "bubbles");
    this.detailEl = el("div", "detail");

    const overlay = document.createElementNS(SVG_NS, "svg");
    overlay.setAttribute("class", "overlay");
    const [pw, ph] = THEME.projectorSpace;
    overlay.setAttribute("viewBox", `0 0 ${pw} ${ph}`);
    overlay.setAttribute("preserveAspectRatio", "none");
    this.dialOutline = document.createElementNS(SVG_NS, "polygon");
    this.dialOutline.setAttribute("class", "dial-outline");
    overlay.appendChild(this.dialOutline);

    this.linkStatus = el("div", "link-status down");
    this.linkStatus.textContent = "link down";

    this.stage.append(splash, this.titleEl, this.boxColumn, this.bubbleRow, this.detailEl, overlay, this.linkStatus);
    root.appendChild(this.stage);
  }

  /** Draw one snapshot; null clears back to the splash. */
  render(view: DisplayView | null): void {
    const idle = view === null || view.stepCount === 0;
    this.stage.classList.toggle("idle", idle);

    this.dialOutline.setAttribute("points", view === null ? "" : outlinePoints(view.dialZonePx));
    if (idle) {
      this.titleEl.textContent = "";
      this.boxColumn.replaceChildren();
      this.bubbleRow.replaceChildren();
      this.detailEl.textContent = "";
      return;
    }

    const active = view as DisplayView;
    this.titleEl.textContent = active.title;

    this.boxColumn.replaceChildren(
      ...active.boxes.map((box) => {
        const node = el("div", "box");
        node.textContent = box.label;
        node.dataset.slot = String(box.slot);
        return node;
      }),
    );

    this.bubbleRow.replaceChildren(
      ...active.bubbles.map((bubble) => {
        const node = el("div", bubble.highlighted ? "bubble highlighted" : "bubble");
        node.textContent = bubble.text;
        node.dataset.index = String(bubble.index);
        return node;
      }),
    );

    this.detailEl.textContent = active.detail;
  }

  setConnected(connected: boolean): void {
    this.linkStatus.classList.toggle("down", !connected);
    this.linkStatus.textContent = connected ? "link up" : "link down";
  }
}

function outlinePoints(polygon: Array<[number, number]>): string {
  const [, ph] = THEME.projectorSpace;
  return polygon
    .map(([x, y]) => `${x},${THEME.flipProjectorY ? ph - y : y}`)
    .join(" ");
}
