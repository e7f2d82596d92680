/**
 * DOM wiring: sketch canvas with pointer capture, query form, and the
 * ranked results grid with a one-step comparison strip.
 */
import { ApiClient, ApiError, SearchMode, SearchResult } from "./api.js";
import { CanvasState, LOGICAL_SIZE } from "./canvasState.js";
import { ResultsHistory, ResultsView } from "./results.js";

export interface UiElements {
  canvas: HTMLCanvasElement;
  textInput: HTMLInputElement;
  modeSelect: HTMLSelectElement;
  kInput: HTMLInputElement;
  searchButton: HTMLButtonElement;
  undoButton: HTMLButtonElement;
  clearButton: HTMLButtonElement;
  resultsGrid: HTMLElement;
  previousGrid: HTMLElement;
  statusLine: HTMLElement;
}

const SKETCH_MODES: SearchMode[] = ["stnet", "sketch_only", "two_stage"];

export class SearchUi {
  readonly state = new CanvasState();
  readonly history = new ResultsHistory();

  constructor(private el: UiElements, private api: ApiClient) {
    this.bindCanvas();
    this.bindForm();
    this.refreshAffordances();
  }

  private bindCanvas(): void {
    const canvas = this.el.canvas;
    canvas.width = LOGICAL_SIZE;
    canvas.height = LOGICAL_SIZE;
    let drawing = false;

    const pos = (ev: PointerEvent): [number, number] => {
      const rect = canvas.getBoundingClientRect();
      return [
        ((ev.clientX - rect.left) / rect.width) * LOGICAL_SIZE,
        ((ev.clientY - rect.top) / rect.height) * LOGICAL_SIZE,
      ];
    };

    canvas.addEventListener("pointerdown", (ev) => {
      drawing = true;
      canvas.setPointerCapture(ev.pointerId);
      const [x, y] = pos(ev);
      this.state.beginStroke(x, y);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (!drawing) return;
      const [x, y] = pos(ev);
      this.state.extendStroke(x, y);
      this.redrawCanvas();
    });
    const finish = () => {
      if (!drawing) return;
      drawing = false;
      this.state.endStroke();
      this.redrawCanvas();
      this.refreshAffordances();
    };
    canvas.addEventListener("pointerup", finish);
    canvas.addEventListener("pointercancel", finish);
  }

  private bindForm(): void {
    this.el.searchButton.addEventListener("click", () => void this.runSearch());
    this.el.undoButton.addEventListener("click", () => {
      this.state.undo();
      this.redrawCanvas();
      this.refreshAffordances();
    });
    this.el.clearButton.addEventListener("click", () => {
      this.state.clear();
      this.redrawCanvas();
      this.refreshAffordances();
    });
    this.el.modeSelect.addEventListener("change", () => this.refreshAffordances());
    this.el.textInput.addEventListener("input", () => this.refreshAffordances());
  }

  private mode(): SearchMode {
    return this.el.modeSelect.value as SearchMode;
  }

  /** Search is enabled only when the mode's required inputs exist. */
  refreshAffordances(): void {
    const needsSketch = SKETCH_MODES.includes(this.mode());
    const needsText = this.mode() !== "sketch_only";
    const ok = (!needsSketch || !this.state.isEmpty) &&
      (!needsText || this.el.textInput.value.trim() !== "");
    this.el.searchButton.disabled = !ok;
    this.el.undoButton.disabled = this.state.undoDepth === 0;
    this.el.clearButton.disabled = this.state.isEmpty;
  }

  redrawCanvas(): void {
    const ctx = this.el.canvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#fff";
    ctx.fillRect(0, 0, LOGICAL_SIZE, LOGICAL_SIZE);
    ctx.strokeStyle = "#111";
    ctx.lineWidth = 2;
    ctx.lineJoin = "round";
    ctx.lineCap = "round";
    for (const stroke of this.state.strokeList()) {
      ctx.beginPath();
      ctx.moveTo(stroke[0][0], stroke[0][1]);
      for (const [x, y] of stroke.slice(1)) ctx.lineTo(x, y);
      ctx.stroke();
    }
  }

  async runSearch(): Promise<void> {
    const mode = this.mode();
    const needsSketch = SKETCH_MODES.includes(mode);
    this.setStatus("searching…");
    try {
      const response = await this.api.search({
        text: mode === "sketch_only" ? undefined : this.el.textInput.value.trim(),
        sketchPng: needsSketch ? this.state.exportSketchPng() : undefined,
        k: Math.max(1, Number(this.el.kInput.value) || 10),
        mode,
      });
      const view = this.history.record(response);
      this.renderResults(view);
      this.setStatus(view.clamped
        ? `showing all ${view.current?.length ?? 0} gallery images (k clamped)`
        : `${view.current?.length ?? 0} results in ${view.latencyMs.toFixed(0)} ms`);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return;
      if (err instanceof ApiError) {
        this.setStatus(err.status >= 500
          ? `server error (${err.status}), try again`
          : err.message);
      } else {
        this.setStatus("network error, try again");
      }
    }
  }

  private renderResults(view: ResultsView): void {
    renderGrid(this.el.resultsGrid, view.current ?? []);
    renderGrid(this.el.previousGrid, view.previous ?? []);
  }

  private setStatus(text: string): void {
    this.el.statusLine.textContent = text;
  }
}

export function renderGrid(root: HTMLElement, results: SearchResult[]): void {
  root.replaceChildren();
  for (const r of results) {
    const card = document.createElement("figure");
    card.className = "result-card";
    const img = document.createElement("img");
    img.src = r.thumbnail_url;
    img.alt = r.image_id;
    const cap = document.createElement("figcaption");
    cap.textContent = `#${r.rank} · ${r.score.toFixed(3)}`;
    card.append(img, cap);
    root.append(card);
  }
}
