import { ApiClient } from "./api.js";
import { SearchUi, UiElements } from "./ui.js";

function grab<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const elements: UiElements = {
  canvas: grab<HTMLCanvasElement>("sketch-canvas"),
  textInput: grab<HTMLInputElement>("query-text"),
  modeSelect: grab<HTMLSelectElement>("query-mode"),
  kInput: grab<HTMLInputElement>("query-k"),
  searchButton: grab<HTMLButtonElement>("search-button"),
  undoButton: grab<HTMLButtonElement>("undo-button"),
  clearButton: grab<HTMLButtonElement>("clear-button"),
  resultsGrid: grab("results-grid"),
  previousGrid: grab("previous-grid"),
  statusLine: grab("status-line"),
};

new SearchUi(elements, new ApiClient(""));
