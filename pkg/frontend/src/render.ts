/**
 * DOM rendering of the console state.
 *
 * Everything is rebuilt from the state on each change; no DOM node carries
 * state of its own.  The board uses a fixed isometric-style projection:
 * cell (x, y) maps to a deterministic screen position, stacks grow upward
 * by a fixed lift per level, and cells are painted back to front so nearer
 * stacks overlap farther ones.  Highlights add classes only; they never
 * move or resize a glyph.
 */
import type { ConsoleState } from "./controller";
import type { CommandLogEntry } from "./log";
import { buildTreePanel } from "./treePanel";
import { entriesDiff, shapeEntry, type SceneView } from "./sceneView";
import type { Scene } from "./types";

export interface Handlers {
  onSubmit: (text: string) => void;
  onRetry: () => void;
  onUndo: () => void;
  onReset: () => void;
  onInspect: (entry: CommandLogEntry) => void;
}

/** Projection constants; TREE_ROW_HEIGHT is mirrored in the stylesheet. */
export const TILE_WIDTH = 64;
export const TILE_HEIGHT = 32;
export const STACK_LIFT = 20;
export const TREE_ROW_HEIGHT = 22;
const MAX_STACK_DRAWN = 6;

/** Screen position of the tile for cell (x, y) on a board of `size`. */
export function projectCell(x: number, y: number, size: number): { left: number; top: number } {
  return {
    left: (x - y + size - 1) * (TILE_WIDTH / 2),
    top: (x + y) * (TILE_HEIGHT / 2) + MAX_STACK_DRAWN * STACK_LIFT,
  };
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const GLYPH_MARKS: Record<string, string> = { cube: "■", prism: "▲" };

function glyphElement(type: string, color: string, highlighted: boolean): HTMLElement {
  const glyph = el("span", `glyph color-${color}${highlighted ? " highlighted" : ""}`);
  glyph.dataset["type"] = type;
  glyph.dataset["color"] = color;
  glyph.appendChild(el("span", "glyph-mark", GLYPH_MARKS[type] ?? type[0] ?? "?"));
  glyph.title = `${color} ${type}`;
  return glyph;
}

function renderBoard(view: SceneView): HTMLElement {
  const board = el("div", "board");
  board.dataset["boardSize"] = String(view.boardSize);
  const size = view.boardSize;
  board.style.width = `${size * TILE_WIDTH}px`;
  board.style.height = `${(size - 1) * TILE_HEIGHT + TILE_HEIGHT + MAX_STACK_DRAWN * STACK_LIFT}px`;

  const cells = view.cells.flat().slice()
    .sort((a, b) => (a.x + a.y) - (b.x + b.y) || a.x - b.x);
  for (const cell of cells) {
    const { left, top } = projectCell(cell.x, cell.y, size);
    const cellEl = el("div", `cell${cell.marked ? " marked" : ""}`);
    cellEl.style.left = `${left}px`;
    cellEl.style.top = `${top}px`;
    cellEl.dataset["x"] = String(cell.x);
    cellEl.dataset["y"] = String(cell.y);
    cellEl.appendChild(el("div", "tile"));
    cell.stack.forEach((glyph, level) => {
      const glyphEl = glyphElement(glyph.type, glyph.color, glyph.highlighted);
      glyphEl.style.transform = `translateY(${-level * STACK_LIFT}px)`;
      glyphEl.dataset["x"] = String(cell.x);
      glyphEl.dataset["y"] = String(cell.y);
      glyphEl.dataset["z"] = String(level);
      cellEl.appendChild(glyphEl);
    });
    board.appendChild(cellEl);
  }
  return board;
}

function renderGripper(view: SceneView): HTMLElement {
  const gripper = el("div", "gripper");
  gripper.appendChild(el("span", "gripper-label", "gripper"));
  if (view.gripper === null) {
    gripper.appendChild(el("span", "gripper-empty", "empty"));
  } else {
    gripper.appendChild(glyphElement(view.gripper.type, view.gripper.color, false));
  }
  return gripper;
}

/** Input echo with the offending phrase underlined, when one is known. */
function renderEcho(entry: CommandLogEntry): HTMLElement {
  const echo = el("span", "echo");
  const phrase = entry.detail?.phrase ?? null;
  const at = phrase === null ? -1 : entry.text.indexOf(phrase);
  if (phrase === null || at < 0) {
    echo.textContent = entry.text;
    return echo;
  }
  echo.appendChild(document.createTextNode(entry.text.slice(0, at)));
  echo.appendChild(el("u", "oov-phrase", phrase));
  echo.appendChild(document.createTextNode(entry.text.slice(at + phrase.length)));
  return echo;
}

function renderLogEntry(entry: CommandLogEntry, inspected: boolean,
                        handlers: Handlers): HTMLElement {
  const item = el("li", `log-entry${inspected ? " inspected" : ""}`);
  item.dataset["outcome"] = entry.outcome;
  item.dataset["seq"] = String(entry.seq);
  item.appendChild(el("span", `badge outcome-${entry.outcome}`, entry.outcome));
  item.appendChild(renderEcho(entry));
  if (entry.losr !== null) {
    item.appendChild(el("code", "losr-text", entry.losr));
    const score = entry.score === null ? "" : entry.score.toFixed(3);
    item.appendChild(el("span", "score", `score ${score}${entry.tie ? " (tie)" : ""}`));
  } else if (entry.message !== null) {
    item.appendChild(el("span", "failure-message", entry.message));
  }
  item.addEventListener("click", () => handlers.onInspect(entry));
  return item;
}

function renderInspector(entry: CommandLogEntry | null): HTMLElement {
  const panel = el("section", "inspector");
  panel.appendChild(el("h2", undefined, "parse"));
  if (entry === null) {
    panel.classList.add("disabled");
    panel.appendChild(el("p", "inspector-reason", "select a log entry to inspect its parse"));
    return panel;
  }
  const tree = buildTreePanel(entry);
  if (!tree.enabled) {
    panel.classList.add("disabled");
    panel.appendChild(el("p", "inspector-reason", tree.reason ?? "no tree available"));
    return panel;
  }

  const body = el("div", "tree-body");
  body.style.height = `${tree.rows.length * TREE_ROW_HEIGHT}px`;
  tree.rows.forEach((row, index) => {
    const rowEl = el("div", `tree-row${row.isFeature ? " feature" : " element"}`);
    rowEl.style.top = `${index * TREE_ROW_HEIGHT}px`;
    rowEl.style.paddingLeft = `${row.depth * 16 + 24}px`;
    rowEl.appendChild(el("span", "row-label", row.label));
    if (row.value !== null) rowEl.appendChild(el("span", "row-value", row.value));
    if (row.chunkIndex !== null) {
      const chunk = entry.chunks[row.chunkIndex];
      if (chunk) {
        const tag = el("span", "chunk-tag", `“${chunk.phrase}”`);
        tag.title = `chunk ${row.chunkIndex}: ${chunk.feature} [${chunk.start}, ${chunk.end})`;
        tag.dataset["chunkIndex"] = String(row.chunkIndex);
        rowEl.appendChild(tag);
      }
    }
    body.appendChild(rowEl);
  });

  if (tree.arrows.length > 0) {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("class", "arrows");
    svg.setAttribute("width", "24");
    svg.setAttribute("height", String(tree.rows.length * TREE_ROW_HEIGHT));
    for (const arrow of tree.arrows) {
      const y1 = arrow.fromRow * TREE_ROW_HEIGHT + TREE_ROW_HEIGHT / 2;
      const y2 = arrow.toRow * TREE_ROW_HEIGHT + TREE_ROW_HEIGHT / 2;
      const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
      path.setAttribute("d", `M 20 ${y1} C 4 ${y1}, 4 ${y2}, 16 ${y2}`);
      path.setAttribute("class", "arrow");
      path.setAttribute("marker-end", "url(#arrowhead)");
      path.dataset["fromRow"] = String(arrow.fromRow);
      path.dataset["toRow"] = String(arrow.toRow);
      path.dataset["refId"] = String(arrow.id);
      svg.appendChild(path);
    }
    const defs = document.createElementNS("http://www.w3.org/2000/svg", "defs");
    defs.innerHTML =
      '<marker id="arrowhead" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
      + '<path d="M 0 0 L 6 3 L 0 6 z"/></marker>';
    svg.appendChild(defs);
    body.appendChild(svg);
  }
  panel.appendChild(body);
  return panel;
}

function renderBanner(state: ConsoleState, handlers: Handlers): HTMLElement | null {
  if (state.banner === null) return null;
  const banner = el("div", `banner banner-${state.banner.kind}`, state.banner.text);
  banner.setAttribute("role", "alert");
  if (state.banner.retryable) {
    const retry = el("button", "retry", "retry");
    retry.type = "button";
    retry.addEventListener("click", handlers.onRetry);
    banner.appendChild(retry);
  }
  return banner;
}

/** Rebuild the whole console UI inside `root` from the state. */
export function renderApp(root: HTMLElement, state: ConsoleState, handlers: Handlers): void {
  root.textContent = "";

  const form = el("form", "command-form");
  const input = el("input", "command-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "e.g. pick up the red cube";
  input.disabled = state.busy;
  input.setAttribute("aria-label", "command");
  const send = el("button", "send", "send") as HTMLButtonElement;
  send.type = "submit";
  send.disabled = state.busy;
  form.appendChild(input);
  form.appendChild(send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text.length > 0) handlers.onSubmit(text);
  });

  const actions = el("div", "actions");
  const undo = el("button", "undo", "undo") as HTMLButtonElement;
  undo.type = "button";
  undo.disabled = state.busy;
  undo.addEventListener("click", handlers.onUndo);
  const reset = el("button", "reset", "reset") as HTMLButtonElement;
  reset.type = "button";
  reset.disabled = state.busy;
  reset.addEventListener("click", handlers.onReset);
  actions.appendChild(undo);
  actions.appendChild(reset);

  const banner = renderBanner(state, handlers);
  if (banner !== null) root.appendChild(banner);
  if (state.notice !== null) root.appendChild(el("div", "notice", state.notice));

  const scenePane = el("section", "scene-pane");
  if (state.view !== null) {
    scenePane.appendChild(renderBoard(state.view));
    scenePane.appendChild(renderGripper(state.view));
  } else {
    scenePane.appendChild(el("p", "no-scene", "no scene"));
  }

  const logPane = el("section", "log-pane");
  logPane.appendChild(form);
  logPane.appendChild(actions);
  const list = el("ol", "log");
  for (const entry of state.log) {
    list.appendChild(renderLogEntry(entry, state.inspected?.seq === entry.seq, handlers));
  }
  logPane.appendChild(list);

  root.appendChild(scenePane);
  root.appendChild(logPane);
  root.appendChild(renderInspector(state.inspected));
}

/**
 * Component-level fidelity check: the shape multiset present in the DOM
 * must equal the scene payload.  Reads glyphs back out of the board and
 * gripper elements, so it exercises rendering, not just the view model.
 */
export function domSceneDiff(root: ParentNode, scene: Scene): string[] {
  const rendered: string[] = [];
  for (const node of root.querySelectorAll(".board .glyph")) {
    const element = node as HTMLElement;
    rendered.push(shapeEntry(
      element.dataset["type"] ?? "?",
      element.dataset["color"] ?? "?",
      Number(element.dataset["x"]),
      Number(element.dataset["y"]),
      Number(element.dataset["z"]),
    ));
  }
  const expected = scene.shapes.map((s) => shapeEntry(s.type, s.color, s.x, s.y, s.z));
  const problems = entriesDiff(rendered, expected);

  const gripperGlyph = root.querySelector(".gripper .glyph") as HTMLElement | null;
  const renderedGripper = gripperGlyph
    ? `${gripperGlyph.dataset["type"]} ${gripperGlyph.dataset["color"]}`
    : null;
  const expectedGripper = scene.gripper ? `${scene.gripper.type} ${scene.gripper.color}` : null;
  if (renderedGripper !== expectedGripper) {
    problems.push(`gripper shows ${renderedGripper ?? "empty"}, `
      + `payload says ${expectedGripper ?? "empty"}`);
  }
  return problems;
}
