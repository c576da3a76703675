/**
 * View model of a scene: a grid of cells, each holding a bottom-up stack of
 * shape glyphs, plus a gripper indicator and a highlight set of coordinates.
 *
 * Building the view never invents or drops shapes; `viewDiff` compares the
 * rendered glyph multiset against a scene payload and is the check behind
 * the console's fidelity invariant (the diff must be empty after every
 * response).  Highlights only mark existing glyphs and cells; they never
 * alter geometry.
 */
import type { Scene, ShapeJson } from "./types";

export interface GlyphView {
  type: string;
  color: string;
  highlighted: boolean;
}

export interface CellView {
  x: number;
  y: number;
  /** Shapes at this cell, index 0 at the bottom. */
  stack: GlyphView[];
  /** True when a highlight names this cell, even on a vacated level. */
  marked: boolean;
}

/** Coordinate key of one board position, `"x,y,z"`. */
export type HighlightKey = `${number},${number},${number}`;

export function highlightKey(x: number, y: number, z: number): HighlightKey {
  return `${x},${y},${z}`;
}

export interface SceneView {
  boardSize: number;
  /** Row-major grid, `cells[y][x]`. */
  cells: CellView[][];
  gripper: GlyphView | null;
  highlights: HighlightKey[];
}

/** The scene payload cannot be drawn as a board without lying about it. */
export class SceneShapeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SceneShapeError";
  }
}

/**
 * Build the view for a scene, marking every glyph whose coordinate appears
 * in `highlights`.  Throws SceneShapeError when the payload is structurally
 * valid JSON but geometrically impossible to render faithfully.
 */
export function buildSceneView(scene: Scene,
                               highlights: Iterable<HighlightKey> = []): SceneView {
  const marks = new Set(highlights);
  const size = scene.board_size;
  const byCell = new Map<string, ShapeJson[]>();

  for (const shape of scene.shapes) {
    if (shape.x >= size || shape.y >= size) {
      throw new SceneShapeError(
        `shape at (${shape.x}, ${shape.y}) is outside the ${size}x${size} board`);
    }
    const key = `${shape.x},${shape.y}`;
    const stack = byCell.get(key) ?? [];
    stack.push(shape);
    byCell.set(key, stack);
  }

  const cells: CellView[][] = [];
  for (let y = 0; y < size; y++) {
    const row: CellView[] = [];
    for (let x = 0; x < size; x++) {
      const stacked = (byCell.get(`${x},${y}`) ?? []).slice().sort((a, b) => a.z - b.z);
      const stack: GlyphView[] = [];
      stacked.forEach((shape, level) => {
        if (shape.z !== level) {
          const reason = shape.z < level ? "two shapes occupy" : "a gap below";
          throw new SceneShapeError(
            `cell (${x}, ${y}): ${reason} level ${Math.min(shape.z, level)}`);
        }
        stack.push({
          type: shape.type,
          color: shape.color,
          highlighted: marks.has(highlightKey(x, y, shape.z)),
        });
      });
      const marked = stack.some((g) => g.highlighted) ||
        [...marks].some((key) => key.startsWith(`${x},${y},`));
      row.push({ x, y, stack, marked });
    }
    cells.push(row);
  }

  return {
    boardSize: size,
    cells,
    gripper: scene.gripper
      ? { type: scene.gripper.type, color: scene.gripper.color, highlighted: false }
      : null,
    highlights: [...marks].sort(),
  };
}

function multiset(entries: Iterable<string>): Map<string, number> {
  const counts = new Map<string, number>();
  for (const entry of entries) counts.set(entry, (counts.get(entry) ?? 0) + 1);
  return counts;
}

/** Canonical description of one placed shape, the unit the diff counts. */
export function shapeEntry(type: string, color: string,
                           x: number, y: number, z: number): string {
  return `${type} ${color} @ (${x}, ${y}, ${z})`;
}

/** Multiset difference between rendered and expected shape entries. */
export function entriesDiff(renderedEntries: Iterable<string>,
                            expectedEntries: Iterable<string>): string[] {
  const problems: string[] = [];
  const rendered = multiset(renderedEntries);
  const expected = multiset(expectedEntries);
  for (const [entry, count] of expected) {
    const have = rendered.get(entry) ?? 0;
    if (have < count) problems.push(`missing ${count - have} of ${entry}`);
  }
  for (const [entry, count] of rendered) {
    const want = expected.get(entry) ?? 0;
    if (count > want) problems.push(`unexpected ${count - want} of ${entry}`);
  }
  return problems;
}

/**
 * Differences between the glyphs a view renders and a scene payload.
 * Empty when the view is a faithful rendering; each entry names one
 * missing or unexpected glyph, or a board/gripper mismatch.
 */
export function viewDiff(view: SceneView, scene: Scene): string[] {
  const problems: string[] = [];
  if (view.boardSize !== scene.board_size) {
    problems.push(`board size ${view.boardSize} rendered for payload ${scene.board_size}`);
  }

  problems.push(...entriesDiff(
    view.cells.flat().flatMap((cell) =>
      cell.stack.map((glyph, level) => shapeEntry(glyph.type, glyph.color, cell.x, cell.y, level))),
    scene.shapes.map((s) => shapeEntry(s.type, s.color, s.x, s.y, s.z)),
  ));

  const renderedGripper = view.gripper ? `${view.gripper.type} ${view.gripper.color}` : null;
  const expectedGripper = scene.gripper ? `${scene.gripper.type} ${scene.gripper.color}` : null;
  if (renderedGripper !== expectedGripper) {
    problems.push(`gripper shows ${renderedGripper ?? "empty"}, `
      + `payload says ${expectedGripper ?? "empty"}`);
  }
  return problems;
}
