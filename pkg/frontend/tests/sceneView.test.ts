import { describe, expect, it } from "vitest";
import {
  buildSceneView,
  highlightKey,
  SceneShapeError,
  viewDiff,
  type SceneView,
} from "../src/sceneView";
import type { Scene, ShapeJson } from "../src/types";

function scene(shapes: ShapeJson[], gripper: Scene["gripper"] = null,
               boardSize = 8): Scene {
  return { board_size: boardSize, shapes, gripper };
}

function shape(type: string, color: string, x: number, y: number, z: number): ShapeJson {
  return { type, color, x, y, z };
}

/** Scene with a prism on a cube at one cell and a two-cube stack at another. */
const TWO_COLUMNS = scene([
  shape("cube", "white", 2, 2, 0),
  shape("prism", "cyan", 2, 2, 1),
  shape("cube", "blue", 5, 5, 0),
  shape("cube", "green", 5, 5, 1),
]);

function occupiedCells(view: SceneView): [number, number][] {
  return view.cells.flat()
    .filter((cell) => cell.stack.length > 0)
    .map((cell) => [cell.x, cell.y]);
}

function highlightedGlyphs(view: SceneView): number {
  return view.cells.flat()
    .flatMap((cell) => cell.stack)
    .filter((glyph) => glyph.highlighted).length;
}

describe("buildSceneView", () => {
  it("renders an empty board as an empty grid with an empty gripper", () => {
    const empty = scene([]);
    const view = buildSceneView(empty);
    expect(view.boardSize).toBe(8);
    expect(view.cells).toHaveLength(8);
    for (const row of view.cells) expect(row).toHaveLength(8);
    expect(occupiedCells(view)).toEqual([]);
    expect(view.gripper).toBeNull();
    expect(viewDiff(view, empty)).toEqual([]);
  });

  it("renders stacked shapes as two columns at their cells, bottom up", () => {
    const view = buildSceneView(TWO_COLUMNS);
    expect(occupiedCells(view).sort()).toEqual([[2, 2], [5, 5]]);
    expect(view.cells[2]![2]!.stack).toEqual([
      { type: "cube", color: "white", highlighted: false },
      { type: "prism", color: "cyan", highlighted: false },
    ]);
    expect(view.cells[5]![5]!.stack).toEqual([
      { type: "cube", color: "blue", highlighted: false },
      { type: "cube", color: "green", highlighted: false },
    ]);
    expect(viewDiff(view, TWO_COLUMNS)).toEqual([]);
  });

  it("emphasizes exactly one glyph for a highlight set with one grounding", () => {
    const view = buildSceneView(TWO_COLUMNS, [highlightKey(2, 2, 1)]);
    expect(highlightedGlyphs(view)).toBe(1);
    expect(view.cells[2]![2]!.stack[1]).toEqual(
      { type: "prism", color: "cyan", highlighted: true });
    expect(view.cells[2]![2]!.marked).toBe(true);
    expect(view.cells[5]![5]!.marked).toBe(false);
  });

  it("overlays highlights without altering the geometry", () => {
    const plain = buildSceneView(TWO_COLUMNS);
    const marked = buildSceneView(TWO_COLUMNS,
      [highlightKey(2, 2, 0), highlightKey(5, 5, 1)]);
    expect(viewDiff(marked, TWO_COLUMNS)).toEqual([]);
    const strip = (view: SceneView) =>
      view.cells.flat().map((cell) => cell.stack.map((g) => `${g.type} ${g.color}`));
    expect(strip(marked)).toEqual(strip(plain));
  });

  it("marks the cell of a highlight even when the level is vacated", () => {
    // A grounding recorded before a pickup can point at a now-empty level.
    const view = buildSceneView(scene([shape("cube", "red", 1, 6, 0)]),
      [highlightKey(1, 6, 1)]);
    expect(highlightedGlyphs(view)).toBe(0);
    expect(view.cells[6]![1]!.marked).toBe(true);
  });

  it("shows the held shape on the gripper indicator", () => {
    const holding = scene([], { type: "cube", color: "red" });
    const view = buildSceneView(holding);
    expect(view.gripper).toEqual({ type: "cube", color: "red", highlighted: false });
    expect(viewDiff(view, holding)).toEqual([]);
  });

  it("rejects shapes outside the board", () => {
    expect(() => buildSceneView(scene([shape("cube", "red", 8, 0, 0)])))
      .toThrow(SceneShapeError);
  });

  it("rejects two shapes on the same level of one cell", () => {
    expect(() => buildSceneView(scene([
      shape("cube", "red", 3, 3, 0),
      shape("cube", "blue", 3, 3, 0),
    ]))).toThrow(SceneShapeError);
  });

  it("rejects a floating shape with a gap below it", () => {
    expect(() => buildSceneView(scene([shape("cube", "red", 3, 3, 1)])))
      .toThrow(SceneShapeError);
  });
});

describe("viewDiff", () => {
  it("reports a glyph the view dropped", () => {
    const view = buildSceneView(TWO_COLUMNS);
    view.cells[5]![5]!.stack.pop();
    expect(viewDiff(view, TWO_COLUMNS)).toEqual(["missing 1 of cube green @ (5, 5, 1)"]);
  });

  it("reports a glyph the view invented and the one it replaced", () => {
    const view = buildSceneView(TWO_COLUMNS);
    view.cells[2]![2]!.stack[1] = { type: "cube", color: "red", highlighted: false };
    const diff = viewDiff(view, TWO_COLUMNS);
    expect(diff).toContain("missing 1 of prism cyan @ (2, 2, 1)");
    expect(diff).toContain("unexpected 1 of cube red @ (2, 2, 1)");
  });

  it("reports a gripper mismatch", () => {
    const held = scene([], { type: "prism", color: "cyan" });
    const view = buildSceneView(held);
    view.gripper = null;
    expect(viewDiff(view, held)).toEqual(["gripper shows empty, payload says prism cyan"]);
  });

  it("reports a board size mismatch", () => {
    const view = buildSceneView(scene([], null, 4));
    expect(viewDiff(view, scene([], null, 6)))
      .toEqual(["board size 4 rendered for payload 6"]);
  });

  it("is empty for every faithfully rendered pseudo-random scene", () => {
    // Deterministic linear-congruential stream; no library randomness so the
    // sequence is identical on every run.
    let state = 0x2545f491;
    const next = (bound: number) => {
      state = (state * 1103515245 + 12345) & 0x7fffffff;
      return state % bound;
    };
    const types = ["cube", "prism"];
    const colors = ["red", "green", "blue", "cyan", "yellow", "magenta", "white", "gray"];
    for (let round = 0; round < 50; round++) {
      const size = 4 + next(5);
      const shapes: ShapeJson[] = [];
      for (let x = 0; x < size; x++) {
        for (let y = 0; y < size; y++) {
          const height = next(4);
          for (let z = 0; z < height; z++) {
            shapes.push(shape(types[next(types.length)]!, colors[next(colors.length)]!, x, y, z));
          }
        }
      }
      const gripper = next(2) === 0
        ? null
        : { type: types[next(types.length)]!, color: colors[next(colors.length)]! };
      const payload = scene(shapes, gripper, size);
      const marks = shapes.length > 0
        ? [shapes[next(shapes.length)]!].map((s) => highlightKey(s.x, s.y, s.z))
        : [];
      expect(viewDiff(buildSceneView(payload, marks), payload)).toEqual([]);
    }
  });
});
