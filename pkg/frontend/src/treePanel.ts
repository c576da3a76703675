/**
 * Inspector panel model for one log entry.
 *
 * A parsed entry yields the tree flattened to indented rows: element rows
 * for nodes and feature rows for value leaves.  Rows are aligned with the
 * entry's chunks where a pairing is obvious (same feature, in order), and
 * every `reference-id` leaf produces an arrow from its entity row to the
 * entity row carrying the matching `id`.  Entries without a chosen parse
 * yield a disabled panel that explains why there is no tree.
 */
import type { CommandLogEntry } from "./log";
import { readTreeText, TreeTextError, type DisplayNode } from "./losrTree";

export interface TreeRow {
  depth: number;
  label: string;
  /** Feature value; null on element rows. */
  value: string | null;
  isFeature: boolean;
  /** Index into the entry's chunk list, when a chunk aligns with this row. */
  chunkIndex: number | null;
}

/** An anaphoric link, drawn as an arrow between two rows. */
export interface ReferenceArrow {
  /** Row of the entity holding the reference-id (the anaphor). */
  fromRow: number;
  /** Row of the entity holding the matching id (the antecedent). */
  toRow: number;
  id: number;
}

export interface TreePanel {
  enabled: boolean;
  /** Why the panel is disabled; null when enabled. */
  reason: string | null;
  rows: TreeRow[];
  arrows: ReferenceArrow[];
}

function disabled(reason: string): TreePanel {
  return { enabled: false, reason, rows: [], arrows: [] };
}

const OUTCOME_REASONS: Record<string, string> = {
  oov: "no tree: a phrase was outside the lexicon",
  "no-parse": "no tree: the chunks form no grammatical parse",
  ambiguous: "no tree: no single parse was chosen",
  "all-rejected": "no tree: every parse failed against the scene",
};

export function buildTreePanel(entry: CommandLogEntry): TreePanel {
  if (entry.losr === null) {
    return disabled(OUTCOME_REASONS[entry.outcome] ?? "no tree available");
  }

  let root: DisplayNode;
  try {
    root = readTreeText(entry.losr);
  } catch (error) {
    if (error instanceof TreeTextError) {
      return disabled(`tree text unreadable: ${error.message}`);
    }
    throw error;
  }

  const rows: TreeRow[] = [];
  const entityRowById = new Map<number, number>();
  const references: { fromRow: number; id: number }[] = [];

  const walk = (node: DisplayNode, depth: number): void => {
    const row = rows.length;
    rows.push({
      depth,
      label: node.label,
      value: node.value,
      isFeature: node.children.length === 0 && node.value !== null,
      chunkIndex: null,
    });
    for (const child of node.children) {
      if (child.label === "id" && child.value !== null) {
        entityRowById.set(Number(child.value), row);
      }
      if (child.label === "reference-id" && child.value !== null) {
        references.push({ fromRow: row, id: Number(child.value) });
      }
      walk(child, depth + 1);
    }
  };
  walk(root, 0);

  const arrows: ReferenceArrow[] = [];
  for (const ref of references) {
    const toRow = entityRowById.get(ref.id);
    if (toRow !== undefined) arrows.push({ fromRow: ref.fromRow, toRow, id: ref.id });
  }

  alignChunks(rows, entry);
  return { enabled: true, reason: null, rows, arrows };
}

/**
 * Pair feature rows with the entry's chunks, in order, by feature name.
 * Reference chunks surface in the tree as a `type: reference` leaf next to
 * a `reference-id`, so they pair with that leaf.  Rows or chunks without an
 * obvious partner stay unaligned.
 */
function alignChunks(rows: TreeRow[], entry: CommandLogEntry): void {
  const matches = (row: TreeRow, feature: string): boolean => {
    if (!row.isFeature) return false;
    if (row.label === feature) return true;
    return feature === "reference" && row.label === "type" && row.value === "reference";
  };

  let next = 0;
  entry.chunks.forEach((chunk, chunkIndex) => {
    for (let i = next; i < rows.length; i++) {
      const row = rows[i]!;
      if (row.chunkIndex === null && matches(row, chunk.feature)) {
        row.chunkIndex = chunkIndex;
        next = i + 1;
        return;
      }
    }
  });
}
