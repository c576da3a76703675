/**
 * Display-only reader for the serialized LOSR tree text the service returns.
 *
 * The console performs no linguistic work: this module only recovers the
 * nesting of an s-expression so the inspector can draw it.  A node is
 * `(name: item item ...)`; items are nested nodes or bare value words.
 * Bare words are joined into the node's value, nested nodes become
 * children.
 */

export interface DisplayNode {
  label: string;
  /** Space-joined bare words of the node, null for element nodes. */
  value: string | null;
  children: DisplayNode[];
}

export class TreeTextError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (at offset ${offset})`);
    this.name = "TreeTextError";
  }
}

class Reader {
  pos = 0;
  constructor(readonly text: string) {}

  skipSpace(): void {
    while (this.pos < this.text.length && /\s/.test(this.text[this.pos]!)) this.pos++;
  }

  readWord(): string {
    const start = this.pos;
    while (this.pos < this.text.length && !/[\s():]/.test(this.text[this.pos]!)) this.pos++;
    if (this.pos === start) throw new TreeTextError("expected a word", this.pos);
    return this.text.slice(start, this.pos);
  }

  expect(ch: string): void {
    if (this.text[this.pos] !== ch) {
      throw new TreeTextError(`expected ${JSON.stringify(ch)}`, this.pos);
    }
    this.pos++;
  }

  readNode(): DisplayNode {
    this.skipSpace();
    this.expect("(");
    this.skipSpace();
    const label = this.readWord();
    this.skipSpace();
    this.expect(":");
    const words: string[] = [];
    const children: DisplayNode[] = [];
    for (;;) {
      this.skipSpace();
      const ch = this.text[this.pos];
      if (ch === undefined) throw new TreeTextError("unclosed node", this.pos);
      if (ch === ")") {
        this.pos++;
        break;
      }
      if (ch === "(") {
        children.push(this.readNode());
      } else {
        words.push(this.readWord());
      }
    }
    return {
      label,
      value: words.length > 0 ? words.join(" ") : null,
      children,
    };
  }
}

/** Parse serialized tree text (single-line or pretty form) for display. */
export function readTreeText(text: string): DisplayNode {
  const reader = new Reader(text);
  const node = reader.readNode();
  reader.skipSpace();
  if (reader.pos !== text.length) {
    throw new TreeTextError("trailing text after the tree", reader.pos);
  }
  return node;
}
