/**
 * Console state and the transitions the UI can trigger.
 *
 * The controller owns no linguistic logic and never edits the scene on its
 * own: the scene it holds is always the last payload a service response
 * carried, and undo and reset go through the service like everything else.
 * After every response that carries a scene it rebuilds the view and runs
 * the view-model diff; the result is kept on the state so tests (and a
 * paranoid banner) can assert it is empty.
 *
 * One command may be in flight at a time.  While `busy` is set the UI
 * disables submission, and `submit` refuses further work.
 */
import {
  PayloadMismatch,
  ServiceFailure,
  TransportFailure,
  type SessionApi,
} from "./client";
import { entryFromFailure, entryFromResponse, type CommandLogEntry } from "./log";
import {
  buildSceneView,
  highlightKey,
  SceneShapeError,
  viewDiff,
  type HighlightKey,
  type SceneView,
} from "./sceneView";
import type { GroundingEntry, Scene } from "./types";

export interface Banner {
  kind: "network" | "payload" | "scene" | "service";
  text: string;
  /** The submission can be retried verbatim (transport failures only). */
  retryable: boolean;
}

export interface ConsoleState {
  sessionId: string | null;
  /** Last scene payload received from the service; never edited locally. */
  scene: Scene | null;
  view: SceneView | null;
  highlights: HighlightKey[];
  log: CommandLogEntry[];
  busy: boolean;
  banner: Banner | null;
  /** Short status line for the last submission, e.g. the ambiguous notice. */
  notice: string | null;
  /** View-model diff computed after the most recent response; must be empty. */
  lastDiff: string[];
  /** Log entry shown in the inspector panel, if any. */
  inspected: CommandLogEntry | null;
}

export type SubmitResult =
  | { status: "executed"; entry: CommandLogEntry }
  | { status: "rejected"; entry: CommandLogEntry }
  | { status: "failed" }
  | { status: "busy" }
  | { status: "no-session" };

function initialState(): ConsoleState {
  return {
    sessionId: null,
    scene: null,
    view: null,
    highlights: [],
    log: [],
    busy: false,
    banner: null,
    notice: null,
    lastDiff: [],
    inspected: null,
  };
}

/** Coordinates of every candidate of every grounding entry. */
export function groundingHighlights(entries: GroundingEntry[]): HighlightKey[] {
  const keys = new Set<HighlightKey>();
  for (const entry of entries) {
    for (const candidate of entry.candidates) {
      keys.add(highlightKey(candidate.x, candidate.y, candidate.z));
    }
  }
  return [...keys].sort();
}

export class ConsoleController {
  readonly state: ConsoleState = initialState();
  private seq = 0;

  constructor(private readonly client: SessionApi,
              private readonly onChange: (state: ConsoleState) => void = () => {}) {}

  /** Create a session; `scene` overrides the service's default scene. */
  async start(scene?: Scene): Promise<boolean> {
    if (this.state.busy) return false;
    this.state.busy = true;
    this.state.banner = null;
    this.emit();
    try {
      const session = await this.client.createSession(scene);
      this.state.sessionId = session.sessionId;
      this.applyScene(session.scene, []);
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /** Submit one command; refuses while another is in flight. */
  async submit(text: string): Promise<SubmitResult> {
    if (this.state.busy) return { status: "busy" };
    if (this.state.sessionId === null) return { status: "no-session" };
    this.state.busy = true;
    this.state.banner = null;
    this.state.notice = null;
    this.emit();
    try {
      const response = await this.client.sendCommand(this.state.sessionId, text);
      const entry = entryFromResponse(++this.seq, response);
      this.state.log.push(entry);
      this.applyScene(response.scene, groundingHighlights(response.groundings));
      this.state.notice = `executed: ${response.losr}`;
      return { status: "executed", entry };
    } catch (error) {
      if (error instanceof ServiceFailure) {
        const entry = entryFromFailure(this.seq + 1, text, error);
        if (entry !== null) {
          this.seq++;
          this.state.log.push(entry);
          this.rejected(entry);
          return { status: "rejected", entry };
        }
      }
      this.fail(error);
      return { status: "failed" };
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  async undo(): Promise<boolean> {
    return this.sceneRequest((sid) => this.client.undo(sid));
  }

  async reset(): Promise<boolean> {
    return this.sceneRequest((sid) => this.client.reset(sid));
  }

  inspect(entry: CommandLogEntry | null): void {
    this.state.inspected = entry;
    this.emit();
  }

  private async sceneRequest(call: (sessionId: string) => Promise<Scene>): Promise<boolean> {
    if (this.state.busy || this.state.sessionId === null) return false;
    this.state.busy = true;
    this.state.banner = null;
    this.state.notice = null;
    this.emit();
    try {
      const scene = await call(this.state.sessionId);
      this.applyScene(scene, []);
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /**
   * Adopt a scene payload as the new truth and rebuild the view around it.
   * This is the only place the scene or the view change.
   */
  private applyScene(scene: Scene, highlights: HighlightKey[]): void {
    this.state.scene = scene;
    this.state.highlights = highlights;
    try {
      this.state.view = buildSceneView(scene, highlights);
      this.state.lastDiff = viewDiff(this.state.view, scene);
      if (this.state.lastDiff.length > 0) {
        this.state.banner = {
          kind: "scene",
          text: `view out of step with the scene: ${this.state.lastDiff.join("; ")}`,
          retryable: false,
        };
      }
    } catch (error) {
      if (!(error instanceof SceneShapeError)) throw error;
      this.state.view = null;
      this.state.lastDiff = [error.message];
      this.state.banner = {
        kind: "scene",
        text: `scene cannot be rendered: ${error.message}`,
        retryable: false,
      };
    }
  }

  /** A command outcome that is not "executed": keep the scene, re-highlight. */
  private rejected(entry: CommandLogEntry): void {
    const highlights =
      entry.outcome === "ambiguous" && entry.detail !== null
        ? groundingHighlights(entry.detail.groundings)
        : [];
    if (this.state.scene !== null) {
      this.applyScene(this.state.scene, highlights);
    }
    this.state.notice =
      entry.outcome === "ambiguous"
        ? `ambiguous: ${highlights.length} candidate groundings highlighted, `
          + "scene unchanged"
        : `${entry.outcome}: ${entry.message ?? ""}`;
  }

  /** A failure that is not a command outcome; console state stays put. */
  private fail(error: unknown): void {
    if (error instanceof TransportFailure) {
      this.state.banner = {
        kind: "network",
        text: "the service did not answer; check the connection and retry",
        retryable: true,
      };
      return;
    }
    if (error instanceof PayloadMismatch) {
      this.state.banner = {
        kind: "payload",
        text: `the service answered with an unexpected payload: ${error.message}`,
        retryable: false,
      };
      return;
    }
    if (error instanceof ServiceFailure) {
      this.state.banner = {
        kind: "service",
        text: `${error.code}: ${error.message}`,
        retryable: false,
      };
      return;
    }
    throw error;
  }

  private emit(): void {
    this.onChange(this.state);
  }
}
