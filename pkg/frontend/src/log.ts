/**
 * The command log: one entry per submitted command, in submission order.
 *
 * Each entry records the input text, the outcome, the chosen LOSR text with
 * its score and tie flag when a parse was selected, and whatever error
 * detail the service attached (oov phrase, candidate groundings, per-parse
 * failures).  Failures of the transport or of the session itself are not
 * command outcomes and never become entries.
 */
import type { ServiceFailure } from "./client";
import type { Chunk, CommandResponse, ErrorDetail } from "./types";

export const OUTCOMES = ["executed", "oov", "no-parse", "all-rejected", "ambiguous"] as const;
export type Outcome = (typeof OUTCOMES)[number];

const FAILURE_OUTCOMES = new Set<string>(["oov", "no-parse", "all-rejected", "ambiguous"]);

export interface CommandLogEntry {
  /** 1-based submission order. */
  seq: number;
  text: string;
  outcome: Outcome;
  /** Chosen LOSR text; null when no parse was selected. */
  losr: string | null;
  losrPretty: string | null;
  score: number | null;
  tie: boolean;
  /** Chunks of the input, for the inspector's alignment; empty when unknown. */
  chunks: Chunk[];
  /** Service message, null for executed commands. */
  message: string | null;
  detail: ErrorDetail | null;
}

export function entryFromResponse(seq: number, response: CommandResponse): CommandLogEntry {
  return {
    seq,
    text: response.text,
    outcome: "executed",
    losr: response.losr,
    losrPretty: response.losrPretty,
    score: response.score,
    tie: response.tie,
    chunks: response.chunks,
    message: null,
    detail: null,
  };
}

/**
 * Turn a rejected command into a log entry, or return null when the failure
 * is not a command outcome (unknown session, bad request and the like).
 */
export function entryFromFailure(seq: number, text: string,
                                 failure: ServiceFailure): CommandLogEntry | null {
  if (!FAILURE_OUTCOMES.has(failure.code)) return null;
  return {
    seq,
    text,
    outcome: failure.code as Outcome,
    losr: null,
    losrPretty: null,
    score: null,
    tie: false,
    chunks: [],
    message: failure.message,
    detail: failure.detail,
  };
}
