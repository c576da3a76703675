/**
 * Wire types for the session service API.
 *
 * Every response body is validated against these schemas before it reaches
 * the view layer, so a malformed payload surfaces as a banner instead of a
 * partial render.  Shape types and colours are deliberately open strings:
 * the console renders whatever vocabulary the service uses.
 */
import { z } from "zod";

export const ShapeSchema = z.object({
  type: z.string().min(1),
  color: z.string().min(1),
  x: z.number().int().nonnegative(),
  y: z.number().int().nonnegative(),
  z: z.number().int().nonnegative(),
});
export type ShapeJson = z.infer<typeof ShapeSchema>;

export const GripperSchema = z
  .object({ type: z.string().min(1), color: z.string().min(1) })
  .nullable();
export type GripperJson = z.infer<typeof GripperSchema>;

export const SceneSchema = z.object({
  board_size: z.number().int().positive(),
  shapes: z.array(ShapeSchema),
  gripper: GripperSchema,
});
export type Scene = z.infer<typeof SceneSchema>;

export const SessionResponseSchema = z.object({
  sessionId: z.string().min(1),
  scene: SceneSchema,
});
export type SessionResponse = z.infer<typeof SessionResponseSchema>;

export const ChunkSchema = z.object({
  phrase: z.string(),
  feature: z.string(),
  start: z.number().int().nonnegative(),
  end: z.number().int().nonnegative(),
});
export type Chunk = z.infer<typeof ChunkSchema>;

/** A candidate referent: the shape a grounded entity resolved to. */
export const CandidateSchema = z.object({
  kind: z.string(),
  type: z.string(),
  color: z.string(),
  x: z.number().int(),
  y: z.number().int(),
  z: z.number().int(),
});
export type Candidate = z.infer<typeof CandidateSchema>;

/** One entity of the chosen tree: its node path and candidate referents. */
export const GroundingEntrySchema = z.object({
  path: z.array(z.number().int()),
  candidates: z.array(CandidateSchema),
});
export type GroundingEntry = z.infer<typeof GroundingEntrySchema>;

export const CommandResponseSchema = z.object({
  text: z.string(),
  tokens: z.array(z.string()),
  chunks: z.array(ChunkSchema),
  losr: z.string().min(1),
  losrPretty: z.string().min(1),
  score: z.number(),
  tie: z.boolean(),
  forestSize: z.number().int().nonnegative(),
  parses: z.array(z.object({ losr: z.string(), score: z.number() })),
  groundings: z.array(GroundingEntrySchema),
  scene: SceneSchema,
});
export type CommandResponse = z.infer<typeof CommandResponseSchema>;

export const ErrorBodySchema = z.object({
  code: z.string(),
  message: z.string(),
  category: z.string(),
  detail: z.record(z.string(), z.unknown()).optional(),
});
export type ErrorBody = z.infer<typeof ErrorBodySchema>;

/** Error detail carried by a rejected command, as far as the console reads it. */
export interface ErrorDetail {
  /** Offending phrase of an oov rejection, for underlining in the echo. */
  phrase: string | null;
  /** Candidate referents of an ambiguous rejection, per entity. */
  groundings: GroundingEntry[];
  /** Per-parse failures of an all-rejected outcome. */
  failures: { losr: string; code: string; message: string }[];
}

const FailureListSchema = z.array(
  z.object({ losr: z.string(), code: z.string(), message: z.string() }),
);

/** Pull the console-relevant fields out of an error detail record. */
export function readErrorDetail(detail: Record<string, unknown> | undefined): ErrorDetail {
  const result: ErrorDetail = { phrase: null, groundings: [], failures: [] };
  if (!detail) return result;
  if (typeof detail["phrase"] === "string") result.phrase = detail["phrase"];
  const groundings = z.array(GroundingEntrySchema).safeParse(detail["groundings"]);
  if (groundings.success) result.groundings = groundings.data;
  const failures = FailureListSchema.safeParse(detail["failures"]);
  if (failures.success) result.failures = failures.data;
  return result;
}
