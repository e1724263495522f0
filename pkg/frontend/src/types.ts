import { z } from "zod";

/** Everything shown in the console is one of these wire shapes, validated at
 *  the boundary. The session service is the single source of truth; the UI
 *  computes nothing beyond progress ratios. */

export const Answer = z.enum(["left_better", "right_better", "cannot_tell"]);
export type Answer = z.infer<typeof Answer>;

export const Phase = z.enum([
  "awaiting_labels",
  "computing",
  "ssl_step",
  "done",
  "suspended",
  "failed",
]);
export type Phase = z.infer<typeof Phase>;

const ParamValues = z.record(z.union([z.number(), z.string()]));

export const QueryView = z.object({
  query_id: z.string(),
  iteration: z.number().int(),
  issued_at: z.string().nullable(),
  left: z.object({ id: z.number().int(), values: ParamValues }),
  right: z.object({ id: z.number().int(), values: ParamValues }),
  differing: z.array(z.string()),
});
export type QueryView = z.infer<typeof QueryView>;

export const CaPoint = z.object({ iteration: z.number().int(), ca: z.number() });
export type CaPoint = z.infer<typeof CaPoint>;

export const Resolution = z.object({
  query_id: z.string(),
  label: z.number().int(),
  abstained: z.boolean(),
});
export type Resolution = z.infer<typeof Resolution>;

export const SessionStatus = z.object({
  session_id: z.string(),
  phase: Phase,
  created_at: z.string().nullable(),
  variant: z.string().nullable(),
  Q: z.number().int().nullable(),
  q: z.number().int().nullable(),
  labels_used: z.number().int(),
  iteration: z.number().int(),
  pending: z.number().int(),
  error: z.string().nullable(),
  ca_history: z.array(CaPoint),
  ssl_steps: z.array(z.number().int()),
  last_batch: z.array(Resolution),
  // present once the session is done
  ca: z.number().nullable().optional(),
  ra: z.number().nullable().optional(),
  flags: z.array(z.string()).optional(),
  pseudolabels: z.number().int().optional(),
  abstentions: z.number().int().optional(),
});
export type SessionStatus = z.infer<typeof SessionStatus>;

export const SubmitAck = z.object({
  session_id: z.string(),
  query_id: z.string(),
  status: z.enum(["recorded", "duplicate"]),
  answered: z.number().int(),
  expected: z.number().int(),
  phase: Phase,
});
export type SubmitAck = z.infer<typeof SubmitAck>;

export const SessionRow = z.object({
  session_id: z.string(),
  phase: Phase,
  created_at: z.string().nullable(),
});
export type SessionRow = z.infer<typeof SessionRow>;

export const ModelExport = z.object({
  session_id: z.string(),
  model: z.unknown(),
  ca: z.number().nullable(),
  ra: z.number().nullable(),
});
export type ModelExport = z.infer<typeof ModelExport>;
