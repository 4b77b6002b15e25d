/** Wire types mirrored from the toolchain's JSON schemas. */

export interface ObjectNodeDoc {
  id: string;
  name: string;
  attributes?: string[];
}

export interface RelationDoc {
  subject_id: string;
  predicate: string;
  object_id: string;
}

export interface SceneGraphDoc {
  objects: ObjectNodeDoc[];
  relations: RelationDoc[];
}

export interface PromptBundleDoc {
  src: string;
  tgt: string;
  tgt_new: string;
  tgt_bgd: string;
  token_counts: Record<string, number>;
  truncated: { phrase: string; reason: string }[];
}

export interface DeltaDoc {
  added: { subject: string; predicate: string; object: string }[];
  removed: { subject: string; predicate: string; object: string }[];
}

export type RunStatus = "pending" | "running" | "done" | "failed";

export interface RunViewDoc {
  run_id: string;
  status: RunStatus;
  manifest: RunManifestDoc | null;
}

export interface RunManifestDoc {
  run_id: string;
  status: "succeeded" | "failed";
  prompt_bundle?: PromptBundleDoc;
  metrics?: { psnr_db?: number | "inf"; ssim?: number; skipped?: string };
  error?: { stage: string; message: string };
  [key: string]: unknown;
}

/** One graph gesture in the toolchain's edit-op JSON form. */
export type EditOpDoc =
  | { kind: "add_relation"; subject: unknown; predicate: string; object: unknown }
  | { kind: "remove_relation"; subject: unknown; predicate: string; object: unknown }
  | { kind: "replace_node_name"; node: unknown; new_name: string }
  | { kind: "set_attributes"; node: unknown; attributes: string[] }
  | { kind: "remove_node"; node: unknown };
