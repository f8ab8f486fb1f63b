/**
 * Thin wrappers around the relight service endpoints; every displayed
 * object image comes from these, never from client-side shading.
 */

import { RelightBody } from "./state.js";

export interface ModelSummary {
  width: number;
  height: number;
  fitted_light: Record<string, unknown>;
  layer_rms: { sp: number; sg: number };
  metadata: Record<string, unknown>;
}

export async function fetchModel(base = ""): Promise<ModelSummary> {
  const r = await fetch(`${base}/api/model`);
  if (!r.ok) throw new Error(`model request failed: ${r.status}`);
  return (await r.json()) as ModelSummary;
}

export async function postRelight(body: RelightBody, base = ""): Promise<Blob> {
  const r = await fetch(`${base}/api/relight`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!r.ok) throw new Error(`relight failed: ${r.status}`);
  return await r.blob();
}

export function layerUrl(name: string, base = ""): string {
  return `${base}/api/layers/${name}`;
}
