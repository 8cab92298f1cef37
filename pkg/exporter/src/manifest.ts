/**
 * The dataset manifest the scoring package consumes:
 *
 *     {"layers": [{"name", "file", "depth_from_end"}, ...],
 *      "labels": str, "num_classes": int, "inputs": str?,
 *      "mixup": {"plan", "layers": [...], "soft_labels"}?}
 *
 * File paths are relative to the manifest's own directory, so an
 * export directory is self-contained and relocatable.
 */

export interface LayerEntry {
  name: string;
  file: string;
  depth_from_end: number;
}

export interface MixupSection {
  plan: string;
  layers: LayerEntry[];
  soft_labels: string;
}

export interface Manifest {
  layers: LayerEntry[];
  labels: string;
  num_classes: number;
  inputs?: string;
  mixup?: MixupSection;
}

/**
 * Depth assignment follows tap order: the last tap listed is depth 1
 * (the layer closest to the classifier head), the one before it depth
 * 2, and so on. Listing taps shallowest-first therefore matches
 * network order.
 */
export function layerEntries(
  taps: string[],
  fileFor: (tap: string) => string,
): LayerEntry[] {
  return taps.map((tap, idx) => ({
    name: tap,
    file: fileFor(tap),
    depth_from_end: taps.length - idx,
  }));
}

export function renderManifest(manifest: Manifest): string {
  return JSON.stringify(manifest, null, 2) + '\n';
}
