export { Matrix } from './matrix.js';
export { NpyFormatError, decodeNpy, encodeNpy, readNpy, writeNpy } from './npy.js';
export type { Descr, NpyArray } from './npy.js';
export { ModelError, RefModel, loadModel } from './model.js';
export { PlanError, loadPlan, maxSourceIndex, mixLabels, mixRows } from './plan.js';
export type { MixupPlan, PlanEntry } from './plan.js';
export { layerEntries, renderManifest } from './manifest.js';
export type { LayerEntry, Manifest, MixupSection } from './manifest.js';
export { ExportError, exportActivations } from './export.js';
export type { ExportOptions } from './export.js';
export { runCli } from './cli.js';
