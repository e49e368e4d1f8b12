export {
  fractalReport,
  rankAndReassign,
  skeletonizeMulticlass,
  weightMap,
} from './bindings.js';
export type {
  AxisAssignment,
  AxisSeries,
  AxisTriple,
  FractalReport,
  PatchPlan,
  ScaleMode,
  SkeletonParams,
  SkeletonPaths,
  SkeletonizeOptions,
  SkeletonizeResult,
  TiePolicy,
  TracedPath,
  WeightMapOptions,
} from './bindings.js';
export { NativeError, runNative, withScratchDir } from './native.js';
export {
  binaryCrossEntropy,
  composeLoss,
  exampleLossDemo,
  skeletonTerm,
  softDiceLoss,
} from './lossDemo.js';
export type { LossBreakdown, Prediction } from './lossDemo.js';
export { readVolume, volumeFromArray, voxelIndex, writeVolume } from './volume.js';
export type { RawDtype, Volume, VolumeKind, VoxelArray } from './volume.js';
