/**
 * Toy skeleton-weighted loss.
 *
 * Illustrates how a training pipeline would consume a skeleton weight map:
 * a generic term (soft Dice plus binary cross-entropy) is combined with a
 * skeleton recall term that charges the prediction for missing high-weight
 * voxels. Illustrative only, not a tuned training objective.
 */

import { weightMap, type WeightMapOptions } from './bindings.js';
import type { Volume, VoxelArray } from './volume.js';

export interface LossBreakdown {
  softDice: number;
  crossEntropy: number;
  /** 1 - sum(w * p) / sum(w); 0 when the prediction covers every weighted voxel. */
  skeletonTerm: number;
  /** softDice + crossEntropy + skeletonTerm. */
  total: number;
}

export type Prediction = Float32Array | Float64Array;

const EPS = 1e-7;

function assertSameLength(a: ArrayLike<number>, b: ArrayLike<number>, what: string): void {
  if (a.length !== b.length) {
    throw new Error(`${what} length ${b.length} does not match ${a.length}`);
  }
}

function assertUnitRange(pred: Prediction): void {
  for (let i = 0; i < pred.length; i++) {
    const v = pred[i];
    if (!(v >= 0 && v <= 1)) {
      throw new RangeError(`prediction values must lie in [0, 1], got ${v} at ${i}`);
    }
  }
}

/** 1 - 2|P∩R| / (|P|+|R|) on soft predictions, 0 for a perfect binary match. */
export function softDiceLoss(pred: Prediction, ref: ArrayLike<number>): number {
  assertSameLength(ref, pred, 'prediction');
  let inter = 0;
  let mass = 0;
  for (let i = 0; i < pred.length; i++) {
    const r = ref[i] ? 1 : 0;
    inter += pred[i] * r;
    mass += pred[i] + r;
  }
  if (mass === 0) return 0; // both empty
  return 1 - (2 * inter) / mass;
}

/** Mean binary cross-entropy with probabilities clamped away from 0 and 1. */
export function binaryCrossEntropy(pred: Prediction, ref: ArrayLike<number>): number {
  assertSameLength(ref, pred, 'prediction');
  if (pred.length === 0) return 0;
  let acc = 0;
  for (let i = 0; i < pred.length; i++) {
    const p = Math.min(Math.max(pred[i], EPS), 1 - EPS);
    acc -= ref[i] ? Math.log(p) : Math.log(1 - p);
  }
  return acc / pred.length;
}

/**
 * Skeleton recall term: 1 - sum(w * p) / sum(w).
 *
 * Exactly 0 when the prediction is 1 on every voxel the weight map cares
 * about, exactly 1 when the prediction is all zeros.
 */
export function skeletonTerm(weights: VoxelArray, pred: Prediction): number {
  assertSameLength(weights, pred, 'prediction');
  let covered = 0;
  let total = 0;
  for (let i = 0; i < weights.length; i++) {
    const w = weights[i];
    if (w === 0) continue;
    covered += w * pred[i];
    total += w;
  }
  if (total === 0) {
    throw new Error('weight map is all zeros, skeleton term is undefined');
  }
  return 1 - covered / total;
}

/** Combine the three terms on pre-computed inputs. */
export function composeLoss(
  pred: Prediction,
  ref: ArrayLike<number>,
  weights: VoxelArray,
): LossBreakdown {
  const dice = softDiceLoss(pred, ref);
  const ce = binaryCrossEntropy(pred, ref);
  const skel = skeletonTerm(weights, pred);
  return { softDice: dice, crossEntropy: ce, skeletonTerm: skel, total: dice + ce + skel };
}

/**
 * End-to-end demo evaluation: build the weight map for a label volume
 * natively, then score a flat x-fastest prediction array against it.
 */
export function exampleLossDemo(
  label: Volume,
  prediction: Prediction,
  options: WeightMapOptions = {},
): LossBreakdown {
  assertSameLength(label.data, prediction, 'prediction');
  assertUnitRange(prediction);
  const weights = weightMap(label, options);
  const ref = new Uint8Array(label.data.length);
  for (let i = 0; i < ref.length; i++) ref[i] = label.data[i] ? 1 : 0;
  return composeLoss(prediction, ref, weights.data);
}
