/**
 * Example entry point: phantom in, weight map out, toy loss scored.
 *
 * Generates a y-branch phantom natively, builds its skeleton weight map,
 * then evaluates the toy skeleton-weighted loss on three synthetic
 * predictions (perfect, degraded, all zeros). Run with `npm run demo`.
 */

import * as path from 'node:path';
import { pathToFileURL } from 'node:url';

import { weightMap } from './bindings.js';
import { composeLoss, type LossBreakdown, type Prediction } from './lossDemo.js';
import { runNative, withScratchDir } from './native.js';
import { readVolume, type Volume } from './volume.js';

function makePhantom(): Volume {
  return withScratchDir((dir) => {
    const out = path.join(dir, 'phantom.bin');
    runNative([
      'phantom',
      '--kind',
      'y_branch',
      '--radius',
      '3',
      '--length',
      '40',
      '--angle',
      '35',
      '--dims',
      '48,48,56',
      '--out',
      out,
    ]);
    return readVolume(out);
  });
}

function perfectPrediction(label: Volume): Float32Array {
  const pred = new Float32Array(label.data.length);
  for (let i = 0; i < pred.length; i++) pred[i] = label.data[i] ? 1 : 0;
  return pred;
}

/** Deterministically zero out every n-th foreground voxel. */
function degradedPrediction(label: Volume, dropEvery: number): Float32Array {
  const pred = perfectPrediction(label);
  let seen = 0;
  for (let i = 0; i < pred.length; i++) {
    if (pred[i] === 0) continue;
    seen++;
    if (seen % dropEvery === 0) pred[i] = 0;
  }
  return pred;
}

function row(name: string, loss: LossBreakdown): string {
  const cols = [loss.softDice, loss.crossEntropy, loss.skeletonTerm, loss.total];
  return [name.padEnd(10), ...cols.map((v) => v.toFixed(4).padStart(10))].join('  ');
}

export function main(): void {
  const label = makePhantom();
  const [nx, ny, nz] = label.dims;
  console.log(`phantom: y_branch ${nx}x${ny}x${nz}, spacing ${label.spacing.join('x')}`);

  const weights = weightMap(label);
  let skeletonVoxels = 0;
  for (let i = 0; i < weights.data.length; i++) {
    if (weights.data[i] !== 0) skeletonVoxels++;
  }
  console.log(`weight map: ${skeletonVoxels} weighted voxels`);
  console.log();

  const ref = new Uint8Array(label.data.length);
  for (let i = 0; i < ref.length; i++) ref[i] = label.data[i] ? 1 : 0;
  const cases: [string, Prediction][] = [
    ['perfect', perfectPrediction(label)],
    ['degraded', degradedPrediction(label, 3)],
    ['all-zero', new Float32Array(label.data.length)],
  ];

  console.log(['prediction'.padEnd(10), 'soft dice', 'cross ent', 'skel term', 'total']
    .map((h, i) => (i === 0 ? h : h.padStart(10)))
    .join('  '));
  for (const [name, pred] of cases) {
    console.log(row(name, composeLoss(pred, ref, weights.data)));
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
