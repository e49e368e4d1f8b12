/**
 * Typed wrappers around the tubekit CLI.
 *
 * Each call stages its volumes in a scratch directory as raw little-endian
 * payloads with JSON sidecars, invokes one subcommand, and reads the result
 * back. The wrappers add nothing numeric: output bytes are exactly what the
 * native side wrote.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { runNative, withScratchDir } from './native.js';
import { readVolume, writeVolume, type Volume } from './volume.js';

export interface AxisTriple {
  x: number;
  y: number;
  z: number;
}

export interface AxisSeries {
  x: number[];
  y: number[];
  z: number[];
}

export type ScaleMode = 'all' | 'pow2';
export type TiePolicy = 'stable' | 'promote';

/** Per-axis fractal fit as emitted by the fd subcommand. */
export interface FractalReport {
  fd: AxisTriple;
  raw_slope: AxisTriple;
  r_squared: AxisTriple;
  scales: AxisSeries;
  counts: AxisSeries;
  low_confidence: boolean;
}

export interface AxisAssignment {
  rank: 'fd_min' | 'fd_mid' | 'fd_max';
  assigned: number;
  promoted: boolean;
}

/** Patch-size reassignment plan as emitted by the plan-patch subcommand. */
export interface PatchPlan {
  initial_ps: AxisTriple;
  fd: AxisTriple;
  assigned_ps: AxisTriple;
  tie_policy: TiePolicy;
  divisor: number | null;
  provenance: { x: AxisAssignment; y: AxisAssignment; z: AxisAssignment };
  notes: string[];
}

/** Knobs shared by skel and weights. Unset fields keep the native defaults. */
export interface SkeletonParams {
  classId?: number;
  alpha1?: number;
  gamma?: number;
  alpha2?: number;
  beta?: number;
  radiusUnits?: 'spacing-max' | 'mm';
}

export interface TracedPath {
  start: [number, number, number];
  end: [number, number, number];
  cost: number;
  arc_length_mm: number;
  voxels: [number, number, number][];
}

export interface SkeletonPaths {
  params: {
    alpha1: number;
    gamma: number;
    alpha2: number;
    beta: number;
    radius_units: string;
  };
  classes: Record<string, TracedPath[]>;
}

export interface SkeletonizeOptions extends SkeletonParams {
  /** Also collect every traced path (start, end, cost, arc length, voxels). */
  collectPaths?: boolean;
}

export interface SkeletonizeResult {
  /** Skeleton voxels labelled by class id, zero elsewhere. */
  labels: Volume;
  paths?: SkeletonPaths;
}

export interface WeightMapOptions extends SkeletonParams {
  mode?: 'binary' | 'distance_decay';
  /** Decay length in mm; only meaningful with mode 'distance_decay'. */
  tau?: number;
}

function classArgs(classId: number | undefined): string[] {
  return classId === undefined ? ['--all'] : ['--class', String(classId)];
}

function paramArgs(params: SkeletonParams): string[] {
  const args: string[] = [];
  if (params.alpha1 !== undefined) args.push('--alpha1', String(params.alpha1));
  if (params.gamma !== undefined) args.push('--gamma', String(params.gamma));
  if (params.alpha2 !== undefined) args.push('--alpha2', String(params.alpha2));
  if (params.beta !== undefined) args.push('--beta', String(params.beta));
  if (params.radiusUnits !== undefined) args.push('--radius-units', params.radiusUnits);
  return args;
}

function readJson<T>(file: string): T {
  return JSON.parse(fs.readFileSync(file, 'utf8')) as T;
}

/** Directional fractal dimensions of the foreground union of a label volume. */
export function fractalReport(volume: Volume, scales: ScaleMode = 'all'): FractalReport {
  return withScratchDir((dir) => {
    const src = path.join(dir, 'volume.bin');
    writeVolume(volume, src);
    const out = path.join(dir, 'report.json');
    runNative(['fd', src, '--scales', scales, '--out', out]);
    return readJson<FractalReport>(out);
  });
}

/**
 * Reassign per-axis patch sizes by fractal-dimension rank.
 *
 * The lowest-fd axis receives the largest initial size and the highest-fd
 * axis the smallest; `tie` decides whether equal dimensions share the larger
 * size. `divisor` snaps the result down to a multiple (floored, at least one
 * divisor).
 */
export function rankAndReassign(
  initial: AxisTriple,
  fd: AxisTriple,
  tie: TiePolicy = 'stable',
  divisor?: number,
): PatchPlan {
  return withScratchDir((dir) => {
    // plan-patch only consults the fd block of a report
    const report = path.join(dir, 'fd.json');
    fs.writeFileSync(report, JSON.stringify({ fd }));
    const out = path.join(dir, 'plan.json');
    const args = [
      'plan-patch',
      '--fd-report',
      report,
      '--initial',
      `${initial.x},${initial.y},${initial.z}`,
      '--tie',
      tie,
      '--out',
      out,
    ];
    if (divisor !== undefined) args.push('--divisor', String(divisor));
    runNative(args);
    return readJson<PatchPlan>(out);
  });
}

/**
 * Minimum path-cost skeletons for every class in a label volume (or one
 * class via `classId`), merged into a single skeleton label volume.
 */
export function skeletonizeMulticlass(
  volume: Volume,
  options: SkeletonizeOptions = {},
): SkeletonizeResult {
  return withScratchDir((dir) => {
    const src = path.join(dir, 'labels.bin');
    writeVolume(volume, src);
    const out = path.join(dir, 'skeleton.bin');
    const pathsOut = path.join(dir, 'paths.json');
    const args = ['skel', src, ...classArgs(options.classId), ...paramArgs(options), '--out', out];
    if (options.collectPaths) args.push('--paths', pathsOut);
    runNative(args);
    const result: SkeletonizeResult = { labels: readVolume(out) };
    if (options.collectPaths) result.paths = readJson<SkeletonPaths>(pathsOut);
    return result;
  });
}

/** Skeleton-derived loss weight map (float32, 1.0 on skeleton voxels). */
export function weightMap(volume: Volume, options: WeightMapOptions = {}): Volume {
  return withScratchDir((dir) => {
    const src = path.join(dir, 'labels.bin');
    writeVolume(volume, src);
    const out = path.join(dir, 'weights.bin');
    const args = ['weights', src, ...classArgs(options.classId), ...paramArgs(options), '--out', out];
    if (options.mode !== undefined) args.push('--mode', options.mode);
    if (options.tau !== undefined) args.push('--tau', String(options.tau));
    runNative(args);
    return readVolume(out);
  });
}
