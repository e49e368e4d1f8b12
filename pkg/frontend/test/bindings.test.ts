import * as fs from 'node:fs';
import * as path from 'node:path';

import { describe, expect, it } from 'vitest';

import {
  fractalReport,
  rankAndReassign,
  skeletonizeMulticlass,
  weightMap,
} from '../src/bindings.js';
import { NativeError, runNative, withScratchDir } from '../src/native.js';
import { readVolume, volumeFromArray, voxelIndex, type Volume } from '../src/volume.js';

// five phantom shapes used for parity checks against the native CLI
const PHANTOMS: Record<string, string[]> = {
  cylinder: ['--kind', 'cylinder', '--radius', '3', '--length', '30', '--dims', '20,20,40'],
  ball: ['--kind', 'ball', '--radius', '6', '--dims', '20,20,20'],
  torus: ['--kind', 'torus', '--radius', '2.5', '--major-radius', '10', '--dims', '34,34,14'],
  helix: [
    '--kind', 'helix', '--radius', '2.5', '--major-radius', '8',
    '--turns', '2', '--pitch', '14', '--dims', '30,30,44',
  ],
  y_branch: ['--kind', 'y_branch', '--radius', '3', '--length', '40', '--angle', '35', '--dims', '48,48,56'],
};

function makePhantom(dir: string, args: string[]): string {
  const out = path.join(dir, 'phantom.bin');
  runNative(['phantom', ...args, '--out', out]);
  return out;
}

function payloadBytes(volume: Volume): Buffer {
  return Buffer.from(volume.data.buffer, volume.data.byteOffset, volume.data.byteLength);
}

describe('skeletonizeMulticlass parity', () => {
  for (const [name, args] of Object.entries(PHANTOMS)) {
    it(`matches the native skeleton bitwise on ${name}`, () => {
      withScratchDir((dir) => {
        const src = makePhantom(dir, args);
        const nativeOut = path.join(dir, 'native_skel.bin');
        runNative(['skel', src, '--all', '--out', nativeOut]);

        const bound = skeletonizeMulticlass(readVolume(src));
        const native = readVolume(nativeOut);

        expect(bound.labels.dims).toEqual(native.dims);
        expect(bound.labels.spacing).toEqual(native.spacing);
        expect(bound.labels.dtype).toBe(native.dtype);
        expect(Buffer.compare(payloadBytes(bound.labels), fs.readFileSync(nativeOut))).toBe(0);
      });
    });
  }

  it('returns traced paths whose voxels lie on the skeleton', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.cylinder);
      const bound = skeletonizeMulticlass(readVolume(src), { collectPaths: true });
      expect(bound.paths).toBeDefined();
      const paths = bound.paths!;
      expect(paths.params.alpha1).toBe(100000);
      expect(paths.params.gamma).toBe(4);
      const traced = paths.classes['1'];
      expect(traced.length).toBeGreaterThan(0);
      for (const p of traced) {
        expect(p.cost).toBeGreaterThanOrEqual(0);
        expect(p.arc_length_mm).toBeGreaterThanOrEqual(0);
        expect(p.voxels[0]).toEqual(p.start);
        expect(p.voxels[p.voxels.length - 1]).toEqual(p.end);
        for (const [x, y, z] of p.voxels) {
          expect(bound.labels.data[voxelIndex(bound.labels.dims, x, y, z)]).toBe(1);
        }
      }
    });
  });

  it('honours per-call parameters the same way the CLI does', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.cylinder);
      const nativeOut = path.join(dir, 'native_skel.bin');
      runNative(['skel', src, '--all', '--alpha2', '2.4', '--beta', '2.0', '--out', nativeOut]);
      const bound = skeletonizeMulticlass(readVolume(src), { alpha2: 2.4, beta: 2.0 });
      expect(Buffer.compare(payloadBytes(bound.labels), fs.readFileSync(nativeOut))).toBe(0);
    });
  });

  it('surfaces the native diagnostic when nothing can be skeletonized', () => {
    const empty = volumeFromArray(new Uint8Array(6 * 6 * 6), [6, 6, 6], [1, 1, 1], 'label');
    let caught: unknown;
    try {
      skeletonizeMulticlass(empty);
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(NativeError);
    const native = caught as NativeError;
    expect(native.exitCode).toBe(2);
    expect(native.message).toMatch(/no requested class has voxels/);
  });

  it('rejects 2D arrays at the boundary', () => {
    expect(() => volumeFromArray(new Uint8Array(16), [4, 4], [1, 1], 'label')).toThrow(
      /three axes/,
    );
  });
});

describe('weightMap parity', () => {
  it('matches native binary weights bitwise', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.y_branch);
      const nativeOut = path.join(dir, 'native_w.bin');
      runNative(['weights', src, '--all', '--out', nativeOut]);

      const bound = weightMap(readVolume(src));
      expect(bound.dtype).toBe('float32');
      expect(bound.kind).toBe('scalar');
      expect(Buffer.compare(payloadBytes(bound), fs.readFileSync(nativeOut))).toBe(0);
    });
  });

  it('matches native distance-decay weights bitwise', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.cylinder);
      const nativeOut = path.join(dir, 'native_w.bin');
      runNative(['weights', src, '--all', '--mode', 'distance_decay', '--tau', '2.5', '--out', nativeOut]);
      const bound = weightMap(readVolume(src), { mode: 'distance_decay', tau: 2.5 });
      expect(Buffer.compare(payloadBytes(bound), fs.readFileSync(nativeOut))).toBe(0);
    });
  });
});

describe('fractalReport parity', () => {
  it('returns the same JSON the fd subcommand writes', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.helix);
      const out = path.join(dir, 'report.json');
      runNative(['fd', src, '--scales', 'all', '--out', out]);
      const native = JSON.parse(fs.readFileSync(out, 'utf8'));
      expect(fractalReport(readVolume(src))).toEqual(native);
    });
  });

  it('threads the scale ladder choice through', () => {
    withScratchDir((dir) => {
      const src = makePhantom(dir, PHANTOMS.cylinder);
      const out = path.join(dir, 'report.json');
      runNative(['fd', src, '--scales', 'pow2', '--out', out]);
      const native = JSON.parse(fs.readFileSync(out, 'utf8'));
      const report = fractalReport(readVolume(src), 'pow2');
      expect(report).toEqual(native);
      for (const axis of ['x', 'y', 'z'] as const) {
        for (const s of report.scales[axis]) {
          expect(Math.log2(s) % 1).toBe(0);
        }
      }
    });
  });
});

describe('rankAndReassign', () => {
  it('reproduces the airway mapping under the stable policy', () => {
    const plan = rankAndReassign(
      { x: 128, y: 96, z: 192 },
      { x: 0.44, y: 0.4, z: 0.53 },
      'stable',
    );
    expect(plan.assigned_ps).toEqual({ x: 128, y: 192, z: 96 });
    expect(plan.tie_policy).toBe('stable');
  });

  it('reproduces the aorta mapping under the promote policy', () => {
    const plan = rankAndReassign(
      { x: 112, y: 112, z: 176 },
      { x: 0.58, y: 0.58, z: 0.71 },
      'promote',
    );
    expect(plan.assigned_ps).toEqual({ x: 176, y: 176, z: 112 });
    expect(plan.provenance.y.promoted).toBe(true);
  });

  it('snaps to the requested divisor', () => {
    const plan = rankAndReassign(
      { x: 100, y: 100, z: 160 },
      { x: 0.58, y: 0.58, z: 0.71 },
      'promote',
      16,
    );
    expect(plan.divisor).toBe(16);
    for (const axis of ['x', 'y', 'z'] as const) {
      expect(plan.assigned_ps[axis] % 16).toBe(0);
      expect(plan.assigned_ps[axis]).toBeGreaterThan(0);
    }
  });
});
