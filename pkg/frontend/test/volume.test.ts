import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as path from 'node:path';

import { describe, expect, it } from 'vitest';

import { withScratchDir } from '../src/native.js';
import { readVolume, volumeFromArray, voxelIndex, writeVolume } from '../src/volume.js';

function counting(n: number): Uint16Array {
  const data = new Uint16Array(n);
  for (let i = 0; i < n; i++) data[i] = i;
  return data;
}

describe('voxelIndex', () => {
  const dims: [number, number, number] = [3, 4, 5];

  it('walks x fastest, then y, then z', () => {
    expect(voxelIndex(dims, 0, 0, 0)).toBe(0);
    expect(voxelIndex(dims, 1, 0, 0)).toBe(1);
    expect(voxelIndex(dims, 0, 1, 0)).toBe(3);
    expect(voxelIndex(dims, 0, 0, 1)).toBe(12);
    expect(voxelIndex(dims, 2, 3, 4)).toBe(3 * 4 * 5 - 1);
  });

  it('rejects out-of-grid voxels', () => {
    expect(() => voxelIndex(dims, 3, 0, 0)).toThrow(RangeError);
    expect(() => voxelIndex(dims, 0, -1, 0)).toThrow(RangeError);
    expect(() => voxelIndex(dims, 0, 0, 5)).toThrow(RangeError);
  });
});

describe('volumeFromArray', () => {
  it('rejects 2D dims', () => {
    expect(() => volumeFromArray(new Uint8Array(12), [3, 4], [1, 1], 'label')).toThrow(
      /three axes/,
    );
  });

  it('rejects 4D dims', () => {
    expect(() => volumeFromArray(new Uint8Array(16), [2, 2, 2, 2], [1, 1, 1], 'label')).toThrow(
      /three axes/,
    );
  });

  it('rejects length mismatch', () => {
    expect(() => volumeFromArray(new Uint8Array(7), [2, 2, 2], [1, 1, 1], 'label')).toThrow(
      /does not match dims/,
    );
  });

  it('rejects fractional and non-positive dims', () => {
    expect(() => volumeFromArray(new Uint8Array(8), [2, 2.5, 2], [1, 1, 1], 'label')).toThrow();
    expect(() => volumeFromArray(new Uint8Array(0), [2, 0, 2], [1, 1, 1], 'label')).toThrow();
  });

  it('rejects non-positive spacing', () => {
    expect(() => volumeFromArray(new Uint8Array(8), [2, 2, 2], [1, -1, 1], 'label')).toThrow(
      /spacing/,
    );
    expect(() => volumeFromArray(new Uint8Array(8), [2, 2, 2], [1, 0, 1], 'label')).toThrow(
      /spacing/,
    );
  });

  it('rejects float payloads for mask and label kinds', () => {
    expect(() => volumeFromArray(new Float32Array(8), [2, 2, 2], [1, 1, 1], 'label')).toThrow(
      /integer dtype/,
    );
    expect(() => volumeFromArray(new Float64Array(8), [2, 2, 2], [1, 1, 1], 'mask')).toThrow(
      /integer dtype/,
    );
  });

  it('accepts float payloads for scalar volumes', () => {
    const vol = volumeFromArray(new Float32Array(8), [2, 2, 2], [0.5, 0.5, 2], 'scalar');
    expect(vol.dtype).toBe('float32');
  });
});

describe('write and read roundtrip', () => {
  it('preserves a uint16 label volume exactly', () => {
    withScratchDir((dir) => {
      const vol = volumeFromArray(counting(3 * 4 * 5), [3, 4, 5], [0.5, 1, 2], 'label');
      const bin = writeVolume(vol, path.join(dir, 'vol'));
      expect(bin).toBe(path.join(dir, 'vol.bin'));
      expect(fs.existsSync(path.join(dir, 'vol.json'))).toBe(true);

      const back = readVolume(bin);
      expect(back.dims).toEqual([3, 4, 5]);
      expect(back.spacing).toEqual([0.5, 1, 2]);
      expect(back.dtype).toBe('uint16');
      expect(back.kind).toBe('label');
      expect(back.data).toEqual(vol.data);
    });
  });

  it('preserves float64 scalars bit for bit', () => {
    withScratchDir((dir) => {
      const data = new Float64Array([0.1, -3.5, 1e-300, 6.02e23, 0, 1 / 3, Infinity, -0]);
      const vol = volumeFromArray(data, [2, 2, 2], [1, 1, 1], 'scalar');
      const back = readVolume(writeVolume(vol, path.join(dir, 's.bin')));
      expect(new Uint8Array(back.data.buffer)).toEqual(new Uint8Array(data.buffer));
    });
  });

  it('reads via the stem or either file of the pair', () => {
    withScratchDir((dir) => {
      const vol = volumeFromArray(new Uint8Array([1, 0, 2, 3]), [4, 1, 1], [1, 1, 1], 'label');
      writeVolume(vol, path.join(dir, 'v'));
      for (const name of ['v', 'v.bin', 'v.json']) {
        expect(readVolume(path.join(dir, name)).data).toEqual(vol.data);
      }
    });
  });

  it('defaults kind to label when the sidecar omits it', () => {
    withScratchDir((dir) => {
      const vol = volumeFromArray(new Uint8Array(8), [2, 2, 2], [1, 1, 1], 'mask');
      writeVolume(vol, path.join(dir, 'm'));
      const json = path.join(dir, 'm.json');
      const meta = JSON.parse(fs.readFileSync(json, 'utf8'));
      delete meta.kind;
      fs.writeFileSync(json, JSON.stringify(meta));
      expect(readVolume(json).kind).toBe('label');
    });
  });
});

describe('readVolume validation', () => {
  function writeSample(dir: string): string {
    const vol = volumeFromArray(counting(8), [2, 2, 2], [1, 1, 1], 'label');
    return writeVolume(vol, path.join(dir, 'v'));
  }

  function editMeta(dir: string, edit: (meta: Record<string, unknown>) => void): void {
    const json = path.join(dir, 'v.json');
    const meta = JSON.parse(fs.readFileSync(json, 'utf8'));
    edit(meta);
    fs.writeFileSync(json, JSON.stringify(meta));
  }

  it('requires the sidecar', () => {
    withScratchDir((dir) => {
      const bin = writeSample(dir);
      fs.rmSync(path.join(dir, 'v.json'));
      expect(() => readVolume(bin)).toThrow(/missing raw sidecar/);
    });
  });

  it('requires every sidecar key', () => {
    withScratchDir((dir) => {
      writeSample(dir);
      editMeta(dir, (meta) => delete meta.order);
      expect(() => readVolume(path.join(dir, 'v'))).toThrow(/lacks required key 'order'/);
    });
  });

  it('rejects any order other than x-fastest', () => {
    withScratchDir((dir) => {
      writeSample(dir);
      editMeta(dir, (meta) => (meta.order = 'y-fastest'));
      expect(() => readVolume(path.join(dir, 'v'))).toThrow(/only 'x-fastest' is defined/);
    });
  });

  it('rejects dtypes outside the contract', () => {
    withScratchDir((dir) => {
      writeSample(dir);
      editMeta(dir, (meta) => (meta.dtype = 'int64'));
      expect(() => readVolume(path.join(dir, 'v'))).toThrow(/unsupported raw dtype 'int64'/);
    });
  });

  it('rejects a payload whose size disagrees with dims', () => {
    withScratchDir((dir) => {
      const bin = writeSample(dir);
      fs.writeFileSync(bin, fs.readFileSync(bin).subarray(0, 9));
      expect(() => readVolume(bin)).toThrow(/size mismatch/);
    });
  });

  it('rejects 2D dims in the sidecar', () => {
    withScratchDir((dir) => {
      writeSample(dir);
      editMeta(dir, (meta) => (meta.dims = [4, 4]));
      expect(() => readVolume(path.join(dir, 'v'))).toThrow(/bad dims/);
    });
  });
});

describe('native interop', () => {
  it('agrees with the native reader on voxel placement', () => {
    // value at (x, y, z) here must surface at array[z, y, x] natively
    withScratchDir((dir) => {
      const dims: [number, number, number] = [2, 3, 4];
      const vol = volumeFromArray(counting(2 * 3 * 4), dims, [1, 1, 1], 'label');
      const bin = writeVolume(vol, path.join(dir, 'v'));
      const python = process.env.TUBEKIT_PYTHON ?? 'python3';
      const probe = [
        'import sys',
        'from tubekit.voxio import read_volume',
        'v = read_volume(sys.argv[1])',
        'print(v.data[1, 2, 0], v.data[3, 0, 1], v.data.shape)',
      ].join('\n');
      const out = execFileSync(python, ['-c', probe, bin], { encoding: 'utf8' }).trim();
      const atZ1Y2X0 = vol.data[voxelIndex(dims, 0, 2, 1)];
      const atZ3Y0X1 = vol.data[voxelIndex(dims, 1, 0, 3)];
      expect(out).toBe(`${atZ1Y2X0} ${atZ3Y0X1} (4, 3, 2)`);
    });
  });
});
