/* Raw volume interchange: a `.bin` payload of little-endian voxels in
 * x-fastest order next to a `.json` sidecar naming dims, spacing, dtype
 * and kind. This is the file contract the tubekit CLI reads and writes,
 * so it is the one boundary format these bindings need. */

import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

export type VolumeKind = 'mask' | 'label' | 'scalar';

export type RawDtype = 'uint8' | 'int16' | 'uint16' | 'int32' | 'float32' | 'float64';

export type VoxelArray =
  | Uint8Array
  | Int16Array
  | Uint16Array
  | Int32Array
  | Float32Array
  | Float64Array;

export interface Volume {
  /** grid size as (nx, ny, nz) */
  dims: [number, number, number];
  /** voxel spacing in mm as (sx, sy, sz) */
  spacing: [number, number, number];
  dtype: RawDtype;
  kind: VolumeKind;
  /** voxels in x-fastest order, length nx*ny*nz */
  data: VoxelArray;
}

interface DtypeSpec {
  bytes: number;
  ctor: new (buffer: ArrayBuffer, byteOffset?: number, length?: number) => VoxelArray;
}

const DTYPES: Record<RawDtype, DtypeSpec> = {
  uint8: { bytes: 1, ctor: Uint8Array },
  int16: { bytes: 2, ctor: Int16Array },
  uint16: { bytes: 2, ctor: Uint16Array },
  int32: { bytes: 4, ctor: Int32Array },
  float32: { bytes: 4, ctor: Float32Array },
  float64: { bytes: 8, ctor: Float64Array },
};

function dtypeOf(data: VoxelArray): RawDtype {
  if (data instanceof Uint8Array) return 'uint8';
  if (data instanceof Int16Array) return 'int16';
  if (data instanceof Uint16Array) return 'uint16';
  if (data instanceof Int32Array) return 'int32';
  if (data instanceof Float32Array) return 'float32';
  return 'float64';
}

function assertLittleEndianHost(): void {
  // typed arrays adopt host byte order; the file contract is little-endian
  if (os.endianness() !== 'LE') {
    throw new Error('big-endian hosts are not supported by the raw volume codec');
  }
}

export function voxelIndex(dims: [number, number, number], x: number, y: number, z: number): number {
  const [nx, ny, nz] = dims;
  if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) {
    throw new RangeError(`voxel (${x}, ${y}, ${z}) outside grid ${nx}x${ny}x${nz}`);
  }
  return x + nx * (y + ny * z);
}

/** Wrap a typed array as a Volume, validating the grid contract. */
export function volumeFromArray(
  data: VoxelArray,
  dims: number[],
  spacing: number[],
  kind: VolumeKind,
): Volume {
  if (dims.length !== 3) {
    throw new Error(`volume dims must be three axes (nx, ny, nz), got ${dims.length}`);
  }
  if (spacing.length !== 3) {
    throw new Error(`spacing must have three components, got ${spacing.length}`);
  }
  const [nx, ny, nz] = dims;
  if (![nx, ny, nz].every((d) => Number.isInteger(d) && d >= 1)) {
    throw new Error(`dims must be positive integers, got [${dims}]`);
  }
  if (!spacing.every((s) => Number.isFinite(s) && s > 0)) {
    throw new Error(`spacing must be positive, got [${spacing}]`);
  }
  if (data.length !== nx * ny * nz) {
    throw new Error(`data length ${data.length} does not match dims ${nx}x${ny}x${nz}`);
  }
  const dtype = dtypeOf(data);
  if (kind !== 'scalar' && (dtype === 'float32' || dtype === 'float64')) {
    throw new Error(`${kind} volumes need an integer dtype, got ${dtype}`);
  }
  return {
    dims: [nx, ny, nz],
    spacing: [spacing[0], spacing[1], spacing[2]],
    dtype,
    kind,
    data,
  };
}

function sidecarPaths(stem: string): { bin: string; json: string } {
  const trimmed = stem.endsWith('.bin') || stem.endsWith('.json')
    ? stem.slice(0, stem.lastIndexOf('.'))
    : stem;
  return { bin: `${trimmed}.bin`, json: `${trimmed}.json` };
}

/** Read a raw volume given its stem or either file of the pair. */
export function readVolume(stemOrFile: string): Volume {
  assertLittleEndianHost();
  const { bin, json } = sidecarPaths(stemOrFile);
  if (!fs.existsSync(json)) {
    throw new Error(`missing raw sidecar ${path.basename(json)}`);
  }
  const meta = JSON.parse(fs.readFileSync(json, 'utf8'));
  for (const key of ['dims', 'spacing', 'dtype', 'order']) {
    if (!(key in meta)) {
      throw new Error(`sidecar ${path.basename(json)} lacks required key '${key}'`);
    }
  }
  if (meta.order !== 'x-fastest') {
    throw new Error(`unsupported voxel order '${meta.order}'; only 'x-fastest' is defined`);
  }
  const dtype = meta.dtype as RawDtype;
  const spec = DTYPES[dtype];
  if (!spec) {
    throw new Error(`unsupported raw dtype '${meta.dtype}'`);
  }
  const dims = meta.dims as number[];
  if (dims.length !== 3 || dims.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new Error(`bad dims in sidecar: [${dims}]`);
  }
  const [nx, ny, nz] = dims;

  const payload = fs.readFileSync(bin);
  const expected = nx * ny * nz * spec.bytes;
  if (payload.byteLength !== expected) {
    throw new Error(
      `raw payload size mismatch in ${path.basename(bin)}: ` +
        `expected ${expected} bytes, found ${payload.byteLength}`,
    );
  }
  // copy out of the Buffer pool so the typed array owns aligned memory
  const buffer = new ArrayBuffer(expected);
  new Uint8Array(buffer).set(payload);
  const kind: VolumeKind = meta.kind === 'mask' || meta.kind === 'scalar' ? meta.kind : 'label';
  return volumeFromArray(new spec.ctor(buffer), dims, meta.spacing, kind);
}

/** Write a Volume as a `.bin` + `.json` sidecar pair; returns the bin path. */
export function writeVolume(volume: Volume, stemOrFile: string): string {
  assertLittleEndianHost();
  const { bin, json } = sidecarPaths(stemOrFile);
  const meta = {
    dims: volume.dims,
    dtype: volume.dtype,
    kind: volume.kind,
    order: 'x-fastest',
    spacing: volume.spacing,
  };
  fs.writeFileSync(bin, Buffer.from(volume.data.buffer, volume.data.byteOffset, volume.data.byteLength));
  fs.writeFileSync(json, JSON.stringify(meta, null, 2) + '\n');
  return bin;
}
