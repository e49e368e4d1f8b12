/* Invocation of the native tubekit CLI. Every binding shells out to
 * `python3 -m tubekit`, exchanging volumes through the raw file codec,
 * so results are exactly what the native package computes. */

import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

const PYTHON = process.env.TUBEKIT_PYTHON ?? 'python3';

export class NativeError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(args: string[], exitCode: number, stderr: string) {
    const detail = stderr.trim().split('\n').filter(Boolean).pop() ?? 'no diagnostic output';
    super(`tubekit ${args[0]} failed (exit ${exitCode}): ${detail}`);
    this.name = 'NativeError';
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

export function runNative(args: string[]): string {
  try {
    return execFileSync(PYTHON, ['-m', 'tubekit', ...args], {
      encoding: 'utf8',
      stdio: ['ignore', 'pipe', 'pipe'],
      maxBuffer: 64 * 1024 * 1024,
    });
  } catch (err) {
    const e = err as { status?: number | null; stderr?: string | Buffer; message?: string };
    if (typeof e.status === 'number') {
      const stderr = e.stderr ? e.stderr.toString() : '';
      throw new NativeError(args, e.status, stderr);
    }
    throw err;
  }
}

/** Run fn with a private scratch directory that is always cleaned up. */
export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'tubekit-'));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}
