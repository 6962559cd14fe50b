/**
 * CFS1 feature-stream codec (writer plus a reader for verification).
 *
 * One step is a sidecar/binary file pair:
 *   step_NNNN.json  {"step", "n_rows", "d_encoder", "has_coords",
 *                    "class_ids_present"}
 *   step_NNNN.bin   8-byte magic "CFS1FEAT", then row-major
 *                   little-endian payloads: features (float32),
 *                   coords (float32, when present), labels (int32)
 * Step 0 is the reserved evaluation split (eval.json / eval.bin).
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

export const MAGIC = 'CFS1FEAT';
export const IGNORE_LABEL = -1;

export interface StepPayload {
  nRows: number;
  dEncoder: number;
  features: Float32Array; // nRows * dEncoder
  labels: Int32Array; // nRows
  coords?: Float32Array; // nRows * 3
}

export interface Sidecar {
  step: number;
  n_rows: number;
  d_encoder: number;
  has_coords: boolean;
  class_ids_present: number[];
}

export function stepFileNames(step: number): { json: string; bin: string } {
  if (step === 0) {
    return { json: 'eval.json', bin: 'eval.bin' };
  }
  const tag = String(step).padStart(4, '0');
  return { json: `step_${tag}.json`, bin: `step_${tag}.bin` };
}

function presentClassIds(labels: Int32Array): number[] {
  const ids = new Set<number>();
  for (const v of labels) {
    if (v !== IGNORE_LABEL) ids.add(v);
  }
  return [...ids].sort((a, b) => a - b);
}

export function writeStep(dir: string, step: number, payload: StepPayload): { json: string; bin: string } {
  const { nRows, dEncoder, features, labels, coords } = payload;
  if (features.length !== nRows * dEncoder) {
    throw new Error(`feature payload has ${features.length} values, expected ${nRows * dEncoder}`);
  }
  if (labels.length !== nRows) {
    throw new Error(`label payload has ${labels.length} values, expected ${nRows}`);
  }
  if (coords && coords.length !== nRows * 3) {
    throw new Error(`coord payload has ${coords.length} values, expected ${nRows * 3}`);
  }
  const sidecar: Sidecar = {
    step,
    n_rows: nRows,
    d_encoder: dEncoder,
    has_coords: coords !== undefined,
    class_ids_present: presentClassIds(labels),
  };

  const size = MAGIC.length + 4 * features.length + (coords ? 4 * coords.length : 0) + 4 * labels.length;
  const buf = Buffer.alloc(size);
  buf.write(MAGIC, 0, 'ascii');
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  let off = MAGIC.length;
  for (const v of features) {
    view.setFloat32(off, v, true);
    off += 4;
  }
  if (coords) {
    for (const v of coords) {
      view.setFloat32(off, v, true);
      off += 4;
    }
  }
  for (const v of labels) {
    view.setInt32(off, v, true);
    off += 4;
  }

  fs.mkdirSync(dir, { recursive: true });
  const names = stepFileNames(step);
  const jsonPath = path.join(dir, names.json);
  const binPath = path.join(dir, names.bin);
  fs.writeFileSync(jsonPath, JSON.stringify(sidecar, Object.keys(sidecar).sort(), 2) + '\n');
  fs.writeFileSync(binPath, buf);
  return { json: jsonPath, bin: binPath };
}

export function readStep(dir: string, step: number): { sidecar: Sidecar; payload: StepPayload } {
  const names = stepFileNames(step);
  const sidecar = JSON.parse(fs.readFileSync(path.join(dir, names.json), 'utf-8')) as Sidecar;
  const raw = fs.readFileSync(path.join(dir, names.bin));
  if (raw.subarray(0, MAGIC.length).toString('ascii') !== MAGIC) {
    throw new Error(`${names.bin} lacks the ${MAGIC} magic header`);
  }
  const n = sidecar.n_rows;
  const d = sidecar.d_encoder;
  const expected = MAGIC.length + 4 * (n * d + (sidecar.has_coords ? n * 3 : 0) + n);
  if (raw.length !== expected) {
    throw new Error(`${names.bin} is ${raw.length} bytes, expected ${expected}`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  let off = MAGIC.length;
  const features = new Float32Array(n * d);
  for (let i = 0; i < features.length; i++) {
    features[i] = view.getFloat32(off, true);
    off += 4;
  }
  let coords: Float32Array | undefined;
  if (sidecar.has_coords) {
    coords = new Float32Array(n * 3);
    for (let i = 0; i < coords.length; i++) {
      coords[i] = view.getFloat32(off, true);
      off += 4;
    }
  }
  const labels = new Int32Array(n);
  for (let i = 0; i < n; i++) {
    labels[i] = view.getInt32(off, true);
    off += 4;
  }
  return { sidecar, payload: { nRows: n, dEncoder: d, features, labels, coords } };
}
