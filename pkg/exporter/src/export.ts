/**
 * Export pipeline: read a toy dataset, run the chosen frozen encoder
 * over every sample, group samples into incremental steps, mask
 * labels for the learning setting, and write a CFS1 stream (steps,
 * evaluation split, engine-compatible manifest).
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { IGNORE_LABEL, writeStep } from './cfs1.js';
import { loadDataset, observedClasses, type Sample } from './dataset.js';
import { getEncoder } from './encoder.js';
import {
  buildSchedule,
  maskLabels,
  samplesForStep,
  validateSchedule,
  SETTINGS,
  type Setting,
} from './schedule.js';

export interface ExportSpec {
  datasetDir: string;
  outDir: string;
  encoder: string;
  dEncoder: number;
  m: number;
  n: number;
  setting: Setting;
  seed: number;
  /** total classes including background; defaults to max observed id + 1 */
  nClasses?: number;
  /** separate eval dataset; defaults to the training dataset */
  evalDatasetDir?: string;
}

export interface ExportResult {
  steps: number;
  nClasses: number;
  schedule: number[][];
  manifestPath: string;
}

interface EncodedSample extends Sample {
  features: Float32Array;
}

function concatStep(samples: EncodedSample[], dEncoder: number, labelsOf: (s: EncodedSample) => Int32Array) {
  const nRows = samples.reduce((acc, s) => acc + s.elements.length, 0);
  const features = new Float32Array(nRows * dEncoder);
  const labels = new Int32Array(nRows);
  const hasCoords = samples.length > 0 && samples[0].coords !== undefined;
  const coords = hasCoords ? new Float32Array(nRows * 3) : undefined;
  let row = 0;
  for (const s of samples) {
    features.set(s.features, row * dEncoder);
    labels.set(labelsOf(s), row);
    if (coords && s.coords) {
      for (let i = 0; i < s.coords.length; i++) {
        coords[(row + i) * 3] = s.coords[i][0];
        coords[(row + i) * 3 + 1] = s.coords[i][1];
        coords[(row + i) * 3 + 2] = s.coords[i][2];
      }
    }
    row += s.elements.length;
  }
  return { nRows, features, labels, coords };
}

export function exportStream(spec: ExportSpec): ExportResult {
  if (!SETTINGS.includes(spec.setting)) {
    throw new Error(`setting must be one of ${SETTINGS.join('|')}, got ${spec.setting}`);
  }
  if (spec.dEncoder < 1) {
    throw new Error(`d-encoder must be >= 1, got ${spec.dEncoder}`);
  }
  const encode = getEncoder(spec.encoder);
  const samples = loadDataset(spec.datasetDir);
  const observed = observedClasses(samples);
  const nClasses = spec.nClasses ?? Math.max(...observed) + 1;
  const schedule = buildSchedule(nClasses, spec.m, spec.n);
  validateSchedule(schedule, observed);

  const encoded: EncodedSample[] = samples.map((s) => ({
    ...s,
    features: encode(s.elements, spec.dEncoder, spec.seed),
  }));

  for (let t = 1; t <= schedule.length; t++) {
    const members = samplesForStep(encoded, schedule, t, spec.setting);
    if (members.length === 0) {
      throw new Error(`step ${t} (classes ${JSON.stringify(schedule[t - 1])}) matches no samples`);
    }
    const { nRows, features, labels, coords } = concatStep(members, spec.dEncoder, (s) =>
      maskLabels(s.labels, schedule, t, spec.setting),
    );
    writeStep(spec.outDir, t, { nRows, dEncoder: spec.dEncoder, features, labels, coords });
  }

  const evalSamples: EncodedSample[] = spec.evalDatasetDir
    ? loadDataset(spec.evalDatasetDir).map((s) => ({
        ...s,
        features: encode(s.elements, spec.dEncoder, spec.seed),
      }))
    : encoded;
  const evalClasses = observedClasses(evalSamples);
  validateSchedule(schedule, evalClasses);
  const evalStep = concatStep(evalSamples, spec.dEncoder, (s) => Int32Array.from(s.labels));
  writeStep(spec.outDir, 0, {
    nRows: evalStep.nRows,
    dEncoder: spec.dEncoder,
    features: evalStep.features,
    labels: evalStep.labels,
    coords: evalStep.coords,
  });

  const manifest = {
    setting: spec.setting,
    modality: encoded[0].coords !== undefined ? '3d' : '2d',
    n_classes: nClasses,
    m: spec.m,
    n: spec.n,
    d_encoder: spec.dEncoder,
    seed: spec.seed,
    stream_dir: spec.outDir,
  };
  const manifestPath = path.join(spec.outDir, 'manifest.json');
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, Object.keys(manifest).sort(), 2) + '\n');

  return { steps: schedule.length, nClasses, schedule, manifestPath };
}

export { IGNORE_LABEL };
