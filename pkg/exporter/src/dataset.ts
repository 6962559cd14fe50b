/**
 * Toy dataset reader.  A dataset is a directory of JSON sample files:
 *
 *   {
 *     "elements": [[c0, c1, ...], ...],   raw per-element channels
 *     "labels":   [id, ...],              class id per element, -1 ignored
 *     "coords":   [[x, y, z], ...]        optional, 3D data only
 *   }
 *
 * Samples are processed in filename order so exports are
 * deterministic.  Either every sample carries coords or none does.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { IGNORE_LABEL } from './cfs1.js';

export interface Sample {
  name: string;
  elements: number[][];
  labels: number[];
  coords?: number[][];
}

export function loadSample(filePath: string): Sample {
  const data = JSON.parse(fs.readFileSync(filePath, 'utf-8'));
  const name = path.basename(filePath);
  const { elements, labels, coords } = data;
  if (!Array.isArray(elements) || elements.length === 0) {
    throw new Error(`${name}: "elements" must be a non-empty array of rows`);
  }
  const width = elements[0].length;
  if (!elements.every((row: unknown) => Array.isArray(row) && row.length === width)) {
    throw new Error(`${name}: element rows must all have width ${width}`);
  }
  if (!Array.isArray(labels) || labels.length !== elements.length) {
    throw new Error(`${name}: "labels" must list one class id per element`);
  }
  for (const lab of labels) {
    if (!Number.isInteger(lab) || (lab < 0 && lab !== IGNORE_LABEL)) {
      throw new Error(`${name}: label ${lab} is not a class id or ${IGNORE_LABEL}`);
    }
  }
  if (coords !== undefined) {
    if (!Array.isArray(coords) || coords.length !== elements.length) {
      throw new Error(`${name}: "coords" must list one xyz row per element`);
    }
    if (!coords.every((row: unknown) => Array.isArray(row) && row.length === 3)) {
      throw new Error(`${name}: coord rows must have exactly 3 entries`);
    }
  }
  return { name, elements, labels, coords };
}

export function loadDataset(dir: string): Sample[] {
  const files = fs
    .readdirSync(dir)
    .filter((f) => f.endsWith('.json'))
    .sort();
  if (files.length === 0) {
    throw new Error(`no .json sample files in ${dir}`);
  }
  const samples = files.map((f) => loadSample(path.join(dir, f)));
  const withCoords = samples.filter((s) => s.coords !== undefined).length;
  if (withCoords !== 0 && withCoords !== samples.length) {
    throw new Error(`${dir}: ${withCoords}/${samples.length} samples have coords; must be all or none`);
  }
  const width = samples[0].elements[0].length;
  for (const s of samples) {
    if (s.elements[0].length !== width) {
      throw new Error(`${s.name}: channel width ${s.elements[0].length} != ${width}`);
    }
  }
  return samples;
}

export function observedClasses(samples: Sample[]): number[] {
  const ids = new Set<number>();
  for (const s of samples) {
    for (const lab of s.labels) {
      if (lab !== IGNORE_LABEL) ids.add(lab);
    }
  }
  return [...ids].sort((a, b) => a - b);
}
