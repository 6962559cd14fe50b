import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { readStep } from '../src/cfs1.js';
import { exportStream } from '../src/export.js';
import { buildSchedule, maskLabels, samplesForStep } from '../src/schedule.js';
import { loadDataset } from '../src/dataset.js';

const FIXTURES = path.join(__dirname, '..', 'fixtures');
const TOY2D = path.join(FIXTURES, 'toy2d');
const TOY3D = path.join(FIXTURES, 'toy3d');

let outDir: string;

beforeEach(() => {
  outDir = fs.mkdtempSync(path.join(os.tmpdir(), 'export-'));
});

afterEach(() => {
  fs.rmSync(outDir, { recursive: true, force: true });
});

function spec(overrides: object = {}) {
  return {
    datasetDir: TOY2D,
    outDir,
    encoder: 'toy-projection',
    dEncoder: 8,
    m: 2,
    n: 1,
    setting: 'sequential' as const,
    seed: 5,
    ...overrides,
  };
}

describe('schedule helpers', () => {
  it('builds m-n schedules over ids 0..C-1', () => {
    expect(buildSchedule(5, 2, 1)).toEqual([[0, 1], [2], [3], [4]]);
  });

  it('assigns samples by current-class membership', () => {
    const samples = loadDataset(TOY2D);
    const schedule = buildSchedule(3, 2, 1);
    const step1 = samplesForStep(samples, schedule, 1, 'sequential').map((s) => s.name);
    expect(step1).toEqual(['sample_a.json', 'sample_b.json', 'sample_d.json']);
    const step2 = samplesForStep(samples, schedule, 2, 'sequential').map((s) => s.name);
    expect(step2).toEqual(['sample_c.json', 'sample_d.json']);
  });

  it('disjoint drops samples containing future classes', () => {
    const samples = loadDataset(TOY2D);
    const schedule = buildSchedule(3, 2, 1);
    const step1 = samplesForStep(samples, schedule, 1, 'disjoint').map((s) => s.name);
    expect(step1).toEqual(['sample_a.json', 'sample_b.json']);
  });

  it('masks labels per setting', () => {
    const schedule = buildSchedule(3, 2, 1);
    expect([...maskLabels([0, 1, 2], schedule, 1, 'sequential')]).toEqual([0, 1, -1]);
    expect([...maskLabels([0, 1, 2], schedule, 2, 'disjoint')]).toEqual([0, 0, 2]);
    expect([...maskLabels([0, 1, 2], schedule, 2, 'overlapped')]).toEqual([0, 0, 2]);
    expect([...maskLabels([1, 2], schedule, 1, 'overlapped')]).toEqual([1, 0]);
  });
});

describe('exportStream', () => {
  it('writes steps, eval split and manifest', () => {
    const result = exportStream(spec());
    expect(result.steps).toBe(2);
    expect(result.nClasses).toBe(3);
    const names = fs.readdirSync(outDir).sort();
    expect(names).toEqual([
      'eval.bin', 'eval.json', 'manifest.json',
      'step_0001.bin', 'step_0001.json', 'step_0002.bin', 'step_0002.json',
    ]);
    const manifest = JSON.parse(fs.readFileSync(result.manifestPath, 'utf-8'));
    expect(manifest.modality).toBe('2d');
    expect(manifest.n_classes).toBe(3);
    expect(manifest.d_encoder).toBe(8);
  });

  it('is deterministic byte for byte', () => {
    exportStream(spec());
    const first = Object.fromEntries(
      fs.readdirSync(outDir).map((f) => [f, fs.readFileSync(path.join(outDir, f)).toString('hex')]),
    );
    fs.rmSync(outDir, { recursive: true });
    exportStream(spec());
    for (const [f, hex] of Object.entries(first)) {
      if (f === 'manifest.json') continue; // embeds outDir path
      expect(fs.readFileSync(path.join(outDir, f)).toString('hex')).toBe(hex);
    }
  });

  it('round-trips feature payloads bit-exactly', () => {
    exportStream(spec());
    const { payload } = readStep(outDir, 1);
    const again = readStep(outDir, 1).payload;
    expect(Buffer.from(again.features.buffer)).toEqual(Buffer.from(payload.features.buffer));
    expect(payload.features.every(Number.isFinite)).toBe(true);
  });

  it('errors when the schedule omits a present class', () => {
    expect(() => exportStream(spec({ nClasses: 2 }))).toThrow(/missing from the schedule/);
  });

  it('errors on unknown encoders', () => {
    expect(() => exportStream(spec({ encoder: 'resnet-battleship' }))).toThrow(/unknown encoder/);
  });

  it('exports 3d datasets with coords and a 3d manifest', () => {
    const result = exportStream(spec({ datasetDir: TOY3D }));
    const manifest = JSON.parse(fs.readFileSync(result.manifestPath, 'utf-8'));
    expect(manifest.modality).toBe('3d');
    const { sidecar, payload } = readStep(outDir, 1);
    expect(sidecar.has_coords).toBe(true);
    expect(payload.coords!.length).toBe(payload.nRows * 3);
  });

  it('masks drifted labels in the disjoint setting', () => {
    exportStream(spec({ setting: 'disjoint' }));
    const step2 = readStep(outDir, 2);
    const present = new Set(step2.payload.labels);
    expect(present.has(1)).toBe(false); // old class collapsed to background
    expect(present.has(2)).toBe(true);
    expect(present.has(0)).toBe(true);
  });
});
