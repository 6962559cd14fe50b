/**
 * m-n class schedules, per-setting label masking, and sample-to-step
 * assignment, mirroring the engine's protocol semantics: class ids
 * are 0..C-1 with background 0; the base step covers the first m ids
 * and each later step the next n.
 */

import { IGNORE_LABEL } from './cfs1.js';
import type { Sample } from './dataset.js';

export type Setting = 'sequential' | 'disjoint' | 'overlapped';

export const SETTINGS: Setting[] = ['sequential', 'disjoint', 'overlapped'];
export const BACKGROUND_ID = 0;

export function buildSchedule(nClasses: number, m: number, n: number): number[][] {
  if (m < 1 || m > nClasses) {
    throw new Error(`m must lie in 1..${nClasses}, got ${m}`);
  }
  const steps: number[][] = [range(0, m)];
  let at = m;
  while (at < nClasses) {
    if (n < 1) {
      throw new Error(`n must be >= 1 to cover classes ${at}..${nClasses - 1}`);
    }
    steps.push(range(at, Math.min(at + n, nClasses)));
    at += n;
  }
  return steps;
}

function range(from: number, to: number): number[] {
  return Array.from({ length: to - from }, (_, i) => from + i);
}

export function validateSchedule(schedule: number[][], observed: number[]): void {
  const seen = new Set<number>();
  for (const step of schedule) {
    for (const id of step) {
      if (seen.has(id)) {
        throw new Error(`class ${id} appears in more than one schedule step`);
      }
      seen.add(id);
    }
  }
  const missing = observed.filter((c) => !seen.has(c));
  if (missing.length > 0) {
    throw new Error(`classes ${JSON.stringify(missing)} present in the data but missing from the schedule`);
  }
}

export function seenThrough(schedule: number[][], t: number): Set<number> {
  const out = new Set<number>();
  for (const step of schedule.slice(0, t)) {
    for (const id of step) out.add(id);
  }
  return out;
}

/**
 * Which samples belong to step t (1-based): those containing at least
 * one element of the step's foreground classes (background is in every
 * sample, so it never drives membership; a background-only base step
 * falls back to matching background).  The disjoint setting also
 * drops samples that contain any not-yet-introduced class.
 */
export function samplesForStep<T extends Sample>(samples: T[], schedule: number[][], t: number, setting: Setting): T[] {
  const foreground = new Set(schedule[t - 1].filter((c) => c !== BACKGROUND_ID));
  const current = foreground.size > 0 ? foreground : new Set(schedule[t - 1]);
  const seen = seenThrough(schedule, t);
  return samples.filter((s) => {
    const present = new Set(s.labels.filter((l) => l !== IGNORE_LABEL));
    if (![...present].some((c) => current.has(c))) {
      return false;
    }
    if (setting === 'disjoint' && [...present].some((c) => !seen.has(c))) {
      return false;
    }
    return true;
  });
}

/** Rewrite true labels into what step t may observe under the setting. */
export function maskLabels(labels: number[], schedule: number[][], t: number, setting: Setting): Int32Array {
  const current = new Set(schedule[t - 1]);
  const seen = seenThrough(schedule, t);
  const out = new Int32Array(labels.length);
  for (let i = 0; i < labels.length; i++) {
    const lab = labels[i];
    if (lab === IGNORE_LABEL) {
      out[i] = IGNORE_LABEL;
    } else if (setting === 'sequential') {
      out[i] = seen.has(lab) ? lab : IGNORE_LABEL;
    } else if (setting === 'disjoint') {
      if (!seen.has(lab)) {
        throw new Error(`disjoint step ${t} saw future class ${lab}; samples must be filtered first`);
      }
      out[i] = current.has(lab) ? lab : BACKGROUND_ID;
    } else {
      out[i] = current.has(lab) ? lab : BACKGROUND_ID;
    }
  }
  return out;
}
