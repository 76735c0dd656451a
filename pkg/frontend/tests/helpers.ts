/**
 * Test-only utilities. The advantage/objective mirrors below replicate the
 * service's arithmetic operation for operation (sequential float64 sums,
 * population std with a floor, the all-equal short-circuit) so that
 * service-returned numbers can be checked for machine-precision agreement.
 * They exist to VERIFY the service, not to compute anything the client
 * ships - the shipped client returns service numbers untouched.
 */

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import type { RewardBreakdown } from '../src/types.js';

export interface ServerInfo {
  baseUrl: string;
  logPath: string;
  dataDir: string;
}

export function serverInfo(): ServerInfo {
  const p = join(dirname(fileURLToPath(import.meta.url)), '.server-info.json');
  return JSON.parse(readFileSync(p, 'utf8')) as ServerInfo;
}

export interface EpisodeRecord {
  seq: number;
  instance_id: string;
  ratio: number;
  response: string;
  rewards: RewardBreakdown;
  timestamp: number;
  client_tag: string | null;
}

export function readEpisodeLog(path: string): EpisodeRecord[] {
  return readFileSync(path, 'utf8')
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as EpisodeRecord);
}

/** (r_i - mean) / max(population std, floor); all-equal groups -> zeros. */
export function groupAdvantages(rewards: number[], stdFloor = 1e-8): number[] {
  if (rewards.length === 0) throw new Error('rewards must be non-empty');
  const n = rewards.length;
  const first = rewards[0];
  if (rewards.every((r) => r === first)) {
    return new Array<number>(n).fill(0);
  }
  let total = 0;
  for (const r of rewards) total += r;
  const mean = total / n;
  let sq = 0;
  for (const r of rewards) {
    const d = r - mean;
    sq += d * d;
  }
  const std = Math.sqrt(sq / n);
  const denom = std > stdFloor ? std : stdFloor;
  return rewards.map((r) => (r - mean) / denom);
}

export function klTerm(ratioRefOverNew: number): number {
  return ratioRefOverNew - Math.log(ratioRefOverNew) - 1;
}

export function clippedTerm(
  ratioNewOverOld: number,
  advantage: number,
  clipEpsilon: number,
): number {
  const clipped = Math.min(Math.max(ratioNewOverOld, 1 - clipEpsilon), 1 + clipEpsilon);
  return Math.min(ratioNewOverOld * advantage, clipped * advantage);
}

export function objectiveOf(
  rewards: number[],
  ratiosNewOverOld: number[],
  ratiosRefOverNew: number[],
  clipEpsilon: number,
  klCoeff: number,
  stdFloor: number,
): number {
  const advantages = groupAdvantages(rewards, stdFloor);
  let total = 0;
  for (let i = 0; i < rewards.length; i++) {
    const c = clippedTerm(ratiosNewOverOld[i], advantages[i], clipEpsilon);
    const k = klTerm(ratiosRefOverNew[i]);
    total += c - klCoeff * k;
  }
  return total / rewards.length;
}

/** Deterministic PRNG so fuzz cases are reproducible across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
