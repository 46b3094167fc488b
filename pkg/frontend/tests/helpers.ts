import { readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

export const FIXTURES = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "..",
  "tests",
  "fixtures",
);

export function fixture(name: string): string {
  return readFileSync(path.join(FIXTURES, name), "utf8");
}

export function fixturePath(name: string): string {
  return path.join(FIXTURES, name);
}

/** spec → trace pairings for the runnable corpus. */
export const RUNNABLE: [string, string][] = [
  ["altitude.rill", "altitude.csv"],
  ["geofence_fixed.rill", "geofence.csv"],
  ["geofence_pasted.rill", "geofence.csv"],
  ["geofence_lag1.rill", "geofence_steps.csv"],
  ["geofence_lag2.rill", "geofence_steps.csv"],
  ["multifreq.rill", "multifreq.csv"],
  ["kitchen.rill", "kitchen.csv"],
  ["counts.rill", "counts.csv"],
];

/** Every analyzable corpus spec (cycle_offset has no trace). */
export const CORPUS: string[] = [
  ...RUNNABLE.map(([spec]) => spec),
  "cycle_offset.rill",
];

/** Small deterministic PRNG for property-style loops (LCG, 31-bit). */
export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed % 2147483647;
    if (this.state <= 0) {
      this.state += 2147483646;
    }
  }

  next(): number {
    this.state = (this.state * 16807) % 2147483647;
    return (this.state - 1) / 2147483646;
  }

  int(bound: number): number {
    return Math.floor(this.next() * bound);
  }

  pick<T>(items: readonly T[]): T {
    if (items.length === 0) {
      throw new Error("pick from empty list");
    }
    return items[this.int(items.length)]!;
  }
}
