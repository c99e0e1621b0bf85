// Small deterministic PRNG so trial schedules replay exactly from a seed.

export type Rng = () => number;

export function mulberry32(seed: number): Rng {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randInt(rng: Rng, n: number): number {
  return Math.floor(rng() * n);
}

export function uniform(rng: Rng, lo: number, hi: number): number {
  return lo + rng() * (hi - lo);
}

/** Fisher-Yates, in place. */
export function shuffle<T>(rng: Rng, items: T[]): T[] {
  for (let i = items.length - 1; i > 0; i--) {
    const j = randInt(rng, i + 1);
    [items[i], items[j]] = [items[j], items[i]];
  }
  return items;
}

/** k distinct elements, excluding `exclude`. */
export function sampleWithout<T>(rng: Rng, pool: T[], k: number, exclude: T): T[] {
  const candidates = pool.filter((x) => x !== exclude);
  if (candidates.length < k) {
    throw new Error(`cannot draw ${k} distinct labels from ${candidates.length}`);
  }
  return shuffle(rng, candidates.slice()).slice(0, k);
}
