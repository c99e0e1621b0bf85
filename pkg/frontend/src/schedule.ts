// Seeded trial schedules for both tasks. A schedule replays exactly for a
// given (seed, action list, block order).

import { mulberry32, sampleWithout, shuffle } from './rng.js';
import {
  AIT_OPTION_COUNT,
  BlockOrder,
  Orientation,
  SessionConfig,
  TrialSpec,
} from './types.js';

export function blockOrientations(order: BlockOrder): [Orientation, Orientation] {
  return order === 'UP_INV' ? ['UP', 'INV'] : ['INV', 'UP'];
}

interface Triad {
  target: string;
  a: string;
  b: string;
}

/** All triads with (T = A or T = B) and A != B: 2 n (n-1) of them. */
export function enumerateTriads(actions: string[]): Triad[] {
  if (actions.length < 2) throw new Error('need at least 2 actions');
  const triads: Triad[] = [];
  for (const target of actions) {
    for (const other of actions) {
      if (other === target) continue;
      triads.push({ target, a: target, b: other });
      triads.push({ target, a: other, b: target });
    }
  }
  return triads;
}

/**
 * AST: optional practice trials, then one shuffled pass over all triads per
 * orientation block.
 */
export function buildAstSchedule(actions: string[], cfg: SessionConfig): TrialSpec[] {
  const rng = mulberry32(cfg.seed);
  const triads = enumerateTriads(actions);
  const [first, second] = blockOrientations(cfg.blockOrder);
  const trials: TrialSpec[] = [];

  for (let i = 0; i < cfg.practiceTrials; i++) {
    const t = triads[Math.floor(rng() * triads.length)];
    trials.push({ orientation: first, target: t.target, options: [t.a, t.b], practice: true });
  }
  for (const orientation of [first, second]) {
    for (const t of shuffle(rng, triads.slice())) {
      trials.push({ orientation, target: t.target, options: [t.a, t.b], practice: false });
    }
  }
  return trials;
}

/**
 * AIT: two blocks of one trial per action (38 trials for 19 actions); each
 * trial offers 5 labels, the target plus 4 distinct foils.
 */
export function buildAitSchedule(actions: string[], cfg: SessionConfig): TrialSpec[] {
  if (actions.length < AIT_OPTION_COUNT) {
    throw new Error(`need >= ${AIT_OPTION_COUNT} actions for AIT option lists`);
  }
  const rng = mulberry32(cfg.seed);
  const trials: TrialSpec[] = [];
  for (const orientation of blockOrientations(cfg.blockOrder)) {
    for (const target of shuffle(rng, actions.slice())) {
      const foils = sampleWithout(rng, actions, AIT_OPTION_COUNT - 1, target);
      const options = shuffle(rng, [target, ...foils]);
      trials.push({ orientation, target, options, practice: false });
    }
  }
  return trials;
}

export function buildSchedule(actions: string[], cfg: SessionConfig): TrialSpec[] {
  return cfg.task === 'AST' ? buildAstSchedule(actions, cfg) : buildAitSchedule(actions, cfg);
}
