// Point-light-display playback: continuous 30 FPS loop from a seeded random
// start frame, with the orientation transform applied per displayed frame.

import { Rng, randInt } from './rng.js';
import { InversionConvention, Orientation, Stimulus } from './types.js';

export type Dot = [number, number];

/** Coordinates are centered display units, so flips are sign changes. */
export function transformDot(
  dot: Dot,
  orientation: Orientation,
  convention: InversionConvention,
): Dot {
  if (orientation === 'UP') return dot;
  const [x, y] = dot;
  return convention === 'vertical_flip' ? [x, -y] : [-x, y];
}

export class PldPlayer {
  readonly stimulus: Stimulus;
  readonly startFrame: number;
  private readonly orientation: Orientation;
  private readonly convention: InversionConvention;

  constructor(
    stimulus: Stimulus,
    orientation: Orientation,
    convention: InversionConvention,
    rng: Rng,
  ) {
    if (stimulus.dots.length === 0) {
      throw new Error(`stimulus ${stimulus.action} has no frames`);
    }
    const dotCount = stimulus.dots[0].length;
    for (const frame of stimulus.dots) {
      if (frame.length !== dotCount) {
        throw new Error(`stimulus ${stimulus.action} has ragged frames`);
      }
    }
    this.stimulus = stimulus;
    this.orientation = orientation;
    this.convention = convention;
    this.startFrame = randInt(rng, stimulus.dots.length);
  }

  get dotCount(): number {
    return this.stimulus.dots[0].length;
  }

  frameIndexAt(elapsedMs: number): number {
    const advanced = Math.floor((elapsedMs / 1000) * this.stimulus.fps);
    return (this.startFrame + advanced) % this.stimulus.dots.length;
  }

  dotsAt(elapsedMs: number): Dot[] {
    const frame = this.stimulus.dots[this.frameIndexAt(elapsedMs)];
    return frame.map((d) =>
      transformDot([d[0], d[1]], this.orientation, this.convention),
    );
  }
}

export function findStimulus(stimuli: Stimulus[], action: string): Stimulus {
  const match = stimuli.find((s) => s.action === action);
  if (!match) throw new Error(`stimulus package has no action "${action}"`);
  return match;
}
