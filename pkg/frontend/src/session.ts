// Trial state machine with an injectable clock, so tests can drive timing
// deterministically. One session = fixation -> trial -> response/timeout,
// repeated over the seeded schedule; practice trials are never logged.

import { mulberry32, Rng, uniform } from './rng.js';
import {
  FIXATION_MAX_MS,
  FIXATION_MIN_MS,
  ResponseLog,
  responseWindowMs,
  SessionConfig,
  TrialRecord,
  TrialSpec,
} from './types.js';

export type Phase = 'idle' | 'fixation' | 'trial' | 'done' | 'aborted';

export class Session {
  readonly config: SessionConfig;
  readonly schedule: TrialSpec[];
  readonly windowMs: number;

  private readonly timingRng: Rng;
  private phase: Phase = 'idle';
  private trialPtr = -1;
  private phaseStart = 0;
  private fixationMs = 0;
  private responded = false;
  private records: TrialRecord[] = [];
  private loggedIdx = 0;

  constructor(config: SessionConfig, schedule: TrialSpec[]) {
    this.config = config;
    this.schedule = schedule;
    this.windowMs = responseWindowMs(config.task);
    this.timingRng = mulberry32(config.seed ^ 0x5eed);
  }

  get currentPhase(): Phase {
    return this.phase;
  }

  get currentTrial(): TrialSpec | null {
    return this.phase === 'trial' || this.phase === 'fixation'
      ? this.schedule[this.trialPtr]
      : null;
  }

  /** Remaining fixation time, for rendering the cross. */
  get currentFixationMs(): number {
    return this.fixationMs;
  }

  start(now: number): void {
    if (this.phase !== 'idle') throw new Error('session already started');
    this.advance(now);
  }

  /**
   * Drive time forward. Moves fixation -> trial when the cross has been shown
   * long enough, and records a timeout when the response window closes.
   */
  tick(now: number): void {
    if (this.phase === 'fixation' && now - this.phaseStart >= this.fixationMs) {
      this.phase = 'trial';
      this.phaseStart = now;
      this.responded = false;
    } else if (this.phase === 'trial' && now - this.phaseStart >= this.windowMs) {
      this.record(null, null);
      this.advance(now);
    }
  }

  /** First input wins; later inputs and out-of-phase inputs are ignored. */
  respond(label: string, now: number): void {
    if (this.phase !== 'trial' || this.responded) return;
    const trial = this.schedule[this.trialPtr];
    if (!trial.options.includes(label)) return;
    const rt = now - this.phaseStart;
    if (rt >= this.windowMs) {
      this.record(null, null);
    } else {
      this.responded = true;
      this.record(label, rt);
    }
    this.advance(now);
  }

  abort(): void {
    if (this.phase === 'done') return;
    this.phase = 'aborted';
  }

  exportLog(): ResponseLog {
    const log: ResponseLog = {
      participant_id: this.config.participantId,
      task: this.config.task,
      block_order: this.config.blockOrder,
      trials: this.records.slice(),
    };
    if (this.phase !== 'done') log.aborted = true;
    return log;
  }

  get trialOnset(): number {
    return this.phaseStart;
  }

  private record(response: string | null, rtMs: number | null): void {
    const trial = this.schedule[this.trialPtr];
    if (trial.practice) return;
    this.records.push({
      trial_idx: this.loggedIdx++,
      orientation: trial.orientation,
      target: trial.target,
      options: trial.options.slice(),
      response,
      rt_ms: rtMs,
    });
  }

  private advance(now: number): void {
    this.trialPtr += 1;
    if (this.trialPtr >= this.schedule.length) {
      this.phase = 'done';
      return;
    }
    this.phase = 'fixation';
    this.phaseStart = now;
    this.fixationMs = uniform(this.timingRng, FIXATION_MIN_MS, FIXATION_MAX_MS);
  }
}

export function serializeLog(log: ResponseLog): string {
  return JSON.stringify(log, null, 2);
}
