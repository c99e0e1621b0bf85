// Shared data shapes. ResponseLog mirrors the analyzer's JSON schema exactly.

export interface Stimulus {
  action: string;
  fps: number;
  /** dots[frame][dot] = [x, y], normalized display units in [-1, 1]. */
  dots: number[][][];
  orientation_transforms: Record<string, string>;
}

export interface StimulusPackage {
  stimuli: Stimulus[];
}

export type Task = 'AST' | 'AIT';
export type Orientation = 'UP' | 'INV';
export type BlockOrder = 'UP_INV' | 'INV_UP';
export type InversionConvention = 'vertical_flip' | 'horizontal_mirror';

export interface TrialSpec {
  orientation: Orientation;
  target: string;
  /** AST: [left, right] classifiers; AIT: 5 labels including the target. */
  options: string[];
  practice: boolean;
}

export interface TrialRecord {
  trial_idx: number;
  orientation: Orientation;
  target: string;
  options: string[];
  response: string | null; // null = timeout
  rt_ms: number | null;
}

export interface ResponseLog {
  participant_id: string;
  task: Task;
  block_order: BlockOrder;
  trials: TrialRecord[];
  aborted?: boolean;
}

export interface SessionConfig {
  task: Task;
  blockOrder: BlockOrder;
  participantId: string;
  seed: number;
  inversion: InversionConvention;
  /** AST practice trials shown before the logged blocks. */
  practiceTrials: number;
}

export const AST_WINDOW_MS = 4000;
export const AIT_WINDOW_MS = 10000;
export const FIXATION_MIN_MS = 500;
export const FIXATION_MAX_MS = 700;
export const PLAYBACK_FPS = 30;
export const AIT_OPTION_COUNT = 5;
export const DEFAULT_AST_PRACTICE = 30;

export function responseWindowMs(task: Task): number {
  return task === 'AST' ? AST_WINDOW_MS : AIT_WINDOW_MS;
}
