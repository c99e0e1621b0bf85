// Browser wiring: load a stimulus package, run a session on canvas, and
// offer the response log as a download. All protocol logic lives in the
// pure modules; this file only renders and forwards events.

import { findStimulus, PldPlayer } from './player.js';
import { mulberry32 } from './rng.js';
import { buildSchedule } from './schedule.js';
import { serializeLog, Session } from './session.js';
import {
  DEFAULT_AST_PRACTICE,
  PLAYBACK_FPS,
  SessionConfig,
  StimulusPackage,
  Task,
} from './types.js';

interface Ui {
  canvas: HTMLCanvasElement;
  status: HTMLElement;
  optionsBar: HTMLElement;
}

function configFromUrl(): SessionConfig {
  const q = new URLSearchParams(window.location.search);
  const task = (q.get('task') ?? 'AST') as Task;
  return {
    task,
    blockOrder: q.get('block') === 'INV_UP' ? 'INV_UP' : 'UP_INV',
    participantId: q.get('participant') ?? 'anonymous',
    seed: Number(q.get('seed') ?? 1),
    inversion: q.get('inversion') === 'horizontal_mirror'
      ? 'horizontal_mirror'
      : 'vertical_flip',
    practiceTrials: task === 'AST'
      ? Number(q.get('practice') ?? DEFAULT_AST_PRACTICE)
      : 0,
  };
}

function drawDots(
  ctx: CanvasRenderingContext2D,
  dots: [number, number][],
  cx: number,
  cy: number,
  scale: number,
): void {
  ctx.fillStyle = '#fff';
  for (const [x, y] of dots) {
    ctx.beginPath();
    // canvas y grows downward; display coordinates grow upward
    ctx.arc(cx + x * scale, cy - y * scale, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function runExperiment(pkg: StimulusPackage, ui: Ui): void {
  const cfg = configFromUrl();
  const actions = pkg.stimuli.map((s) => s.action);
  const schedule = buildSchedule(actions, cfg);
  const session = new Session(cfg, schedule);
  const playerRng = mulberry32(cfg.seed ^ 0x9142);
  const ctx = ui.canvas.getContext('2d')!;
  let players: PldPlayer[] = [];
  let lastTrial: unknown = null;

  const makePlayers = () => {
    const trial = session.currentTrial;
    if (!trial) return;
    const shown = cfg.task === 'AST' ? [...trial.options, trial.target] : [trial.target];
    players = shown.map(
      (action) =>
        new PldPlayer(findStimulus(pkg.stimuli, action), trial.orientation,
          cfg.inversion, playerRng),
    );
    ui.optionsBar.innerHTML = '';
    if (cfg.task === 'AIT') {
      for (const label of trial.options) {
        const btn = document.createElement('button');
        btn.textContent = label;
        btn.onclick = () => session.respond(label, performance.now());
        ui.optionsBar.appendChild(btn);
      }
    }
  };

  window.addEventListener('keydown', (ev) => {
    const trial = session.currentTrial;
    if (!trial || cfg.task !== 'AST') return;
    // left/right keys choose the left/right candidate PLD
    if (ev.key === 'a' || ev.key === 'ArrowLeft') {
      session.respond(trial.options[0], performance.now());
    } else if (ev.key === 'l' || ev.key === 'ArrowRight') {
      session.respond(trial.options[1], performance.now());
    }
  });

  session.start(performance.now());
  const frame = () => {
    const now = performance.now();
    session.tick(now);
    const phase = session.currentPhase;
    ctx.fillStyle = '#000';
    ctx.fillRect(0, 0, ui.canvas.width, ui.canvas.height);
    if (phase === 'fixation') {
      ctx.fillStyle = '#fff';
      ctx.font = '32px monospace';
      ctx.fillText('+', ui.canvas.width / 2 - 8, ui.canvas.height / 2 + 8);
      lastTrial = null;
    } else if (phase === 'trial') {
      if (session.currentTrial !== lastTrial) {
        lastTrial = session.currentTrial;
        makePlayers();
      }
      const elapsed = now - session.trialOnset;
      const w = ui.canvas.width / players.length;
      players.forEach((p, i) => {
        drawDots(ctx, p.dotsAt(elapsed) as [number, number][],
          w * (i + 0.5), ui.canvas.height / 2, w * 0.35);
      });
      ui.status.textContent = `trial (${cfg.task}), loop ${PLAYBACK_FPS} FPS`;
    } else if (phase === 'done') {
      ui.status.textContent = 'session complete';
      offerDownload(session);
      return;
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

function offerDownload(session: Session): void {
  const blob = new Blob([serializeLog(session.exportLog())],
    { type: 'application/json' });
  const a = document.createElement('a');
  a.href = URL.createObjectURL(blob);
  a.download = `responselog_${session.config.participantId}.json`;
  a.textContent = 'download response log';
  document.body.appendChild(a);
}

export async function boot(): Promise<void> {
  const q = new URLSearchParams(window.location.search);
  const src = q.get('stimuli') ?? 'stimuli.json';
  const pkg = (await (await fetch(src)).json()) as StimulusPackage;
  runExperiment(pkg, {
    canvas: document.getElementById('display') as HTMLCanvasElement,
    status: document.getElementById('status')!,
    optionsBar: document.getElementById('options')!,
  });
}
