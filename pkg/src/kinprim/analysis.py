"""Confusion-matrix metrics, two-sample t-tests, and human response-log analysis.

A confusion matrix cell(i, j) holds the match percentage of target action i
with choice action j (targets on rows). Accuracy is the diagonal, false-hit is
the row mean excluding the diagonal, selection-bias the column mean excluding
the diagonal. On complete matrices accuracy + false-hit = 100 per action and
the grand means of false-hit and selection-bias coincide.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import ParameterError, SchemaError, ValidationError

AST_WINDOW_MS = 4000.0
AIT_WINDOW_MS = 10000.0
_COMPLETENESS_TOL = 1e-9


@dataclass(frozen=True)
class ConfusionMatrix:
    actions: tuple
    cells: np.ndarray            # (n, n) percentages in [0, 100]; NaN = missing
    trials_per_cell: np.ndarray  # (n, n) integers
    complete: bool

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        c = np.asarray(self.cells, dtype=float)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "trials_per_cell",
                           np.asarray(self.trials_per_cell, dtype=int))
        finite = c[np.isfinite(c)]
        if np.any(finite < -1e-12) or np.any(finite > 100 + 1e-12):
            raise ValidationError("cells must lie in [0, 100]")
        if self.complete and not np.all(np.isfinite(c)):
            raise ValidationError("a complete matrix cannot have missing cells")

    @property
    def n(self) -> int:
        return len(self.actions)

    def to_csv(self, path) -> None:
        """Targets on rows, choice actions on columns."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["target"] + list(self.actions))
            for i, a in enumerate(self.actions):
                w.writerow([a] + [("" if not np.isfinite(v) else repr(float(v)))
                                  for v in self.cells[i]])

    def to_json(self) -> dict:
        return {"actions": list(self.actions),
                "cells": [[None if not np.isfinite(v) else float(v)
                           for v in row] for row in self.cells],
                "trials_per_cell": self.trials_per_cell.tolist(),
                "complete": self.complete}

    @classmethod
    def from_json(cls, doc: dict) -> "ConfusionMatrix":
        cells = np.array([[np.nan if v is None else float(v) for v in row]
                          for row in doc["cells"]])
        return cls(actions=tuple(doc["actions"]), cells=cells,
                   trials_per_cell=np.array(doc["trials_per_cell"], dtype=int),
                   complete=bool(doc["complete"]))


def to_percentage(counts: np.ndarray, trials_per_cell: np.ndarray,
                  actions, timeouts: int = 0) -> ConfusionMatrix:
    """Convert raw selection counts to match percentages per pairing.

    Pairings that were never presented become missing cells and mark the
    matrix incomplete, as do any timed-out trials.
    """
    counts = np.asarray(counts, dtype=float)
    trials = np.asarray(trials_per_cell, dtype=float)
    if counts.shape != trials.shape:
        raise ParameterError("counts and trials_per_cell shapes differ")
    if np.any(counts > trials):
        raise ParameterError("a cell has more selections than presentations")
    with np.errstate(divide="ignore", invalid="ignore"):
        cells = np.where(trials > 0, 100.0 * counts / trials, np.nan)
    complete = bool(np.all(trials > 0)) and timeouts == 0
    return ConfusionMatrix(actions=tuple(actions), cells=cells,
                           trials_per_cell=trials.astype(int),
                           complete=complete)


@dataclass(frozen=True)
class MetricsReport:
    actions: tuple
    accuracy: np.ndarray        # per-action %, the diagonal
    false_hit: np.ndarray       # per-action %, row mean excluding diagonal
    selection_bias: np.ndarray  # per-action %, column mean excluding diagonal
    summary: dict = field(default_factory=dict)  # grand means and sample SDs

    def to_json(self) -> dict:
        return {"actions": list(self.actions),
                "accuracy": self.accuracy.tolist(),
                "false_hit": self.false_hit.tolist(),
                "selection_bias": self.selection_bias.tolist(),
                "summary": self.summary}

    def to_table(self) -> str:
        width = max(len(a) for a in self.actions) + 2
        lines = [f"{'action':<{width}}{'accuracy%':>12}{'false_hit%':>12}"
                 f"{'sel_bias%':>12}"]
        for i, a in enumerate(self.actions):
            lines.append(f"{a:<{width}}{self.accuracy[i]:>12.2f}"
                         f"{self.false_hit[i]:>12.2f}"
                         f"{self.selection_bias[i]:>12.2f}")
        s = self.summary
        lines.append(f"{'MEAN':<{width}}{s['accuracy_mean']:>12.2f}"
                     f"{s['false_hit_mean']:>12.2f}"
                     f"{s['selection_bias_mean']:>12.2f}")
        lines.append(f"{'SD':<{width}}{s['accuracy_sd']:>12.2f}"
                     f"{s['false_hit_sd']:>12.2f}"
                     f"{s['selection_bias_sd']:>12.2f}")
        return "\n".join(lines)


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy / false-hit / selection-bias with grand means and sample SDs.

    On an incomplete matrix the off-diagonal means use available cells only
    and the completeness identities are not guaranteed.
    """
    n = cm.n
    cells = cm.cells
    accuracy = np.diag(cells).copy()
    off = cells.copy()
    np.fill_diagonal(off, np.nan)
    with np.errstate(invalid="ignore"):
        false_hit = np.nanmean(off, axis=1)
        selection_bias = np.nanmean(off, axis=0)

    def _sd(v):
        v = v[np.isfinite(v)]
        return float(np.std(v, ddof=1)) if v.size > 1 else 0.0

    summary = {
        "accuracy_mean": float(np.nanmean(accuracy)),
        "accuracy_sd": _sd(accuracy),
        "false_hit_mean": float(np.nanmean(false_hit)),
        "false_hit_sd": _sd(false_hit),
        "selection_bias_mean": float(np.nanmean(selection_bias)),
        "selection_bias_sd": _sd(selection_bias),
        "complete": cm.complete,
    }
    if cm.complete:
        gap = np.max(np.abs(accuracy + false_hit - 100.0))
        mean_gap = abs(summary["false_hit_mean"] - summary["selection_bias_mean"])
        if gap > _COMPLETENESS_TOL or mean_gap > _COMPLETENESS_TOL:
            raise ValidationError(
                f"completeness identities violated (row gap {gap:.3g}, "
                f"grand-mean gap {mean_gap:.3g})")
    return MetricsReport(actions=cm.actions, accuracy=accuracy,
                         false_hit=false_hit, selection_bias=selection_bias,
                         summary=summary)


# ---------------------------------------------------------------------------
# independent-samples t-test

@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    mean_x: float
    mean_y: float
    sd_x: float
    sd_y: float

    def to_json(self) -> dict:
        return {"t": self.t, "df": self.df, "p": self.p,
                "mean_x": self.mean_x, "mean_y": self.mean_y,
                "sd_x": self.sd_x, "sd_y": self.sd_y}


def independent_ttest(x, y) -> TTestResult:
    """Pooled-variance Student t-test, two-tailed.

    df = n_x + n_y - 2. The p-value comes from the t CDF expressed through
    the regularized incomplete beta function. Degenerate zero-variance input
    gives t = 0, p = 1 for equal means and signed infinity, p = 0 otherwise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or y.size < 2:
        raise ParameterError("each sample needs >= 2 observations")
    nx, ny = x.size, y.size
    df = nx + ny - 2
    mx, my = float(x.mean()), float(y.mean())
    sx, sy = float(x.std(ddof=1)), float(y.std(ddof=1))
    pooled = ((nx - 1) * sx**2 + (ny - 1) * sy**2) / df
    se = math.sqrt(pooled * (1.0 / nx + 1.0 / ny))
    if se == 0.0:
        if mx == my:
            t, p = 0.0, 1.0
        else:
            t, p = math.copysign(math.inf, mx - my), 0.0
    else:
        t = (mx - my) / se
        p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t=t, df=df, p=p, mean_x=mx, mean_y=my, sd_x=sx, sd_y=sy)


def compare_reports(a: MetricsReport, b: MetricsReport) -> dict:
    """Independent t-tests on accuracy, false-hit and selection-bias vectors."""
    return {
        "accuracy": independent_ttest(a.accuracy, b.accuracy).to_json(),
        "false_hit": independent_ttest(a.false_hit, b.false_hit).to_json(),
        "selection_bias": independent_ttest(a.selection_bias,
                                            b.selection_bias).to_json(),
    }


# ---------------------------------------------------------------------------
# human response logs

TASKS = ("AST", "AIT")
BLOCK_ORDERS = ("UP_INV", "INV_UP")
ORIENTATIONS = ("UP", "INV")


@dataclass(frozen=True)
class TrialRecord:
    trial_idx: int
    orientation: str
    target: str
    options: tuple
    response: str | None  # None = timeout
    rt_ms: float | None


@dataclass(frozen=True)
class ResponseLog:
    participant_id: str
    task: str
    block_order: str
    trials: tuple

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}")
        if self.block_order not in BLOCK_ORDERS:
            raise ValidationError(f"unknown block order {self.block_order!r}")
        window = AST_WINDOW_MS if self.task == "AST" else AIT_WINDOW_MS
        for tr in self.trials:
            if tr.orientation not in ORIENTATIONS:
                raise ValidationError(
                    f"trial {tr.trial_idx}: bad orientation {tr.orientation!r}")
            if tr.response is not None and tr.rt_ms is not None \
                    and tr.rt_ms > window:
                raise ValidationError(
                    f"trial {tr.trial_idx}: rt {tr.rt_ms} ms exceeds the "
                    f"{window:.0f} ms response window")


def load_response_log(path) -> ResponseLog:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON: {e}") from e
    for key in ("participant_id", "task", "block_order", "trials"):
        if key not in doc:
            raise SchemaError(f"{path}: missing field {key!r}")
    trials = []
    for i, tr in enumerate(doc["trials"]):
        for key in ("trial_idx", "orientation", "target", "options"):
            if key not in tr:
                raise SchemaError(f"{path}: trial {i} missing field {key!r}")
        trials.append(TrialRecord(
            trial_idx=int(tr["trial_idx"]),
            orientation=str(tr["orientation"]),
            target=str(tr["target"]),
            options=tuple(tr["options"]),
            response=tr.get("response"),
            rt_ms=None if tr.get("rt_ms") is None else float(tr["rt_ms"]),
        ))
    return ResponseLog(participant_id=str(doc["participant_id"]),
                       task=str(doc["task"]),
                       block_order=str(doc["block_order"]),
                       trials=tuple(trials))


def _acc_rt(trials) -> dict:
    """Accuracy over responded trials; RT stats over correct responses only."""
    responded = [t for t in trials if t.response is not None]
    correct = [t for t in responded if t.response == t.target]
    rts = np.array([t.rt_ms for t in correct if t.rt_ms is not None]) / 1000.0
    return {
        "n_trials": len(trials),
        "n_responded": len(responded),
        "n_correct": len(correct),
        "accuracy_pct": (100.0 * len(correct) / len(responded)
                         if responded else float("nan")),
        "rt_mean_s": float(rts.mean()) if rts.size else float("nan"),
        "rt_sd_s": float(rts.std(ddof=1)) if rts.size > 1 else float("nan"),
    }


def analyze_human_logs(logs: list[ResponseLog]) -> dict:
    """Aggregate response logs of one task into descriptive metrics.

    Returns per-participant, per-orientation and per-block-order accuracy and
    RT (correct responses only). AST logs additionally yield a human confusion
    matrix over responded trials; AIT logs yield per-label selection-bias
    percentages (how often a label is wrongly chosen when offered).
    """
    if not logs:
        raise ParameterError("no logs to analyze")
    tasks = {log.task for log in logs}
    if len(tasks) != 1:
        raise ParameterError(f"mixed tasks in one analysis call: {sorted(tasks)}")
    task = tasks.pop()

    bundle = {
        "task": task,
        "participants": {
            log.participant_id: _acc_rt(log.trials) for log in logs
        },
        "by_orientation": {},
        "by_block_order": {},
    }
    for orient in ORIENTATIONS:
        per = [_acc_rt([t for t in log.trials if t.orientation == orient])
               for log in logs]
        bundle["by_orientation"][orient] = _aggregate(per)
    for order in BLOCK_ORDERS:
        per = [_acc_rt(log.trials) for log in logs if log.block_order == order]
        bundle["by_block_order"][order] = _aggregate(per)

    if task == "AST":
        bundle["confusion_matrix"] = _human_confusion(logs).to_json()
    else:
        bundle["selection_bias_pct"] = _ait_selection_bias(logs)
    return bundle


def _aggregate(per_participant: list[dict]) -> dict:
    """Mean/SD across participants of accuracy and RT."""
    acc = np.array([p["accuracy_pct"] for p in per_participant])
    rt = np.array([p["rt_mean_s"] for p in per_participant])
    acc, rt = acc[np.isfinite(acc)], rt[np.isfinite(rt)]
    return {
        "n_participants": len(per_participant),
        "accuracy_mean": float(acc.mean()) if acc.size else float("nan"),
        "accuracy_sd": float(acc.std(ddof=1)) if acc.size > 1 else float("nan"),
        "rt_mean_s": float(rt.mean()) if rt.size else float("nan"),
        "rt_sd_s": float(rt.std(ddof=1)) if rt.size > 1 else float("nan"),
    }


def _human_confusion(logs: list[ResponseLog]) -> ConfusionMatrix:
    """AST confusion matrix; timeouts drop out of numerator and denominator."""
    actions = sorted({t.target for log in logs for t in log.trials}
                     | {o for log in logs for t in log.trials for o in t.options})
    idx = {a: i for i, a in enumerate(actions)}
    n = len(actions)
    counts = np.zeros((n, n))
    trials = np.zeros((n, n))
    timeouts = 0
    for log in logs:
        for tr in log.trials:
            if tr.response is None:
                timeouts += 1
                continue
            i = idx[tr.target]
            other = [o for o in tr.options if o != tr.target]
            trials[i, i] += 1
            counts[i, idx[tr.response]] += 1
            for o in other:
                trials[i, idx[o]] += 1
    return to_percentage(counts, trials, actions, timeouts=timeouts)


def _ait_selection_bias(logs: list[ResponseLog]) -> dict:
    """Per label: % of responded trials offering it as a foil where it was chosen."""
    offered = {}
    chosen = {}
    for log in logs:
        for tr in log.trials:
            if tr.response is None:
                continue
            for o in tr.options:
                if o == tr.target:
                    continue
                offered[o] = offered.get(o, 0) + 1
                if tr.response == o:
                    chosen[o] = chosen.get(o, 0) + 1
    return {label: 100.0 * chosen.get(label, 0) / n_off
            for label, n_off in sorted(offered.items())}
