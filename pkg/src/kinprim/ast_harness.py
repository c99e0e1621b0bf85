"""Two-alternative forced-choice action similarity experiment for the model.

A trial shows a target action T and two competing classifiers A and B, with
(T == A or T == B) and A != B. The classifier with the higher mean score over
randomly drawn target instances wins. Over all targets and repetitions this
yields a raw selection-count matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .classifier import OneVsAllModel

TIE_RULES = ("coin_flip_seeded", "prefer_a")


@dataclass(frozen=True)
class Triad:
    target: str
    classifier_a: str
    classifier_b: str

    def __post_init__(self):
        if self.classifier_a == self.classifier_b:
            raise ParameterError("triad requires A != B")
        if self.target not in (self.classifier_a, self.classifier_b):
            raise ParameterError("triad requires T == A or T == B")


@dataclass(frozen=True)
class ASTConfig:
    repetitions: int = 24
    instances_per_trial: int = 10
    seed: int = 0
    tie_rule: str = "coin_flip_seeded"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")
        if self.instances_per_trial < 1:
            raise ParameterError("instances_per_trial must be >= 1")
        if self.tie_rule not in TIE_RULES:
            raise ParameterError(f"unknown tie rule {self.tie_rule!r}")


@dataclass(frozen=True)
class TrialOutcome:
    triad: Triad
    winner: str
    score_a: float
    score_b: float

    @property
    def correct(self) -> bool:
        return self.winner == self.triad.target


@dataclass
class ExperimentResult:
    actions: list
    counts: np.ndarray          # (n, n): cell(i, j) = selections of j with target i
    trials_per_cell: np.ndarray  # (n, n): presentations per pairing
    log: list                   # TrialOutcome in executed (seeded shuffled) order


def enumerate_triads(actions: list[str]) -> list[Triad]:
    """All 2 n (n-1) triads, in deterministic lexicographic order.

    For each target and each distractor the target's own classifier appears
    once on each side.
    """
    if len(actions) < 2:
        raise ParameterError("need >= 2 actions")
    if len(set(actions)) != len(actions):
        raise ParameterError("action labels must be unique")
    triads = []
    for target in actions:
        for other in actions:
            if other == target:
                continue
            triads.append(Triad(target, target, other))
            triads.append(Triad(target, other, target))
    return triads


def run_trial(model: OneVsAllModel, triad: Triad, pool: dict,
              cfg: ASTConfig, rng: np.random.Generator) -> TrialOutcome:
    """Score one triad: mean classifier score over drawn target instances.

    Instances are codes of the target action drawn uniformly with replacement
    from ``pool`` (action label -> list of SparseCode).
    """
    codes = pool.get(triad.target, [])
    if not codes:
        raise ParameterError(f"no codes for target action {triad.target!r}")
    picks = rng.integers(len(codes), size=cfg.instances_per_trial)
    drawn = [codes[i] for i in picks]
    score_a = float(np.mean([model.score_code(triad.classifier_a, c)
                             for c in drawn]))
    score_b = float(np.mean([model.score_code(triad.classifier_b, c)
                             for c in drawn]))
    if score_a > score_b:
        winner = triad.classifier_a
    elif score_b > score_a:
        winner = triad.classifier_b
    elif cfg.tie_rule == "prefer_a":
        winner = triad.classifier_a
    else:
        winner = triad.classifier_a if rng.integers(2) == 0 else triad.classifier_b
    return TrialOutcome(triad=triad, winner=winner,
                        score_a=score_a, score_b=score_b)


def run_experiment(model: OneVsAllModel, pool: dict, actions: list[str],
                   cfg: ASTConfig) -> ExperimentResult:
    """Run repetitions x |triads| trials in a seeded shuffled order."""
    missing = [a for a in actions if not pool.get(a)]
    if missing:
        raise ParameterError(f"pool has no codes for action(s) {missing}")
    triads = enumerate_triads(actions)
    schedule = triads * cfg.repetitions
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(schedule))

    n = len(actions)
    index = {a: i for i, a in enumerate(actions)}
    counts = np.zeros((n, n), dtype=int)
    log = []
    for pos in order:
        triad = schedule[pos]
        outcome = run_trial(model, triad, pool, cfg, rng)
        counts[index[triad.target], index[outcome.winner]] += 1
        log.append(outcome)

    trials_per_cell = np.full((n, n), 2 * cfg.repetitions, dtype=int)
    np.fill_diagonal(trials_per_cell, 2 * cfg.repetitions * (n - 1))
    return ExperimentResult(actions=list(actions), counts=counts,
                            trials_per_cell=trials_per_cell, log=log)


def write_trial_log(result: ExperimentResult, path) -> None:
    """CSV log: trial_idx,target,a,b,score_a,score_b,winner,correct."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trial_idx", "target", "a", "b",
                    "score_a", "score_b", "winner", "correct"])
        for i, out in enumerate(result.log):
            w.writerow([i, out.triad.target, out.triad.classifier_a,
                        out.triad.classifier_b, repr(out.score_a),
                        repr(out.score_b), out.winner, int(out.correct)])
