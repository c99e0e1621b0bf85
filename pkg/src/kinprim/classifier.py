"""One-vs-all regularized least squares classification over sparse codes.

Each action gets a binary kernel RLS classifier: solve
(G + lambda * N * I) alpha = y with an RBF Gram matrix G and labels y in
{+1, -1}. Scores are the kernel expansion sum_i alpha_i k(x_i, x); the action
similarity task compares raw scores, so no calibration is applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from .errors import ParameterError, ValidationError
from .primitives import SparseCode

_DUAL_RESIDUAL_TOL = 1e-8


def _as_matrix(codes) -> np.ndarray:
    """Stack sparse codes (or raw vectors) into an (N, K) float matrix."""
    rows = [c.weights if isinstance(c, SparseCode) else np.asarray(c, float)
            for c in codes]
    return np.array(rows, dtype=float)


def rbf_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """exp(-||x - y||^2 / (2 sigma^2)) for all pairs of rows."""
    d2 = cdist(np.atleast_2d(a), np.atleast_2d(b), metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * sigma**2))


@dataclass(frozen=True)
class BinaryRLS:
    action_label: str
    training_inputs: np.ndarray   # (N, K)
    dual_coefficients: np.ndarray  # (N,)
    sigma: float
    lam: float

    def score_vector(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.training_inputs.shape[1],):
            raise ParameterError(
                f"code length {x.shape} does not match training dimension "
                f"{self.training_inputs.shape[1]}")
        kvec = rbf_kernel(self.training_inputs, x[None, :], self.sigma)[:, 0]
        return float(self.dual_coefficients @ kvec)


def train_binary(pos, neg, sigma: float, lam: float,
                 action_label: str = "") -> BinaryRLS:
    """Fit one binary RLS classifier: +1 for pos codes, -1 for neg codes."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if lam <= 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    pos_m = _as_matrix(pos)
    neg_m = _as_matrix(neg)
    if pos_m.size == 0 or neg_m.size == 0:
        raise ParameterError("both positive and negative sets must be nonempty")
    x = np.vstack([pos_m, neg_m])
    y = np.concatenate([np.ones(len(pos_m)), -np.ones(len(neg_m))])
    n = len(x)
    gram = rbf_kernel(x, x, sigma)
    system = gram + lam * n * np.eye(n)
    alpha = cho_solve(cho_factor(system, lower=True), y)
    residual = np.linalg.norm(system @ alpha - y)
    if residual >= _DUAL_RESIDUAL_TOL:
        raise ValidationError(f"dual system residual {residual:.3g} exceeds "
                              f"{_DUAL_RESIDUAL_TOL}")
    return BinaryRLS(action_label=action_label, training_inputs=x,
                     dual_coefficients=alpha, sigma=sigma, lam=lam)


def score(clf: BinaryRLS, code) -> float:
    """Kernel-expansion score of one sparse code (or raw weight vector)."""
    x = code.weights if isinstance(code, SparseCode) else np.asarray(code, float)
    return clf.score_vector(x)


def median_pairwise_sigma(codes) -> float:
    """Median Euclidean distance among training codes (the usual RBF width rule)."""
    x = _as_matrix(codes)
    if len(x) < 2:
        raise ParameterError("need >= 2 codes for the median heuristic")
    d = pdist(x)
    med = float(np.median(d))
    if med <= 0:
        raise ParameterError("all training codes identical; sigma must be "
                             "supplied explicitly")
    return med


@dataclass(frozen=True)
class OneVsAllModel:
    classifiers: dict  # action label -> BinaryRLS
    dictionary_fingerprint: str

    @property
    def actions(self) -> list[str]:
        return list(self.classifiers)

    def score_code(self, action: str, code) -> float:
        if action not in self.classifiers:
            raise ParameterError(f"no classifier for action {action!r}")
        return score(self.classifiers[action], code)

    def save(self, path) -> None:
        doc = {
            "dictionary_fingerprint": self.dictionary_fingerprint,
            "classifiers": {
                label: {
                    "training_inputs": clf.training_inputs.tolist(),
                    "alpha": clf.dual_coefficients.tolist(),
                    "sigma": clf.sigma,
                    "lambda": clf.lam,
                }
                for label, clf in self.classifiers.items()
            },
        }
        with open(path, "w") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path, expected_fingerprint: str | None = None) -> "OneVsAllModel":
        with open(path) as f:
            doc = json.load(f)
        fp = doc["dictionary_fingerprint"]
        if expected_fingerprint is not None and fp != expected_fingerprint:
            raise ValidationError(f"model was trained against dictionary "
                                  f"{fp}, not {expected_fingerprint}")
        classifiers = {
            label: BinaryRLS(
                action_label=label,
                training_inputs=np.array(c["training_inputs"], dtype=float),
                dual_coefficients=np.array(c["alpha"], dtype=float),
                sigma=float(c["sigma"]),
                lam=float(c["lambda"]),
            )
            for label, c in doc["classifiers"].items()
        }
        return cls(classifiers=classifiers, dictionary_fingerprint=fp)


def train_one_vs_all(dataset: dict, sigma: float | None = None,
                     lam: float = 1e-3,
                     dictionary_fingerprint: str = "") -> OneVsAllModel:
    """Train one binary classifier per action from per-action representations.

    ``dataset`` maps action label -> list of ActionRepresentation. Positives
    are that action's codes, negatives everything else. When sigma is None it
    is set to the median pairwise distance over all training codes.
    """
    if len(dataset) < 2:
        raise ParameterError("one-vs-all needs >= 2 actions")
    codes_by_action = {
        label: [c for rep in reps for c in rep.codes]
        for label, reps in dataset.items()
    }
    for label, codes in codes_by_action.items():
        if not codes:
            raise ParameterError(f"action {label!r} has no codes")
    all_codes = [c for codes in codes_by_action.values() for c in codes]
    if sigma is None:
        sigma = median_pairwise_sigma(all_codes)

    classifiers = {}
    for label in dataset:
        pos = codes_by_action[label]
        neg = [c for other, codes in codes_by_action.items()
               if other != label for c in codes]
        classifiers[label] = train_binary(pos, neg, sigma, lam,
                                          action_label=label)
    return OneVsAllModel(classifiers=classifiers,
                         dictionary_fingerprint=dictionary_fingerprint)
