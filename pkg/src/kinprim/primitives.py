"""Kinematic-primitive dictionary learning and sparse coding.

The dictionary's atoms are K-means centroids over all sub-movement profiles
(distance-weighted seeding, deterministic under a fixed seed). Each
sub-movement is sparse-coded as a weight vector over atoms by orthogonal
matching pursuit with a hard sparsity budget.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError, ValidationError
from .segmentation import SubMovement

_RESIDUAL_STOP = 1e-10


@dataclass(frozen=True)
class Dictionary:
    """K learned primitive atoms, each a length-L velocity profile."""

    atoms: np.ndarray  # (K, L)
    fingerprint: str
    objective_history: tuple = ()  # within-cluster SSE per K-means iteration

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "objective_history",
                           tuple(self.objective_history))
        if a.ndim != 2:
            raise ValidationError("atoms must be a (K, L) matrix")
        if not np.all(np.isfinite(a)):
            raise ValidationError("atoms must be finite")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def atom_length(self) -> int:
        return self.atoms.shape[1]

    def save(self, path) -> None:
        doc = {"K": self.n_atoms, "L": self.atom_length,
               "atoms": self.atoms.tolist(), "fingerprint": self.fingerprint}
        with open(path, "w") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path) -> "Dictionary":
        with open(path) as f:
            doc = json.load(f)
        atoms = np.array(doc["atoms"], dtype=float)
        if atoms.shape != (doc["K"], doc["L"]):
            raise ValidationError(f"atom matrix shape {atoms.shape} does not "
                                  f"match K={doc['K']}, L={doc['L']}")
        return cls(atoms=atoms, fingerprint=doc["fingerprint"])


@dataclass(frozen=True)
class SparseCode:
    """Weight vector over atoms; entries outside the selected set are exactly 0."""

    weights: np.ndarray  # length K
    nnz: int
    residual_norm: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if self.residual_norm < 0:
            raise ValidationError("residual_norm must be >= 0")

    def to_dict(self) -> dict:
        nz = {str(i): float(w) for i, w in enumerate(self.weights) if w != 0.0}
        return {"weights": nz, "k": int(self.weights.size),
                "nnz": self.nnz, "residual": self.residual_norm}

    @classmethod
    def from_dict(cls, d: dict) -> "SparseCode":
        w = np.zeros(int(d["k"]))
        for i, v in d["weights"].items():
            w[int(i)] = float(v)
        return cls(weights=w, nnz=int(d["nnz"]),
                   residual_norm=float(d["residual"]))


@dataclass(frozen=True)
class ActionRepresentation:
    """Temporal sequence of sparse codes for one recording."""

    recording_id: str
    action_label: str
    codes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "codes", tuple(self.codes))
        if not self.codes:
            raise ValidationError("an action representation needs >= 1 code")
        ks = {c.weights.size for c in self.codes}
        if len(ks) != 1:
            raise ValidationError(f"codes disagree on K: {sorted(ks)}")


def _fingerprint(data: np.ndarray, k: int, seed: int) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data).tobytes())
    h.update(f"|K={k}|seed={seed}".encode())
    return h.hexdigest()[:16]


def _plusplus_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding: each new center drawn with probability
    proportional to squared distance from the nearest chosen center."""
    n = data.shape[0]
    centers = np.empty((k, data.shape[1]))
    first = rng.integers(n)
    centers[0] = data[first]
    d2 = np.sum((data - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = data[idx]
        d2 = np.minimum(d2, np.sum((data - centers[j]) ** 2, axis=1))
    return centers


def learn_dictionary(subs: list[SubMovement], k: int = 15, seed: int = 0,
                     max_iters: int = 100) -> Dictionary:
    """K-means over all sub-movement profiles; atoms are the centroids.

    Deterministic for a fixed (input order, k, seed). Empty clusters are
    repaired by moving the centroid onto the point farthest from its assigned
    centroid (lowest index on ties).
    """
    if len(subs) < k:
        raise InsufficientDataError(f"{len(subs)} sub-movements but K={k}; "
                                    "need at least K")
    data = np.array([s.profile for s in subs], dtype=float)
    lengths = {s.profile.size for s in subs}
    if len(lengths) != 1:
        raise ParameterError(f"sub-movement profiles have mixed lengths "
                             f"{sorted(lengths)}")

    rng = np.random.default_rng(seed)
    centers = _plusplus_init(data, k, rng)
    assignments = np.full(len(data), -1)
    history = []
    for _ in range(max_iters):
        d2 = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignments = d2.argmin(axis=1)
        dist_to_own = d2[np.arange(len(data)), new_assignments]
        counts = np.bincount(new_assignments, minlength=k)
        for j in range(k):
            if counts[j] == 0:
                # steal the farthest point from a cluster that can spare one
                movable = counts[new_assignments] > 1
                scores = np.where(movable, dist_to_own, -np.inf)
                far = int(np.argmax(scores))
                counts[new_assignments[far]] -= 1
                centers[j] = data[far]
                new_assignments[far] = j
                counts[j] = 1
                dist_to_own[far] = 0.0
        history.append(float(
            ((data - centers[new_assignments]) ** 2).sum()))
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        for j in range(k):
            members = data[assignments == j]
            centers[j] = members.mean(axis=0)

    return Dictionary(atoms=centers,
                      fingerprint=_fingerprint(data, k, seed),
                      objective_history=tuple(history))


def encode(sub: SubMovement, dictionary: Dictionary, sparsity: int = 3) -> SparseCode:
    """Orthogonal matching pursuit with a hard budget of ``sparsity`` atoms.

    Greedily selects the atom most correlated with the residual (lowest index
    on ties), re-solves least squares on the selected set, and stops at the
    budget or when the residual norm drops below 1e-10.
    """
    k = dictionary.n_atoms
    if not 1 <= sparsity <= k:
        raise ParameterError(f"sparsity must be in [1, {k}], got {sparsity}")
    x = np.asarray(sub.profile, dtype=float)
    if x.size != dictionary.atom_length:
        raise ParameterError(f"profile length {x.size} != atom length "
                             f"{dictionary.atom_length}")

    weights = np.zeros(k)
    if np.linalg.norm(x) == 0.0:
        return SparseCode(weights=weights, nnz=0, residual_norm=0.0)

    atoms = dictionary.atoms
    residual = x.copy()
    selected: list[int] = []
    coeffs = np.empty(0)
    for _ in range(sparsity):
        if np.linalg.norm(residual) < _RESIDUAL_STOP:
            break
        corr = np.abs(atoms @ residual)
        corr[selected] = -np.inf
        best = int(np.argmax(corr))  # argmax takes the lowest index on ties
        selected.append(best)
        sub_atoms = atoms[selected]  # (s, L)
        coeffs, *_ = np.linalg.lstsq(sub_atoms.T, x, rcond=None)
        residual = x - sub_atoms.T @ coeffs

    for idx, c in zip(selected, coeffs):
        weights[idx] = c
    return SparseCode(weights=weights,
                      nnz=int(np.count_nonzero(weights)),
                      residual_norm=float(np.linalg.norm(residual)))


def encode_action(subs: list[SubMovement], dictionary: Dictionary,
                  sparsity: int = 3) -> ActionRepresentation:
    """Encode the sub-movements of one recording, in temporal order."""
    if not subs:
        raise ParameterError("no sub-movements to encode")
    recordings = {s.source_recording for s in subs}
    if len(recordings) != 1:
        raise ParameterError(f"sub-movements span multiple recordings: "
                             f"{sorted(recordings)}")
    ordered = sorted(subs, key=lambda s: s.start_idx)
    codes = tuple(encode(s, dictionary, sparsity) for s in ordered)
    return ActionRepresentation(recording_id=ordered[0].source_recording,
                                action_label=ordered[0].action_label,
                                codes=codes)


def save_representation(rep: ActionRepresentation, path) -> None:
    doc = {"recording_id": rep.recording_id, "action": rep.action_label,
           "codes": [c.to_dict() for c in rep.codes]}
    with open(path, "w") as f:
        json.dump(doc, f)


def load_representation(path) -> ActionRepresentation:
    with open(path) as f:
        doc = json.load(f)
    return ActionRepresentation(
        recording_id=doc["recording_id"], action_label=doc["action"],
        codes=tuple(SparseCode.from_dict(c) for c in doc["codes"]))
