"""Split velocity profiles into sub-movements at prominent local minima.

Boundaries are the profile endpoints plus interior local minima whose dip is at
least ``prominence_frac`` of the profile maximum; each segment between
consecutive boundaries becomes a fixed-length sub-movement via linear
interpolation, with amplitude preserved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import ParameterError, ValidationError
from .kinematics import VelocityProfile


@dataclass(frozen=True)
class SegmentationParams:
    prominence_frac: float = 0.05
    min_duration: float = 0.1  # seconds
    resample_length: int = 50

    def __post_init__(self):
        if not 0.0 <= self.prominence_frac < 1.0:
            raise ParameterError("prominence_frac must be in [0, 1)")
        if self.min_duration < 0:
            raise ParameterError("min_duration must be >= 0")
        if self.resample_length < 2:
            raise ParameterError("resample_length must be >= 2")


@dataclass(frozen=True)
class SubMovement:
    """One velocity segment, resampled to a fixed length (amplitude preserved)."""

    source_recording: str
    action_label: str
    start_idx: int
    end_idx: int
    raw_duration: float
    profile: np.ndarray  # length L, speeds in m/s

    def __post_init__(self):
        p = np.asarray(self.profile, dtype=float)
        object.__setattr__(self, "profile", p)
        if self.start_idx >= self.end_idx:
            raise ValidationError("start_idx must be < end_idx")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("profile entries must be finite and >= 0")

    def to_dict(self) -> dict:
        return {
            "recording_id": self.source_recording,
            "action": self.action_label,
            "start_idx": self.start_idx,
            "end_idx": self.end_idx,
            "duration_s": self.raw_duration,
            "profile": self.profile.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubMovement":
        return cls(
            source_recording=d["recording_id"],
            action_label=d["action"],
            start_idx=int(d["start_idx"]),
            end_idx=int(d["end_idx"]),
            raw_duration=float(d["duration_s"]),
            profile=np.array(d["profile"], dtype=float),
        )


@dataclass
class ExtractionResult:
    submovements: list
    skipped: int  # segments too short to resample


def detect_boundaries(vp: VelocityProfile, params: SegmentationParams) -> list[int]:
    """Boundary indices: [0, interior prominent minima..., last index].

    Interior boundaries are strict local minima of the profile with prominence
    >= prominence_frac * max(profile), kept greedily left-to-right so that
    consecutive boundaries are at least min_duration apart.
    """
    v = vp.samples
    n = v.size
    if n == 0:
        raise ParameterError("empty velocity profile")
    last = n - 1
    if last == 0:
        return [0]

    vmax = float(v.max())
    if vmax <= 0:
        return [0, last]
    threshold = params.prominence_frac * vmax
    # find_peaks with prominence=0 admits flat noise; keep a tiny floor
    candidates, _ = find_peaks(-v, prominence=max(threshold, 1e-12))

    min_gap = int(np.ceil(params.min_duration / vp.dt))
    boundaries = [0]
    for idx in candidates:
        if idx - boundaries[-1] >= min_gap and last - idx >= min_gap:
            boundaries.append(int(idx))
    boundaries.append(last)
    return boundaries


def extract_submovements(vp: VelocityProfile, boundaries: list[int],
                         params: SegmentationParams,
                         action_label: str = "") -> ExtractionResult:
    """One SubMovement per consecutive boundary pair, resampled to L points."""
    if boundaries != sorted(boundaries) or boundaries[0] != 0 \
            or boundaries[-1] != len(vp) - 1:
        raise ParameterError(f"invalid boundary list {boundaries} for profile "
                             f"of length {len(vp)}")
    L = params.resample_length
    subs = []
    skipped = 0
    for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
        segment = vp.samples[b0:b1 + 1]
        if segment.size < 2:
            skipped += 1
            continue
        xs = np.linspace(0.0, segment.size - 1, L)
        profile = np.interp(xs, np.arange(segment.size), segment)
        subs.append(SubMovement(
            source_recording=vp.source_recording,
            action_label=action_label,
            start_idx=int(b0),
            end_idx=int(b1),
            raw_duration=(b1 - b0) * vp.dt,
            profile=profile,
        ))
    return ExtractionResult(submovements=subs, skipped=skipped)


def segment_profile(vp: VelocityProfile, params: SegmentationParams,
                    action_label: str = "") -> ExtractionResult:
    """Convenience: detect boundaries, then extract."""
    return extract_submovements(vp, detect_boundaries(vp, params), params,
                                action_label=action_label)


def save_submovements(subs, path) -> None:
    with open(path, "w") as f:
        json.dump([s.to_dict() for s in subs], f)


def load_submovements(path) -> list[SubMovement]:
    with open(path) as f:
        return [SubMovement.from_dict(d) for d in json.load(f)]
