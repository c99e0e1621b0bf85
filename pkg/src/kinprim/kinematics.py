"""Marker-trajectory ingestion, tangential velocity, and parametric action synthesis.

Trajectories are time-indexed marker positions in meters. Velocities are
tangential speeds in m/s obtained by finite differencing. Synthetic actions are
generated from parametric path families, optionally with a speed profile
following the two-thirds power law v = gain * curvature^(-1/3).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, SchemaError, TooShortError, ValidationError

PATH_FAMILIES = ("circle", "line", "ellipse", "zigzag", "spiral")
SPEED_LAWS = ("constant", "two_thirds_power")

# Families whose curvature is identically zero; the power law is undefined there.
_ZERO_CURVATURE_FAMILIES = ("line", "zigzag")

# Six-dot layout approximating a hand seen frontally (meters, relative to the
# path point): wrist, two palm-edge dots, palm center, plus two upstream dots.
_DEFAULT_MARKER_OFFSETS = {
    "shoulder": (-0.06, 0.10),
    "elbow": (-0.03, 0.05),
    "wrist": (0.0, 0.0),
    "palm_1": (0.015, -0.012),
    "palm_2": (0.025, 0.0),
    "palm_3": (0.015, 0.012),
}


@dataclass(frozen=True)
class Trajectory:
    """One recorded action: T frames of M marker positions (2-D or 3-D, meters)."""

    action_label: str
    markers: tuple[str, ...]
    fps: float
    positions: np.ndarray  # shape (T, M, D), D in {2, 3}
    recording_id: str

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "markers", tuple(self.markers))
        if pos.ndim != 3 or pos.shape[2] not in (2, 3):
            raise ValidationError(
                f"positions must be (T, M, 2|3), got shape {pos.shape}")
        if pos.shape[0] < 2:
            raise TooShortError(
                f"recording {self.recording_id!r} has {pos.shape[0]} frame(s); need >= 2")
        if pos.shape[1] != len(self.markers):
            raise ValidationError(
                f"{len(self.markers)} marker names but {pos.shape[1]} marker columns")
        if not np.all(np.isfinite(pos)):
            t, m = np.argwhere(~np.isfinite(pos))[0][:2]
            raise ValidationError(
                f"non-finite coordinate at frame {t}, marker {m} "
                f"({self.markers[m]!r}) in recording {self.recording_id!r}")
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise ValidationError(f"fps must be positive, got {self.fps}")

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def n_markers(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class VelocityProfile:
    """Tangential speed samples (m/s) for one recording; length = T - 1."""

    samples: np.ndarray
    dt: float
    source_recording: str

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", s)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("velocity samples must be a nonempty 1-D array")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValidationError("velocity samples must be finite and >= 0")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthetic action class.

    ``geometry`` keys by family:
      circle: radius | ellipse: a, b | line: length |
      zigzag: segment_length, n_segments, angle_deg |
      spiral: inner_radius, growth, turns
    """

    class_name: str
    path_family: str
    geometry: dict = field(default_factory=dict)
    speed_law: str = "constant"
    gain: float = 0.5
    duration_s: float = 4.0
    noise_std: float = 0.0
    seed: int = 0
    fps: float = 100.0

    def __post_init__(self):
        if self.path_family not in PATH_FAMILIES:
            raise ParameterError(f"unknown path family {self.path_family!r}")
        if self.speed_law not in SPEED_LAWS:
            raise ParameterError(f"unknown speed law {self.speed_law!r}")
        if self.duration_s <= 0:
            raise ParameterError("duration must be > 0")
        if self.noise_std < 0:
            raise ParameterError("noise_std must be >= 0")
        if self.gain <= 0:
            raise ParameterError("gain must be > 0")
        if self.fps <= 0:
            raise ParameterError("fps must be > 0")
        if self.speed_law == "two_thirds_power" and self.path_family in _ZERO_CURVATURE_FAMILIES:
            raise ParameterError(
                f"two_thirds_power is undefined on zero-curvature family "
                f"{self.path_family!r}; use the constant law")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise SchemaError(f"unknown SynthSpec field(s): {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise SchemaError(f"bad SynthSpec document: {e}") from e


# ---------------------------------------------------------------------------
# file I/O

def save_trajectory(traj: Trajectory, path, format: str = "json") -> None:
    """Write a trajectory in the JSON or CSV interchange format."""
    path = Path(path)
    if format == "json":
        doc = {
            "action": traj.action_label,
            "recording_id": traj.recording_id,
            "fps": traj.fps,
            "markers": list(traj.markers),
            "frames": traj.positions.tolist(),
        }
        path.write_text(json.dumps(doc))
    elif format == "csv":
        dim = traj.positions.shape[2]
        header = ["frame", "marker", "x", "y"] + (["z"] if dim == 3 else [])
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            # metadata rows the plain csv schema cannot carry go in a sidecar
            for t in range(traj.n_frames):
                for m, name in enumerate(traj.markers):
                    w.writerow([t, name] + [repr(float(c)) for c in traj.positions[t, m]])
        meta = {"action": traj.action_label, "recording_id": traj.recording_id,
                "fps": traj.fps}
        path.with_suffix(path.suffix + ".meta.json").write_text(json.dumps(meta))
    else:
        raise ParameterError(f"unknown format {format!r}")


def load_trajectory(path, format: str = "json") -> Trajectory:
    """Load and validate a trajectory file (see the interchange schemas)."""
    path = Path(path)
    if format == "json":
        return _load_json(path)
    if format == "csv":
        return _load_csv(path)
    raise ParameterError(f"unknown format {format!r}")


def _load_json(path: Path) -> Trajectory:
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON: {e}") from e
    for key in ("action", "recording_id", "fps", "markers", "frames"):
        if key not in doc:
            raise SchemaError(f"{path}: missing field {key!r}")
    try:
        positions = np.array(doc["frames"], dtype=float)
    except (ValueError, TypeError) as e:
        raise SchemaError(f"{path}: field 'frames' is not a rectangular "
                          f"numeric array: {e}") from e
    return Trajectory(
        action_label=str(doc["action"]),
        markers=tuple(str(m) for m in doc["markers"]),
        fps=float(doc["fps"]),
        positions=positions,
        recording_id=str(doc["recording_id"]),
    )


def _load_csv(path: Path) -> Trajectory:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header[:2] != ["frame", "marker"] or header[2:] not in (["x", "y"], ["x", "y", "z"]):
            raise SchemaError(f"{path}: bad header {header!r}; "
                              "expected frame,marker,x,y[,z]")
        dim = len(header) - 2
        markers: list[str] = []
        cells: dict[tuple[int, str], list[float]] = {}
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}: row {row_no} has {len(row)} fields, "
                                  f"expected {len(header)}")
            try:
                frame = int(row[0])
            except ValueError:
                raise SchemaError(f"{path}: row {row_no} field 'frame' is not "
                                  f"an integer: {row[0]!r}") from None
            name = row[1]
            try:
                coords = [float(c) for c in row[2:]]
            except ValueError:
                raise SchemaError(f"{path}: row {row_no} has a non-numeric "
                                  "coordinate") from None
            if name not in markers:
                markers.append(name)
            cells[(frame, name)] = coords
        if not cells:
            raise SchemaError(f"{path}: no data rows")
        n_frames = max(fr for fr, _ in cells) + 1
        positions = np.full((n_frames, len(markers), dim), np.nan)
        for (frame, name), coords in cells.items():
            positions[frame, markers.index(name)] = coords

    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    else:
        meta = {"action": path.stem, "recording_id": path.stem, "fps": 100.0}
    return Trajectory(
        action_label=str(meta.get("action", path.stem)),
        markers=tuple(markers),
        fps=float(meta.get("fps", 100.0)),
        positions=positions,
        recording_id=str(meta.get("recording_id", path.stem)),
    )


# ---------------------------------------------------------------------------
# tangential velocity

def tangential_velocity(traj: Trajectory, marker_select: str = "all_mean",
                        smooth_window: int = 5) -> VelocityProfile:
    """Finite-difference speed profile, averaged over markers, boxcar smoothed.

    ``marker_select`` is "all_mean" or a marker name. ``smooth_window`` is an
    odd positive window size (in samples); edges are truncated, not padded.
    """
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ParameterError(f"smooth_window must be odd and positive, "
                             f"got {smooth_window}")
    n = traj.n_frames - 1
    if smooth_window > n:
        raise ParameterError(f"smooth_window {smooth_window} exceeds profile "
                             f"length {n}")
    disp = np.diff(traj.positions, axis=0)          # (T-1, M, D)
    speeds = np.linalg.norm(disp, axis=2) * traj.fps  # (T-1, M)
    if marker_select == "all_mean":
        raw = speeds.mean(axis=1)
    else:
        if marker_select not in traj.markers:
            raise ParameterError(f"no marker named {marker_select!r} "
                                 f"in {list(traj.markers)}")
        raw = speeds[:, traj.markers.index(marker_select)]
    smoothed = _boxcar(raw, smooth_window)
    return VelocityProfile(samples=smoothed, dt=1.0 / traj.fps,
                           source_recording=traj.recording_id)


def _boxcar(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; at the edges the window is truncated."""
    if window == 1:
        return x.copy()
    kernel = np.ones(window)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return sums / counts


# ---------------------------------------------------------------------------
# parametric synthesis

_DENSE_SAMPLES = 8192


def _dense_path(spec: SynthSpec):
    """Return (points (N,2), curvature (N,), closed) for the path family."""
    g = spec.geometry
    u = np.linspace(0.0, 1.0, _DENSE_SAMPLES)
    if spec.path_family == "circle":
        r = float(g.get("radius", 0.1))
        theta = 2 * np.pi * u
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        kappa = np.full_like(u, 1.0 / r)
        return pts, kappa, True
    if spec.path_family == "ellipse":
        a = float(g.get("a", 0.12))
        b = float(g.get("b", 0.07))
        theta = 2 * np.pi * u
        pts = np.stack([a * np.cos(theta), b * np.sin(theta)], axis=1)
        kappa = a * b / (a**2 * np.sin(theta)**2 + b**2 * np.cos(theta)**2) ** 1.5
        return pts, kappa, True
    if spec.path_family == "line":
        length = float(g.get("length", 0.3))
        pts = np.stack([u * length, np.zeros_like(u)], axis=1)
        return pts, np.zeros_like(u), False
    if spec.path_family == "zigzag":
        seg = float(g.get("segment_length", 0.1))
        n_seg = int(g.get("n_segments", 4))
        ang = np.deg2rad(float(g.get("angle_deg", 60.0)))
        # corner points, then linear interpolation along the polyline
        corners = [np.zeros(2)]
        direction = np.array([np.cos(ang / 2), np.sin(ang / 2)])
        for i in range(n_seg):
            corners.append(corners[-1] + seg * direction)
            direction = direction * np.array([1.0, -1.0])
        corners = np.array(corners)
        seg_len = np.linalg.norm(np.diff(corners, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        s = u * cum[-1]
        pts = np.stack([np.interp(s, cum, corners[:, 0]),
                        np.interp(s, cum, corners[:, 1])], axis=1)
        return pts, np.zeros_like(u), False
    if spec.path_family == "spiral":
        r0 = float(g.get("inner_radius", 0.02))
        growth = float(g.get("growth", 0.01))
        turns = float(g.get("turns", 3.0))
        theta = u * 2 * np.pi * turns
        r = r0 + growth * theta
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        # Archimedean spiral: kappa = (r^2 + 2 b^2) / (r^2 + b^2)^(3/2), b = growth
        b = growth
        kappa = (r**2 + 2 * b**2) / (r**2 + b**2) ** 1.5
        return pts, kappa, False
    raise ParameterError(f"unknown path family {spec.path_family!r}")


def generate_action(spec: SynthSpec) -> Trajectory:
    """Synthesize a six-marker trajectory from a parametric path and speed law.

    Deterministic for a fixed spec (noise comes from a seeded generator). The
    speed along the path, before noise, is ``gain`` for the constant law and
    ``gain * curvature^(-1/3)`` for the two-thirds power law.
    """
    pts, kappa, closed = _dense_path(spec)
    if spec.speed_law == "two_thirds_power":
        speeds = spec.gain * np.power(kappa, -1.0 / 3.0)
    else:
        speeds = np.full(len(pts), spec.gain)

    ds = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mid_speed = 0.5 * (speeds[:-1] + speeds[1:])
    seg_time = ds / mid_speed
    t_cum = np.concatenate([[0.0], np.cumsum(seg_time)])
    cycle = t_cum[-1]

    n_frames = int(round(spec.duration_s * spec.fps)) + 1
    tk = np.arange(n_frames) / spec.fps
    if closed:
        phase = np.mod(tk, cycle)
    else:
        # open paths ping-pong back and forth
        phase = np.mod(tk, 2 * cycle)
        back = phase > cycle
        phase[back] = 2 * cycle - phase[back]
    x = np.interp(phase, t_cum, pts[:, 0])
    y = np.interp(phase, t_cum, pts[:, 1])
    center = np.stack([x, y], axis=1)  # (T, 2)

    offsets = np.array(list(_DEFAULT_MARKER_OFFSETS.values()))
    markers = tuple(_DEFAULT_MARKER_OFFSETS.keys())
    positions = center[:, None, :] + offsets[None, :, :]
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        positions = positions + rng.normal(0.0, spec.noise_std, positions.shape)

    return Trajectory(
        action_label=spec.class_name,
        markers=markers,
        fps=spec.fps,
        positions=positions,
        recording_id=f"{spec.class_name}_seed{spec.seed}",
    )
