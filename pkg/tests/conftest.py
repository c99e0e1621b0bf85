import numpy as np
import pytest

from kinprim.kinematics import Trajectory, VelocityProfile
from kinprim.segmentation import SubMovement


@pytest.fixture
def six_marker_traj():
    """3 frames, 6 markers, 2-D, gentle drift."""
    rng = np.random.default_rng(0)
    base = rng.normal(0, 0.05, (1, 6, 2))
    drift = np.array([[0.0, 0.0], [0.01, 0.0], [0.02, 0.01]])[:, None, :]
    return Trajectory(action_label="wave", markers=[f"m{i}" for i in range(6)],
                      fps=100.0, positions=base + drift, recording_id="rec0")


def make_profile(samples, dt=0.01, rec="rec"):
    return VelocityProfile(samples=np.asarray(samples, dtype=float), dt=dt,
                           source_recording=rec)


def make_sub(profile, rec="rec", label="act", start=0, end=None):
    profile = np.asarray(profile, dtype=float)
    if end is None:
        end = start + len(profile) - 1
    return SubMovement(source_recording=rec, action_label=label,
                       start_idx=start, end_idx=end,
                       raw_duration=(end - start) * 0.01, profile=profile)
