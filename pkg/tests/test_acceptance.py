"""Acceptance suite: one test per top-level criterion, each printing a
PASS line with the measured quantity."""

import time
from itertools import product

import numpy as np
import pytest

from kinprim import analysis
from kinprim.ast_harness import ASTConfig, enumerate_triads, run_experiment
from kinprim.classifier import train_binary, train_one_vs_all
from kinprim.kinematics import (SynthSpec, VelocityProfile, generate_action,
                                tangential_velocity)
from kinprim.primitives import (ActionRepresentation, Dictionary, SparseCode,
                                encode, encode_action, learn_dictionary)
from kinprim.segmentation import SegmentationParams, segment_profile

from conftest import make_sub
from test_analysis import oracle_ttest


def code(vec):
    w = np.asarray(vec, dtype=float)
    return SparseCode(weights=w, nnz=int(np.count_nonzero(w)),
                      residual_norm=0.0)


def rep(label, vectors, rec):
    return ActionRepresentation(recording_id=rec, action_label=label,
                                codes=tuple(code(v) for v in vectors))


EIGHT_CLASSES = [
    dict(class_name="circle_slow", path_family="circle",
         geometry={"radius": 0.08}, speed_law="two_thirds_power", gain=0.15),
    dict(class_name="circle_fast", path_family="circle",
         geometry={"radius": 0.08}, speed_law="two_thirds_power", gain=0.35),
    dict(class_name="ellipse_flat", path_family="ellipse",
         geometry={"a": 0.12, "b": 0.05}, speed_law="two_thirds_power",
         gain=0.25),
    dict(class_name="ellipse_round", path_family="ellipse",
         geometry={"a": 0.10, "b": 0.08}, speed_law="two_thirds_power",
         gain=0.45),
    dict(class_name="line_mid", path_family="line",
         geometry={"length": 0.25}, speed_law="constant", gain=0.3),
    dict(class_name="zigzag", path_family="zigzag",
         geometry={"segment_length": 0.08, "n_segments": 5, "angle_deg": 60},
         speed_law="constant", gain=0.4),
    dict(class_name="spiral", path_family="spiral",
         geometry={"inner_radius": 0.02, "growth": 0.008, "turns": 3},
         speed_law="two_thirds_power", gain=0.3),
    dict(class_name="line_slow", path_family="line",
         geometry={"length": 0.12}, speed_law="constant", gain=0.15),
]


@pytest.fixture(scope="module")
def synthetic_ast():
    """8 classes x 12 recordings through the whole seeded pipeline + AST."""
    t0 = time.time()
    params = SegmentationParams()
    subs_by_rec = {}
    for c in EIGHT_CLASSES:
        for i in range(12):
            spec = SynthSpec(**c, duration_s=6.0, noise_std=3e-4,
                             seed=1000 * EIGHT_CLASSES.index(c) + i, fps=100.0)
            traj = generate_action(spec)
            vp = tangential_velocity(traj)
            vp = VelocityProfile(vp.samples, vp.dt, f"{c['class_name']}_{i}")
            res = segment_profile(vp, params, action_label=c["class_name"])
            if res.submovements:
                subs_by_rec[vp.source_recording] = res.submovements
    all_subs = [s for v in subs_by_rec.values() for s in v]
    dictionary = learn_dictionary(all_subs, k=15, seed=7)
    reps = [encode_action(v, dictionary, 3) for v in subs_by_rec.values()]
    dataset = {}
    for r in reps:
        dataset.setdefault(r.action_label, []).append(r)
    model = train_one_vs_all(dataset,
                             dictionary_fingerprint=dictionary.fingerprint)
    pool = {}
    for r in reps:
        pool.setdefault(r.action_label, []).extend(r.codes)
    actions = sorted(pool)
    result = run_experiment(model, pool, actions,
                            ASTConfig(repetitions=24, instances_per_trial=10,
                                      seed=42))
    elapsed = time.time() - t0
    return result, elapsed


def test_triad_design_exactness():
    t0 = time.time()
    triads = enumerate_triads([f"a{i:02d}" for i in range(19)])
    enum_time = time.time() - t0
    assert len(triads) == 684
    assert enum_time < 1.0
    for n in range(2, 7):
        actions = [f"a{i}" for i in range(n)]
        brute = {(t, a, b) for t, a, b in product(actions, repeat=3)
                 if (t == a or t == b) and a != b}
        got = {(t.target, t.classifier_a, t.classifier_b)
               for t in enumerate_triads(actions)}
        assert got == brute

    # full seeded 19-action run with a trained model logs exactly 16416 trials
    rng = np.random.default_rng(0)
    actions = [f"a{i:02d}" for i in range(19)]
    dataset = {a: [rep(a, rng.normal(3 * i, 0.3, (6, 15)), rec=f"{a}_r")]
               for i, a in enumerate(actions)}
    model = train_one_vs_all(dataset)
    pool = {a: list(dataset[a][0].codes) for a in actions}
    t0 = time.time()
    result = run_experiment(model, pool, actions,
                            ASTConfig(repetitions=24, seed=1))
    run_time = time.time() - t0
    assert len(result.log) == 16416
    assert run_time < 120.0
    np.testing.assert_array_equal(result.counts.sum(axis=1), 24 * 2 * 18)
    print(f"\nPASS triad design: 684 triads, 16416 trials, brute-force match "
          f"n=2..6 (enum {enum_time*1e3:.1f} ms, run {run_time:.1f} s)")


def test_metric_identities(synthetic_ast):
    result, _ = synthetic_ast
    cm = analysis.to_percentage(result.counts, result.trials_per_cell,
                                result.actions)
    assert cm.complete
    report = analysis.compute_metrics(cm)
    gap = np.max(np.abs(report.accuracy + report.false_hit - 100.0))
    mean_gap = abs(report.summary["false_hit_mean"]
                   - report.summary["selection_bias_mean"])
    assert gap < 1e-9
    assert mean_gap < 1e-9
    assert abs((85.72 + 14.28) - 100.0) < 1e-9  # reference anchor
    print(f"\nPASS metric identities: row gap {gap:.2e}, grand-mean gap "
          f"{mean_gap:.2e}")


def test_ttest_fidelity():
    rng = np.random.default_rng(5)
    r = analysis.independent_ttest(rng.normal(85, 5, 19), rng.normal(92, 3, 19))
    assert r.df == 36
    x = [4.0, 5.5, 6.1, 7.2]
    same = analysis.independent_ttest(x, x)
    assert same.t == 0.0 and same.p == 1.0
    pairs = [
        ([1, 2, 3, 4, 5], [2, 3, 4, 5, 6]),
        ([1.5, 2.1, 0.3, 4.4], [2.2, 2.2, 2.3, 1.9, 5.0]),
        (list(np.linspace(0, 10, 19)), list(np.linspace(1, 9, 19))),
        ([85.72, 90.1, 80.3, 88.8], [92.67, 91.0, 94.2, 90.5]),
        ([0.01, 0.02, 0.03], [10.0, 20.0, 30.0]),
    ]
    max_dt = max_dp = 0.0
    for x, y in pairs:
        got = analysis.independent_ttest(x, y)
        t_exp, p_exp = oracle_ttest(x, y)
        max_dt = max(max_dt, abs(got.t - t_exp))
        max_dp = max(max_dp, abs(got.p - p_exp))
    assert max_dt < 1e-9
    assert max_dp < 1e-6
    print(f"\nPASS t-test fidelity: df=36, |dt|max {max_dt:.2e}, "
          f"|dp|max {max_dp:.2e}")


def test_sparse_coding():
    # one-hot recovery on nonnegative orthonormal (disjoint-support) atoms
    rng = np.random.default_rng(7)
    k, block = 8, 3
    atoms = np.zeros((k, k * block))
    for i in range(k):
        chunk = np.abs(rng.normal(1, 0.3, block)) + 0.1
        atoms[i, i * block:(i + 1) * block] = chunk / np.linalg.norm(chunk)
    d = Dictionary(atoms=atoms, fingerprint="acc")
    c = encode(make_sub(0.7 * atoms[4]), d, sparsity=1)
    assert c.nnz == 1
    assert c.residual_norm < 1e-9
    assert c.weights[4] == pytest.approx(0.7, abs=1e-9)

    d_rand = Dictionary(atoms=np.abs(rng.normal(1, 0.6, (10, 25))),
                        fingerprint="acc2")
    worst_recon = 0.0
    for seed in range(100):
        x = np.abs(np.random.default_rng(seed).normal(1, 0.5, 25))
        res = []
        for s in range(1, 11):
            cc = encode(make_sub(x), d_rand, sparsity=s)
            res.append(cc.residual_norm)
            recon_gap = abs(np.linalg.norm(x - d_rand.atoms.T @ cc.weights)
                            - cc.residual_norm)
            worst_recon = max(worst_recon, recon_gap)
        assert all(b <= a + 1e-9 for a, b in zip(res[:-1], res[1:]))
    assert worst_recon < 1e-9
    print(f"\nPASS sparse coding: one-hot exact, residual monotone on 100 "
          f"inputs, reconstruction gap {worst_recon:.2e}")


def test_kmeans():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        subs = [make_sub(np.abs(rng.normal(1, 0.8, 12))) for _ in range(40)]
        d = learn_dictionary(subs, k=5, seed=seed)
        hist = np.array(d.objective_history)
        assert np.all(np.diff(hist) <= 1e-9 * np.maximum(hist[:-1], 1.0))

    rng = np.random.default_rng(3)
    blob_a = np.abs(rng.normal(0, 0.05, (10, 8)) + 1.0)
    blob_b = np.abs(rng.normal(0, 0.05, (10, 8)) + 11.0)
    subs = [make_sub(row) for row in np.vstack([blob_a, blob_b])]
    d1 = learn_dictionary(subs, k=2, seed=5)
    d2 = learn_dictionary(subs, k=2, seed=5)
    np.testing.assert_array_equal(d1.atoms, d2.atoms)
    data = np.array([s.profile for s in subs])
    means = np.array([data[:10].mean(axis=0), data[10:].mean(axis=0)])
    order = np.argsort(d1.atoms[:, 0])
    gap = np.max(np.abs(d1.atoms[order] - means[np.argsort(means[:, 0])]))
    assert gap < 1e-9
    print(f"\nPASS k-means: objective monotone on 100 instances, two-blob "
          f"gap {gap:.2e}, deterministic")


def test_kernel_rls():
    from kinprim.classifier import rbf_kernel

    worst_res = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        lam = 10.0 ** rng.uniform(-4, 0)
        pos = [code(v) for v in rng.normal(0, 1, (6, 4))]
        neg = [code(v) for v in rng.normal(1.5, 1, (9, 4))]
        clf = train_binary(pos, neg, sigma=1.2, lam=lam)
        n = 15
        gram = rbf_kernel(clf.training_inputs, clf.training_inputs, 1.2)
        y = np.concatenate([np.ones(6), -np.ones(9)])
        res = np.linalg.norm(
            (gram + lam * n * np.eye(n)) @ clf.dual_coefficients - y)
        worst_res = max(worst_res, res)
        assert np.linalg.norm(clf.dual_coefficients) <= \
            np.linalg.norm(y) / (lam * n) + 1e-9
    assert worst_res < 1e-8

    # 6-sigma-separated blobs: perfect training accuracy
    rng = np.random.default_rng(31)
    sd = 0.1
    a = rng.normal(0.0, sd, (15, 5))
    b = rng.normal(10 * 6 * sd, sd, (15, 5))
    model = train_one_vs_all({"a": [rep("a", a, "ra")],
                              "b": [rep("b", b, "rb")]})
    hits = sum(model.score_code("a", code(v)) > model.score_code("b", code(v))
               for v in a)
    hits += sum(model.score_code("b", code(v)) > model.score_code("a", code(v))
                for v in b)
    assert hits == 30
    print(f"\nPASS kernel RLS: dual residual max {worst_res:.2e}, blob "
          f"training accuracy 30/30, alpha bound holds")


def test_end_to_end_synthetic_ast(synthetic_ast):
    result, elapsed = synthetic_ast
    assert elapsed < 300.0
    cm = analysis.to_percentage(result.counts, result.trials_per_cell,
                                result.actions)
    report = analysis.compute_metrics(cm)
    overall = 100.0 * sum(o.correct for o in result.log) / len(result.log)
    assert overall >= 85.0
    n = cm.n
    for i in range(n):
        row_off = [cm.cells[i, j] for j in range(n) if j != i]
        assert cm.cells[i, i] > max(row_off)
    print(f"\nPASS end-to-end AST: overall accuracy {overall:.2f}% "
          f"(mean diagonal {report.summary['accuracy_mean']:.2f}%), "
          f"diagonal-dominant, {elapsed:.1f} s")


def test_two_thirds_power_law():
    spec = SynthSpec("e", "ellipse", {"a": 0.12, "b": 0.07},
                     speed_law="two_thirds_power", gain=0.3,
                     duration_s=6.0, noise_std=0.0, fps=100.0)
    traj = generate_action(spec)
    p = traj.positions.mean(axis=1)[:, :2]
    dt = 1.0 / traj.fps
    xp, yp = np.gradient(p[:, 0], dt), np.gradient(p[:, 1], dt)
    xpp, ypp = np.gradient(xp, dt), np.gradient(yp, dt)
    v = np.hypot(xp, yp)
    kappa = np.abs(xp * ypp - yp * xpp) / np.maximum(v**3, 1e-12)
    slope = np.polyfit(np.log(kappa), np.log(v), 1)[0]
    assert abs(slope - (-1.0 / 3.0)) < 0.02
    print(f"\nPASS two-thirds power law: log v / log kappa slope "
          f"{slope:.4f} (target -1/3 +/- 0.02)")
