import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln

from kinprim import analysis
from kinprim.analysis import (ConfusionMatrix, ResponseLog, TrialRecord,
                              analyze_human_logs, compare_reports,
                              compute_metrics, independent_ttest,
                              load_response_log, to_percentage)
from kinprim.ast_harness import ASTConfig, run_experiment
from kinprim.errors import ParameterError, SchemaError, ValidationError
from kinprim.primitives import SparseCode


def code(*vals):
    w = np.asarray(vals, dtype=float)
    return SparseCode(weights=w, nnz=int(np.count_nonzero(w)),
                      residual_norm=0.0)


def t_density(x, df):
    logc = gammaln((df + 1) / 2) - gammaln(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(logc) * (1 + x * x / df) ** (-(df + 1) / 2)


def oracle_ttest(x, y):
    """Direct pooled-t formula with a numerically integrated t-density p-value."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    nx, ny = len(x), len(y)
    df = nx + ny - 2
    sp2 = ((nx - 1) * x.var(ddof=1) + (ny - 1) * y.var(ddof=1)) / df
    t = (x.mean() - y.mean()) / math.sqrt(sp2 * (1 / nx + 1 / ny))
    tail, _ = quad(t_density, abs(t), np.inf, args=(df,))
    return t, 2 * tail


class TestToPercentage:
    def test_perfect_counts_identity_pattern(self):
        n = 4
        reps = 24
        counts = np.diag([reps * 2 * (n - 1)] * n)
        trials = np.full((n, n), 2 * reps)
        np.fill_diagonal(trials, reps * 2 * (n - 1))
        cm = to_percentage(counts, trials, [f"a{i}" for i in range(n)])
        assert cm.complete
        np.testing.assert_allclose(np.diag(cm.cells), 100.0)
        off = cm.cells - np.diag(np.diag(cm.cells))
        np.testing.assert_allclose(off, 0.0)

    def test_half_selected_is_fifty(self):
        counts = np.array([[20, 12], [0, 24]])
        trials = np.array([[24, 24], [24, 24]])
        cm = to_percentage(counts, trials, ["a", "b"])
        assert cm.cells[0, 1] == pytest.approx(50.0)

    def test_zero_presented_marks_incomplete(self):
        counts = np.array([[1, 0], [0, 1]])
        trials = np.array([[2, 0], [2, 2]])
        cm = to_percentage(counts, trials, ["a", "b"])
        assert not cm.complete
        assert np.isnan(cm.cells[0, 1])

    def test_counts_exceeding_trials_rejected(self):
        with pytest.raises(ParameterError):
            to_percentage(np.array([[3]]), np.array([[2]]), ["a"])

    def test_double_aggregation_oracle(self):
        # full raw log from a seeded harness run aggregated two ways
        actions = [f"a{i}" for i in range(5)]
        rng = np.random.default_rng(3)
        table = {(a, i): rng.normal() for a in actions for i in range(3)}

        class Stub:
            def score_code(self, action, c):
                return table[(action, int(np.argmax(c.weights)) % 3)]

        pool = {a: [code(*np.roll([1, 0, 0, 0, 0], i)) for i in range(3)]
                for a in actions}
        result = run_experiment(Stub(), pool, actions,
                                ASTConfig(repetitions=4, seed=9))
        # aggregate the trial log by cell, independently of result.counts
        idx = {a: i for i, a in enumerate(actions)}
        counts2 = np.zeros((5, 5), dtype=int)
        for out in result.log:
            counts2[idx[out.triad.target], idx[out.winner]] += 1
        np.testing.assert_array_equal(result.counts, counts2)
        cm1 = to_percentage(result.counts, result.trials_per_cell, actions)
        cm2 = to_percentage(counts2, result.trials_per_cell, actions)
        np.testing.assert_array_equal(cm1.cells, cm2.cells)


class TestComputeMetrics:
    def test_identity_matrix_metrics(self):
        n = 3
        cells = np.diag([100.0] * n)
        cm = ConfusionMatrix([f"a{i}" for i in range(n)], cells,
                             np.full((n, n), 10), complete=True)
        rep = compute_metrics(cm)
        np.testing.assert_allclose(rep.accuracy, 100.0)
        np.testing.assert_allclose(rep.false_hit, 0.0)
        np.testing.assert_allclose(rep.selection_bias, 0.0)

    def test_row_mean_excluding_diagonal(self):
        cells = np.array([[90.0, 5.0, 15.0],
                          [10.0, 90.0, 10.0],
                          [10.0, 10.0, 90.0]])
        cm = ConfusionMatrix(["a", "b", "c"], cells, np.full((3, 3), 10),
                             complete=False)
        rep = compute_metrics(cm)
        assert rep.false_hit[0] == pytest.approx(10.0)  # mean of {5, 15}

    def test_completeness_identities(self):
        # complete model-style matrix: off-diagonal rows sum to the miss rate
        rng = np.random.default_rng(5)
        n = 6
        acc = rng.uniform(60, 95, n)
        cells = np.zeros((n, n))
        for i in range(n):
            cells[i, i] = acc[i]
            shares = rng.dirichlet(np.ones(n - 1)) * (100 - acc[i]) * (n - 1)
            cells[i, [j for j in range(n) if j != i]] = shares / (n - 1) * (n - 1)
        # normalize so the row off-diagonal mean equals 100 - acc exactly
        for i in range(n):
            off = [j for j in range(n) if j != i]
            row = cells[i, off]
            cells[i, off] = row * (100 - acc[i]) / row.mean()
        cm = ConfusionMatrix([f"a{i}" for i in range(n)],
                             np.clip(cells, 0, 100), np.full((n, n), 48),
                             complete=True)
        rep = compute_metrics(cm)
        np.testing.assert_allclose(rep.accuracy + rep.false_hit, 100.0,
                                   atol=1e-9)
        assert abs(rep.summary["false_hit_mean"]
                   - rep.summary["selection_bias_mean"]) < 1e-9

    def test_reported_anchor_identity(self):
        # 85.72 + 14.28 = 100 within 1e-9
        assert abs((85.72 + 14.28) - 100.0) < 1e-9

    def test_complete_flag_violation_detected(self):
        cells = np.array([[90.0, 20.0], [20.0, 90.0]])  # 90 + 20 != 100
        cm = ConfusionMatrix(["a", "b"], cells, np.full((2, 2), 10),
                             complete=True)
        with pytest.raises(ValidationError):
            compute_metrics(cm)

    def test_bounded_outputs(self):
        rng = np.random.default_rng(7)
        cells = rng.uniform(0, 100, (5, 5))
        cm = ConfusionMatrix([f"a{i}" for i in range(5)], cells,
                             np.full((5, 5), 10), complete=False)
        rep = compute_metrics(cm)
        for v in (rep.accuracy, rep.false_hit, rep.selection_bias):
            assert np.all(v >= 0) and np.all(v <= 100)

    def test_csv_export(self, tmp_path):
        cells = np.diag([100.0, 100.0])
        cm = ConfusionMatrix(["a", "b"], cells, np.full((2, 2), 10),
                             complete=True)
        cm.to_csv(tmp_path / "cm.csv")
        lines = (tmp_path / "cm.csv").read_text().strip().splitlines()
        assert lines[0] == "target,a,b"
        assert lines[1].startswith("a,100.0,")


class TestIndependentTTest:
    def test_identical_samples(self):
        x = [1.0, 2.0, 3.0, 4.0]
        r = independent_ttest(x, x)
        assert r.t == 0.0
        assert r.p == 1.0

    def test_df_for_19_vs_19(self):
        rng = np.random.default_rng(11)
        r = independent_ttest(rng.normal(0, 1, 19), rng.normal(0, 1, 19))
        assert r.df == 36

    def test_against_integration_oracle(self):
        pairs = [
            ([1, 2, 3, 4, 5], [2, 3, 4, 5, 6]),
            ([1.5, 2.1, 0.3, 4.4], [2.2, 2.2, 2.3, 1.9, 5.0]),
            (list(np.linspace(0, 10, 19)), list(np.linspace(1, 9, 19))),
            ([85.72, 90.1, 80.3, 88.8], [92.67, 91.0, 94.2, 90.5]),
            ([0.01, 0.02, 0.03], [10.0, 20.0, 30.0]),
        ]
        for x, y in pairs:
            r = independent_ttest(x, y)
            t_exp, p_exp = oracle_ttest(x, y)
            assert abs(r.t - t_exp) < 1e-9
            assert abs(r.p - p_exp) < 1e-6

    def test_symmetry(self):
        rng = np.random.default_rng(13)
        x, y = rng.normal(0, 1, 8), rng.normal(0.5, 1, 9)
        r1, r2 = independent_ttest(x, y), independent_ttest(y, x)
        assert r1.t == -r2.t
        assert r1.p == r2.p

    def test_location_invariance(self):
        rng = np.random.default_rng(17)
        x, y = rng.normal(0, 1, 7), rng.normal(1, 2, 7)
        r1 = independent_ttest(x, y)
        r2 = independent_ttest(x + 5.0, y + 5.0)
        assert abs(r1.t - r2.t) < 1e-12
        assert abs(r1.p - r2.p) < 1e-12

    def test_zero_variance_cases(self):
        r = independent_ttest([2.0, 2.0], [2.0, 2.0])
        assert (r.t, r.p) == (0.0, 1.0)
        r = independent_ttest([3.0, 3.0], [1.0, 1.0])
        assert math.isinf(r.t) and r.t > 0
        assert r.p == 0.0

    def test_too_small_samples(self):
        with pytest.raises(ParameterError):
            independent_ttest([1.0], [1.0, 2.0])


def make_log(pid="p1", task="AST", block_order="UP_INV", trials=None):
    return ResponseLog(participant_id=pid, task=task, block_order=block_order,
                       trials=tuple(trials or []))


def trial(idx, target="stir", options=("stir", "cut"), response="stir",
          rt=1000.0, orientation="UP"):
    return TrialRecord(trial_idx=idx, orientation=orientation, target=target,
                       options=tuple(options), response=response, rt_ms=rt)


class TestHumanLogs:
    def test_all_correct_1000ms(self):
        log = make_log(trials=[trial(i) for i in range(6)])
        bundle = analyze_human_logs([log])
        p = bundle["participants"]["p1"]
        assert p["accuracy_pct"] == pytest.approx(100.0)
        assert p["rt_mean_s"] == pytest.approx(1.0)

    def test_timeout_excluded_from_denominator(self):
        trials = [trial(0), trial(1), trial(2),
                  trial(3, response=None, rt=None)]
        bundle = analyze_human_logs([make_log(trials=trials)])
        p = bundle["participants"]["p1"]
        assert p["n_responded"] == 3
        assert p["accuracy_pct"] == pytest.approx(100.0)

    def test_mixed_tasks_rejected(self):
        a = make_log(pid="p1", task="AST", trials=[trial(0)])
        b = make_log(pid="p2", task="AIT",
                     trials=[trial(0, options=("stir", "cut", "mix", "eat",
                                               "pour"))])
        with pytest.raises(ParameterError):
            analyze_human_logs([a, b])

    def test_rt_window_enforced(self):
        with pytest.raises(ValidationError):
            make_log(trials=[trial(0, rt=4500.0)])  # AST window is 4 s

    def test_construct_then_recover(self):
        # 12 participants with known per-condition accuracy and RT
        logs = []
        rt_by_orient = {"UP": 1200.0, "INV": 1800.0}
        for p in range(12):
            trials = []
            idx = 0
            for orient in ("UP", "INV"):
                for k in range(10):
                    correct = k < 8  # 80% accuracy in both conditions
                    trials.append(trial(
                        idx, orientation=orient,
                        response="stir" if correct else "cut",
                        rt=rt_by_orient[orient]))
                    idx += 1
            logs.append(make_log(
                pid=f"p{p}",
                block_order="UP_INV" if p < 6 else "INV_UP",
                trials=trials))
        bundle = analyze_human_logs(logs)
        for orient in ("UP", "INV"):
            agg = bundle["by_orientation"][orient]
            assert agg["accuracy_mean"] == pytest.approx(80.0, abs=1e-9)
            assert agg["rt_mean_s"] == pytest.approx(
                rt_by_orient[orient] / 1000.0, abs=1e-9)
        for order in ("UP_INV", "INV_UP"):
            assert bundle["by_block_order"][order]["n_participants"] == 6

    def test_human_confusion_matrix_incomplete_on_timeouts(self):
        trials = [trial(0), trial(1, response=None, rt=None),
                  trial(2, target="cut", options=("cut", "stir"),
                        response="stir")]
        bundle = analyze_human_logs([make_log(trials=trials)])
        cm = ConfusionMatrix.from_json(bundle["confusion_matrix"])
        assert not cm.complete
        i, j = cm.actions.index("cut"), cm.actions.index("stir")
        assert cm.cells[i, j] == pytest.approx(100.0)  # cut always missed

    def test_ait_selection_bias(self):
        opts = ("stir", "cut", "mix", "eat", "pour")
        trials = [
            trial(0, target="stir", options=opts, response="cut", rt=2000.0),
            trial(1, target="stir", options=opts, response="stir", rt=2000.0),
        ]
        bundle = analyze_human_logs([make_log(task="AIT", trials=trials)])
        # "cut" offered as a foil twice, chosen once
        assert bundle["selection_bias_pct"]["cut"] == pytest.approx(50.0)
        assert bundle["selection_bias_pct"]["mix"] == pytest.approx(0.0)

    def test_log_json_round_trip(self, tmp_path):
        doc = {
            "participant_id": "p9", "task": "AIT", "block_order": "INV_UP",
            "trials": [{"trial_idx": 0, "orientation": "INV",
                        "target": "stir",
                        "options": ["stir", "cut", "mix", "eat", "pour"],
                        "response": "mix", "rt_ms": 4200.0}],
        }
        path = tmp_path / "log.json"
        path.write_text(json.dumps(doc))
        log = load_response_log(path)
        assert log.participant_id == "p9"
        assert log.trials[0].response == "mix"

    def test_schema_errors(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_response_log(path)
        path.write_text(json.dumps({"participant_id": "x", "task": "AST",
                                    "trials": []}))
        with pytest.raises(SchemaError, match="block_order"):
            load_response_log(path)


class TestCompareReports:
    def test_three_ttest_rows(self):
        rng = np.random.default_rng(19)
        reports = []
        for seed in (1, 2):
            cells = np.clip(np.diag([85.0] * 19)
                            + np.random.default_rng(seed).uniform(0, 10, (19, 19)),
                            0, 100)
            cm = ConfusionMatrix([f"a{i}" for i in range(19)], cells,
                                 np.full((19, 19), 48), complete=False)
            reports.append(compute_metrics(cm))
        comparison = compare_reports(reports[0], reports[1])
        assert set(comparison) == {"accuracy", "false_hit", "selection_bias"}
        for r in comparison.values():
            assert r["df"] == 36
