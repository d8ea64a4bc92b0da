import json
import math

import numpy as np
import pytest

from ellipslice.circle import ArcSet
from ellipslice.errors import ConfigError
from ellipslice.ess import TargetModel
from ellipslice.gaussian import SpectralCovariance
from ellipslice.likelihoods import Constant
from ellipslice.verify import (
    SUITE, Rule, VerificationReport, conjugate_model, mixture_model, run_suite, run_test, summarize,
    test_alg_equivalence as alg_equivalence,
    test_anchor_conditional as anchor_conditional,
    test_h_psd as h_psd,
    test_h_reversibility as h_reversibility,
    test_nontermination_probability as nontermination,
    test_q_detailed_balance as detailed_balance,
    test_q_psd as q_psd,
    test_q_pushforward as pushforward,
    test_rotation_invariance as rotation,
    test_termination_tail as termination_tail,
)

FULL = ((0.0, 0.0),)
TWO_ARCS = ((0.0, math.pi / 2), (math.pi, 1.5 * math.pi))


class TestRule:
    @pytest.mark.parametrize("kind,estimates,ses,expected", [
        ("abs_z", [0.3, -0.3], [0.1, 0.1], "pass"),
        ("abs_z", [0.5], [0.1], "fail"),
        ("lower_z", [10.0, -0.2], [1.0, 0.1], "pass"),
        ("lower_z", [-0.5], [0.1], "fail"),
        ("abs_lt", [1e-13], [0.0], "pass"),
        ("abs_le", [0.006], [0.0], "pass"),
        ("greater", [0.01], [0.0], "fail"),
        ("at_most", [0.0, -1.0], [0.0, 0.0], "pass"),
        ("inconclusive", [1e9], [0.0], "inconclusive"),
    ])
    def test_decisions(self, kind, estimates, ses, expected):
        threshold = {"abs_z": 3, "lower_z": 3, "abs_lt": 1e-12, "abs_le": 0.006, "greater": 0.01}.get(kind, 0.0)
        assert Rule(kind, threshold).decide(estimates, ses) == expected

    def test_per_estimate_thresholds(self):
        rule = Rule("abs_le", [0.1, 0.0])
        assert rule.decide([0.05, 0.0], [0, 0]) == "pass"
        assert rule.decide([0.05, 1.0], [0, 0]) == "fail"

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Rule("sometimes")


class TestReport:
    def test_json_has_no_timing_by_default(self):
        r = termination_tail(n=2000, seed=3)
        doc = json.loads(r.to_json())
        assert "runtime_ms" not in doc
        assert "runtime_ms" in json.loads(r.to_json(timing=True))
        assert set(doc) >= {"test_name", "claim", "estimates", "std_errors", "decision", "n_samples", "seed", "rule"}

    def test_same_seed_same_document(self):
        a = run_test("q_detailed_balance", seed=5, n=20000)
        b = run_test("q_detailed_balance", seed=5, n=20000)
        assert a.to_json() == b.to_json()
        c = run_test("q_detailed_balance", seed=6, n=20000)
        assert a.to_json() != c.to_json()

    def test_line(self):
        r = VerificationReport("x", "claim", [0.0], [1.0], "pass", 10, 1, 5, "rule")
        assert r.line().startswith("PASS") and r.passed and not r.failed

    def test_numpy_values_serialize(self):
        r = VerificationReport("x", "c", [0.0], [1.0], "fail", 1, 0, 0, "r",
                               details={"a": np.int64(3), "b": np.array([1.5]), "c": np.bool_(True)})
        assert json.loads(r.to_json())["details"] == {"a": 3, "b": [1.5], "c": True}


class TestShrinkageChecks:
    def test_full_circle_symmetric_sets(self):
        r = detailed_balance(FULL, ((0.5, 1.5),), ((0.5, 1.5),), n=20000, seed=1)
        # both sides estimate the same probability from independent samples
        assert r.passed and r.details["cap_hits"] == 0

    def test_F_outside_S(self):
        with pytest.raises(ConfigError, match="F is not contained"):
            detailed_balance(TWO_ARCS, ((2.0, 2.5),), ((0.1, 0.2),), n=10)

    def test_empty_S(self):
        with pytest.raises(ConfigError):
            q_psd(ArcSet.empty(), n=10)

    def test_fault_control_fails_small_n(self):
        S, F, G = TWO_ARCS, ((0.0, math.pi / 4),), ((math.pi, 1.25 * math.pi),)
        assert detailed_balance(S, F, G, n=10**5, seed=2).passed
        assert detailed_balance(S, F, G, n=10**5, seed=2, fault="linear_split").failed

    def test_psd_small(self):
        r = q_psd(TWO_ARCS, n=50000, seed=4)
        assert r.passed and len(r.estimates) == 8

    def test_psd_constant_is_exactly_one(self):
        r = q_psd(TWO_ARCS, n=20000, seed=4)
        assert r.estimates[r.labels.index("constant")] == 1.0

    def test_psd_full_circle(self):
        r = q_psd(FULL, n=50000, seed=5)
        assert r.passed and r.details["cap_hits"] == 0

    def test_pushforward_symmetric_S_is_its_own_reflection(self):
        # S symmetric about alpha = 1 and theta = 2 alpha: the reflected problem is the original one
        S = ((0.5, 1.5), (2.5, 5.8))
        r = pushforward(S, theta=2.0, alpha=1.0, B=((0.6, 0.9),), n=50000, seed=3)
        assert r.passed
        assert r.details["S"]["original"] == r.details["S"]["reflected"] == 1.0

    def test_pushforward_alpha_outside_S(self):
        with pytest.raises(ConfigError):
            pushforward(((0.3, 1.4),), theta=1.0, alpha=2.0, B=((0.5, 0.6),), n=10)

    def test_pushforward_small(self):
        r = pushforward(((0.3, 1.4), (2.0, 4.5)), theta=1.7, alpha=1.0, B=((2.5, 3.5),), n=50000, seed=8)
        assert r.passed

    def test_anchor_conditional_single_step(self):
        assert anchor_conditional(TWO_ARCS, n_steps=1, n=50000, seed=2).passed

    @pytest.mark.parametrize("S", [FULL, ((1.0, 2.5),)], ids=["full", "single_arc"])
    def test_anchor_conditional_other_sets(self, S):
        r = anchor_conditional(S, n_steps=5, n=10**5, seed=7)
        assert r.passed and r.details["bins"] == 16

    def test_termination_tail_small(self):
        r = termination_tail(n=10**4, seed=1)
        assert r.passed and len(r.estimates) == 50
        # the empirical tail starts at P(tau > 1) = 1 - 2 eps / 2pi
        assert r.details["empirical_tail"][0] == pytest.approx(1 - 0.6 / (2 * math.pi), abs=0.02)


class TestGaussianChecks:
    def test_zero_rotation(self):
        r = rotation(SpectralCovariance([1.0, 2.0]), 0.0, n=5000, seed=1)
        assert r.passed

    def test_uniform_cube_control(self):
        cov = SpectralCovariance([1.0, 1.0])
        assert rotation(cov, math.pi / 3, n=20000, seed=1, fault="uniform_cube").failed

    def test_uniform_cube_control_quarter_turn(self):
        assert rotation(SpectralCovariance([1.0, 1.0]), math.pi / 4, n=20000, seed=2, fault="uniform_cube").failed

    def test_unknown_fault(self):
        with pytest.raises(ConfigError):
            rotation(SpectralCovariance([1.0]), 1.0, n=10, fault="other")


class TestEssChecks:
    def test_nontermination_large_eps(self):
        r = nontermination(d=2, eps=1e3, n=5000, seed=1)
        assert r.details["target"] < 1e-3 and r.details["cap_hit_frequency"] < 0.005
        assert r.passed and r.estimates[2] == 0

    def test_nontermination_needs_two_dims(self):
        with pytest.raises(ConfigError):
            nontermination(d=1, n=10)

    def test_reversibility_small(self):
        assert h_reversibility(conjugate_model(1), n=20000, seed=3).passed

    def test_reversibility_without_exact_sampler(self):
        r = h_reversibility(mixture_model(), n=2000, seed=3, warm_start_steps=5)
        assert r.decision == "inconclusive"

    def test_psd_small(self):
        assert h_psd(conjugate_model(1), n=20000, seed=3).passed

    def test_equivalence_constant_is_exact(self):
        model = TargetModel(Constant(), SpectralCovariance([1.0, 1.0]), name="constant")
        r = alg_equivalence(model, n_steps=200, seed=1)
        assert r.estimates == [0.0, 0.0] and r.details["mean_shrink_iterations"] == 1.0

    def test_equivalence_small(self):
        r = alg_equivalence(mixture_model(), n_steps=300, seed=2)
        assert r.passed and r.estimates[1] == 0
        bad = alg_equivalence(mixture_model(), n_steps=300, seed=2, fault="linear_split")
        assert bad.failed


class TestSuite:
    def test_unknown_test(self):
        with pytest.raises(ConfigError, match="unknown test"):
            run_test("nope")
        with pytest.raises(ConfigError):
            run_suite(["q_psd", "nope"])

    def test_empty_list(self):
        with pytest.raises(ConfigError, match="empty"):
            run_suite([])

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match="no parameter"):
            run_test("q_psd", bogus=1)
        with pytest.raises(ConfigError):
            run_test("q_psd", fault="x")

    def test_threads_do_not_change_results(self):
        names = ["termination_tail", "q_psd", "anchor_conditional"]
        params = {"q_psd": {"n": 20000}, "anchor_conditional": {"n": 20000}, "termination_tail": {"n": 5000}}
        seq = run_suite(names, seed=9, params=params)
        par = run_suite(names, seed=9, params=params, threads=3)
        assert [r.to_json() for r in seq] == [r.to_json() for r in par]
        assert [r.test_name for r in par] == names

    def test_fault_injection_only_touches_controls(self):
        r = run_test("q_psd", seed=1, fault_injection=True, n=5000)
        assert r.details.get("fault") is None
        r = run_test("rotation_invariance", seed=1, fault_injection=True, n=20000)
        assert r.failed and r.details["fault"] == "uniform_cube"

    def test_every_entry_is_named(self):
        assert len(SUITE) == 15

    def test_summarize(self):
        mk = lambda name, d: VerificationReport(name, "", [], [], d, 0, 0, 0, "")
        s = summarize([mk("a", "pass"), mk("b", "inconclusive")])
        assert s["overall"] == "pass" and s["counts"] == {"pass": 1, "fail": 0, "inconclusive": 1}
        assert summarize([mk("a", "pass"), mk("b", "fail")])["overall"] == "fail"
