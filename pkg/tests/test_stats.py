from __future__ import annotations

import json
import warnings

import numpy as np
import pytest

from edenfpp import stats as S
from edenfpp.errors import (CapViolationError, ConeViolationError, ConfigError,
                            VariantMismatchError)
from edenfpp.groups import GroupSpec
from edenfpp.lattice import Boundary, DistributionSpec, LatticeWindow


def cfg(L=8, H=4, variant="directed", replicas=40, seed=1, **kw):
    return S.EstimatorConfig(LatticeWindow(GroupSpec.cycle(L), variant, H), seed=seed,
                             replicas=replicas, **kw)


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(replicas=1)
    with pytest.raises(ConfigError):
        cfg(workers=0)


def test_estimate_se_uses_ddof_one():
    e = S.Estimate.from_values([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5
    assert e.se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert e.within(2.5 + 2.9 * e.se) and not e.within(2.5 + 3.1 * e.se)


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_level_zero_is_exactly_one(variant):
    est, audit = S.estimate_level_means(cfg(variant=variant), None, [0, 2])
    assert est[0].mean == 1.0 and est[0].se == 0.0
    assert audit["fraction"] == 1.0
    bounds = S.estimate_level_bounds(cfg(variant=variant), None, 3, [0])
    assert bounds[0].mean == 1.0


def test_level_mean_rejects_levels_above_height():
    with pytest.raises(CapViolationError):
        S.estimate_level_means(cfg(H=3), None, [4])
    with pytest.raises(ConfigError):
        S.estimate_level_bounds(cfg(), None, 2, [3])


def test_strip_window_notes_bias():
    W = LatticeWindow(GroupSpec.integer_lattice(1), "directed", 3, Boundary.strip(6))
    with pytest.warns(RuntimeWarning, match="biased"):
        e = S.estimate_level_mean(S.EstimatorConfig(W, replicas=5), None, 2)
    assert any("biased" in n for n in e.notes)


def test_level_mean_report_passes_on_small_window():
    rep = S.level_mean_report(cfg(replicas=400), [1, 2, 4])
    assert rep.verdict == S.PASS
    assert rep.details["partition_audit"]["exact"] == 400


def test_survival_level_zero_is_certain():
    curve = S.survival_curve(cfg(), None, [0, 1, 4])
    assert curve.fraction[0] == 1.0
    assert np.all(np.diff(curve.fraction) <= 0)


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_level_monotonicity_no_violations(variant):
    res = S.level_monotonicity(cfg(L=6, H=5, variant=variant, replicas=10), 5)
    assert res["violations"] == 0 and res["replicas"] == 10


def test_tail_cone_guard():
    W = LatticeWindow(GroupSpec.integer_lattice(1), "directed", 8, Boundary.strip(10))
    with pytest.raises(ConeViolationError):
        S.tail_divergence(S.EstimatorConfig(W, replicas=4), "max-width", [4, 8])
    with pytest.raises(ConeViolationError):
        S.tail_divergence(cfg(L=8, H=4, replicas=4), "max-width", [2, 4])
    with pytest.raises(VariantMismatchError):
        S.tail_divergence(cfg(L=20, H=4, variant="undirected"), "max-width", [2, 4])
    with pytest.raises(ConfigError):
        S.tail_divergence(cfg(L=20, H=4), "max-width", [4, 2])


def test_tail_reports_share_replicas():
    reps = S.tail_reports(cfg(L=20, H=8, replicas=30), S.TAIL_STATISTICS, [2, 4, 8])
    w = reps["max-width"].details["per_cap"]
    assert all(p["mean"] <= q["mean"] for p, q in zip(w, w[1:]))
    # height moment on a cycle: ball sizes are 2h+1 while h < L/2
    h = reps["height-moment"].details["per_cap"]
    assert h[0]["mean"] >= 1


def test_vertical_ratio_near_constant_weights():
    W = LatticeWindow(GroupSpec.cycle(41), "directed", 20)
    c = S.EstimatorConfig(W, DistributionSpec.uniform(1.0, 1.001), replicas=5)
    rep = S.vertical_constant(c, [5, 20])
    assert 1.0 <= rep.mean <= 1.001
    assert rep.verdict == S.FAIL  # far above the speed-up threshold


def test_vertical_guards():
    with pytest.raises(ConeViolationError):
        S.vertical_constant(cfg(L=10, H=8, replicas=3), [8])
    with pytest.raises(VariantMismatchError):
        S.vertical_constant(cfg(L=40, H=8, variant="undirected", replicas=3), [8])


@pytest.mark.parametrize("variant", ["directed", "undirected"])
def test_mass_transport_balances(variant):
    rep = S.mass_transport_audit(cfg(L=7, H=3, variant=variant, replicas=50), 3)
    assert rep.details["total_mass"] == [7]
    assert rep.verdict == S.PASS
    assert rep.details["expected_sent_by_origin"] == 1.0


def test_zero_transport():
    rep = S.mass_transport_audit(cfg(replicas=3), 2, kind="zero")
    assert rep.details["total_mass"] == [0] and rep.mean == 0.0


def test_shape_small_time_profile_is_zero():
    W = S.shape_window(4.0)
    (est,) = S.shape_profile_single(W, S.WeightField(3), [1e-9])
    assert np.all(est.profile == 0) and est.max_deviation == 0.0


def test_shape_single_time_is_inconclusive():
    W = S.shape_window(5.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = S.shape_profile(S.EstimatorConfig(W, UNDIRECTED_EXP, replicas=2), [5.0])
    assert rep.verdict == S.INCONCLUSIVE


UNDIRECTED_EXP = DistributionSpec.exponential()


def test_shape_cap_and_variant_guards():
    W = S.shape_window(2.0)
    with pytest.raises(CapViolationError):
        S.shape_profile_single(W, S.WeightField(1), [50.0])
    Wd = LatticeWindow(GroupSpec.integer_lattice(1), "directed", 5, Boundary.strip(5))
    with pytest.raises(VariantMismatchError):
        S.shape_profile_single(Wd, S.WeightField(1), [1.0])


def test_report_text_is_deterministic(tmp_path):
    a = S.level_mean_report(cfg(), [1, 2])
    b = S.level_mean_report(cfg(), [1, 2])
    assert a.json_text() == b.json_text() and a.csv_text() == b.csv_text()
    pj, pc = a.write(tmp_path)
    obj = json.loads(pj.read_text())
    assert obj["estimator"] == "level-mean" and obj["threshold_provenance"]
    assert pc.read_text().splitlines()[0] == "replica,statistic,value"


def test_workers_match_serial():
    a = S.level_mean_report(cfg(replicas=20, chunk=3), [2])
    b = S.level_mean_report(cfg(replicas=20, chunk=3, workers=2), [2])
    assert a.csv_text() == b.csv_text()


def test_thresholds_have_provenance():
    for key in ("survival_factor", "tails_replicas", "vertical_ratio_max",
                "shape_dhat_rel_tol", "negative_control_rejection_rate"):
        val, prov = S.threshold(key)
        assert val > 0 and prov
