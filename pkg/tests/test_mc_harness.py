import json
import math

import numpy as np
import pytest

from snlp.asymptotics import EnvelopeFunction, Side
from snlp.errors import ValidationError
from snlp.mc_harness import (
    Experiment,
    ExperimentConfig,
    ReportVerdict,
    dyadic_grid,
    load_config,
    phi_prime_zero,
    replica_rng,
    replica_sizes,
    run_experiment,
)
from snlp.path_sim import AdaptiveStep


def _cfg(spec, experiment, **kw):
    return ExperimentConfig(spec, Experiment(experiment), **kw)


def test_config_roundtrip(stable15):
    cfg = _cfg(stable15, "Envelope", n_paths=10, seed=3, grid=(1e-3, 1e-2), side=Side.AT_ZERO,
               envelope_f=EnvelopeFunction.power_log(1.0, 2.0), band=(0.5, 2.0),
               step=AdaptiveStep(rho=0.05))
    obj = json.loads(json.dumps(cfg.to_json()))
    back = ExperimentConfig.from_json(obj)
    assert back.to_json() == cfg.to_json()
    assert "workers" not in obj


@pytest.mark.parametrize("patch, field", [
    ({"bogus": 1}, "bogus"),
    ({"experiment": "Nope"}, "experiment"),
    ({"side": "Left"}, "side"),
    ({"n_paths": 1.5}, "n_paths"),
    ({"n_paths": 0}, "n_paths"),
    ({"seed": -1}, "seed"),
    ({"step": {"rho": 0.1, "eta": 1}}, "step"),
    ({"band": [2, 1]}, "band"),
])
def test_config_validation(bm, patch, field):
    obj = {"spec": bm.to_json(), "experiment": "ExitProb"}
    obj.update(patch)
    with pytest.raises(ValidationError, match=field):
        ExperimentConfig.from_json(obj)


def test_config_missing_spec():
    with pytest.raises(ValidationError, match="spec"):
        ExperimentConfig.from_json({"experiment": "ExitProb"})


def test_load_config(tmp_path, bm):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"spec": bm.to_json(), "experiment": "MinLaw", "x": 1, "y": 0.5}))
    assert load_config(p).experiment is Experiment.MIN_LAW


def test_replicas():
    assert replica_sizes(5, 2) == [2, 2, 1]
    assert replica_sizes(4, 2) == [2, 2]
    a = replica_rng(7, 0).standard_normal(3)
    assert np.array_equal(a, replica_rng(7, 0).standard_normal(3))
    assert not np.array_equal(a, replica_rng(7, 1).standard_normal(3))


def test_dyadic_grid():
    g = dyadic_grid(1e-6, 1e-2)
    assert g[0] == 2.0 ** -19 and g[-1] == 2.0 ** -7
    assert all(b == 2 * a for a, b in zip(g, g[1:]))


def test_exit_prob_small(bm):
    rep = run_experiment(_cfg(bm, "ExitProb", n_paths=2000, dt=1e-3, x=1.0, y=1.0, seed=1, chunk_size=500))
    assert rep.theory["exit_prob"]["value"] == pytest.approx(0.5)
    assert rep.verdict is ReportVerdict.PASS
    assert rep.per_path["exit_up"].size == 2000
    assert set(rep.to_json()) == {"experiment", "estimates", "std_error", "ci95", "theory", "verdict",
                                  "checks", "metadata"}


def test_exit_prob_needs_dt(bm):
    with pytest.raises(ValidationError):
        run_experiment(_cfg(bm, "ExitProb", x=1.0, y=1.0))


def test_workers_do_not_change_results(bm):
    base = dict(n_paths=600, dt=1e-3, x=0.5, y=0.5, seed=9, chunk_size=200)
    one = run_experiment(_cfg(bm, "ExitProb", workers=1, **base))
    two = run_experiment(_cfg(bm, "ExitProb", workers=2, **base))
    assert one.to_json_text() == two.to_json_text()


def test_min_law_small(stable15):
    rep = run_experiment(_cfg(stable15, "MinLaw", n_paths=300, x=1.0, y=0.5, seed=2, stop_level=10.0))
    assert 0 <= rep.estimates["min_law"] <= 1
    assert rep.estimates["censored_fraction"] < 0.05
    with pytest.raises(ValidationError):
        run_experiment(_cfg(stable15, "MinLaw", x=1.0, y=2.0))


def test_subordinator_moments_small(bm_drift):
    rep = run_experiment(_cfg(bm_drift, "SubordinatorMoments", n_paths=20000, seed=4))
    assert rep.verdict is ReportVerdict.PASS
    assert rep.checks["mean_within_3se"]


def test_subordinator_moments_skips_infinite_mean(bm):
    rep = run_experiment(_cfg(bm, "SubordinatorMoments", n_paths=5000, seed=4))
    assert "mean_within_3se" not in rep.checks


def test_phi_prime_zero(bm_drift, bv_cp):
    assert phi_prime_zero(bm_drift) == pytest.approx(1.0, rel=1e-6)
    assert phi_prime_zero(bv_cp) == pytest.approx(1 / 1.5, rel=1e-6)


def test_lil_smoke_structure(bm):
    rep = run_experiment(_cfg(bm, "LilSup", n_paths=20, seed=5, grid=(1e-4, 1e-3), band=(0.1, 10.0)))
    assert rep.verdict is ReportVerdict.INDETERMINATE
    for key in ("median_sup_stat", "median_future_inf_stat", "median_reflected_stat"):
        assert math.isfinite(rep.estimates[key])
    assert rep.checks["future_inf_le_sup_fraction"] == 1.0
    assert rep.checks["reflected_le_sup_fraction"] == 1.0


def test_lil_grid_domain(bm):
    with pytest.raises(ValidationError):
        run_experiment(_cfg(bm, "LilSup", n_paths=5, grid=(0.5,)))


def test_chung_smoke(bm):
    rep = run_experiment(_cfg(bm, "ChungPassage", n_paths=500, seed=6, side=Side.AT_INFINITY, n_conditioned=20,
                              grid=(16.0, 32.0)))
    assert rep.verdict is ReportVerdict.INDETERMINATE
    assert rep.theory["median_last_passage_stat"]["value"] == pytest.approx(0.25)
    assert rep.checks["first_le_last_fraction"] == 1.0


def test_envelope_bounded_variation(bv_cp):
    rep = run_experiment(_cfg(bv_cp, "Envelope", n_paths=200, seed=7))
    assert rep.verdict is ReportVerdict.PASS and rep.checks["relative_error"] <= 0.1
    assert rep.theory["J_over_t"]["value"] == pytest.approx(2.0)


def test_envelope_with_function(stable15):
    f = EnvelopeFunction.power_log(1.0, 3.0)
    rep = run_experiment(_cfg(stable15, "Envelope", n_paths=50, seed=8, envelope_f=f, grid=(1e-4, 1e-3)))
    assert rep.theory["integral_test"]["value"] == "Converge"


def test_per_path_csv(bm):
    rep = run_experiment(_cfg(bm, "ExitProb", n_paths=4, dt=1e-2, x=1.0, y=1.0, chunk_size=2))
    lines = rep.per_path_csv().strip().split("\n")
    assert lines[0] == "replica,statistic,value"
    assert lines[1].startswith("0,exit_up,") and lines[3].startswith("1,exit_up,")


def test_meta_sidecar(bm):
    rep = run_experiment(_cfg(bm, "ExitProb", n_paths=4, dt=1e-2, x=1.0, y=1.0))
    meta = json.loads(rep.meta_json_text())
    assert meta["runtime_seconds"] >= 0 and "timestamp" in meta
    assert "runtime" not in rep.to_json_text()
