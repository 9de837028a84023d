import json
import math

import numpy as np
import pytest

import snlp
from snlp.errors import BracketError, DomainError, ValidationError
from snlp.levy_model import (
    AtomicJumps,
    ExponentialJumps,
    Hypothesis,
    NoJumps,
    ProbeVerdict,
    ProcessSpec,
    StableJumps,
    SubordinatorSpec,
    TemperedStableJumps,
    esscher,
    jumps_from_json,
    killing_and_drift,
    load_spec,
    phi,
    phi_mp,
    probe_hypothesis,
    subordinator_of,
)


# --- validation ----------------------------------------------------------

@pytest.mark.parametrize("obj, field", [
    ({"a": 0, "sigma": -1}, "sigma"),
    ({"a": "x"}, "a"),
    ({"a": 0, "sigma": 1, "extra": 1}, "extra"),
    ({"sigma": 1}, "a"),
    ({"a": 0, "jumps": {"family": "stable", "params": {"alpha": 2.5}}}, "alpha"),
    ({"a": 0, "jumps": {"family": "stable", "params": {}}}, "alpha"),
    ({"a": 0, "jumps": {"family": "compound_poisson", "params": {"rate": -1, "mean": 1}}}, "rate"),
    ({"a": 0, "jumps": {"family": "tempered_stable", "params": {"alpha": 1.5}}}, "theta"),
    ({"a": 0, "jumps": {"family": "levy", "params": {}}}, "family"),
    ({"a": 0, "jumps": {"family": "none", "params": {"x": 1}}}, "x"),
])
def test_from_json_rejects_bad_fields(obj, field):
    with pytest.raises(ValidationError, match=field):
        ProcessSpec.from_json(obj)


def test_zero_process_rejected():
    with pytest.raises(ValidationError):
        ProcessSpec(0.0, 0.0, NoJumps())


def test_bounded_variation_needs_positive_drift():
    # b = a + rate * mean = -1 + 0.5 < 0 would be a subordinator-like process
    with pytest.raises(ValidationError):
        ProcessSpec(-1.0, 0.0, ExponentialJumps(1.0, 0.5))


def test_atomic_jumps_validation():
    with pytest.raises(ValidationError):
        AtomicJumps([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        AtomicJumps([-1.0], [1.0])


def test_json_roundtrip(tmp_path, stable15, tempered, bv_cp, bm):
    for spec in (stable15, tempered, bv_cp, bm, ProcessSpec(1.0, 0.0, AtomicJumps([0.5, 1.0], [1.0, 2.0]))):
        obj = json.loads(json.dumps(spec.to_json()))
        back = ProcessSpec.from_json(obj)
        lam = np.array([0.3, 1.0, 4.0])
        assert np.allclose(back.psi(lam), spec.psi(lam), rtol=1e-15)
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(bm.to_json()))
    assert load_spec(p).psi(3.0) == pytest.approx(9.0, rel=1e-14)


def test_jumps_from_json_families():
    assert isinstance(jumps_from_json({"family": "none", "params": {}}), NoJumps)
    assert isinstance(jumps_from_json({"family": "stable", "params": {"alpha": 1.5}}), StableJumps)
    cp = jumps_from_json({"family": "compound_poisson", "params": {"sizes": [1.0], "rates": [2.0]}})
    assert isinstance(cp, AtomicJumps)


# --- exponent ------------------------------------------------------------

def test_psi_closed_forms(bm, bm_drift, stable15):
    lam = np.array([0.0, 0.5, 1.0, 3.0])
    assert np.allclose(bm.psi(lam), lam ** 2, rtol=1e-14, atol=0)
    assert np.allclose(bm_drift.psi(lam), lam + lam ** 2, rtol=1e-14, atol=0)
    assert np.allclose(stable15.psi(lam), lam ** 1.5, rtol=1e-13, atol=1e-15)


def test_psi_exponential_jumps_closed_form(bv_cp):
    # psi = b lam - r mu lam / (1 + mu lam) with b = 2, r = 1, mu = 1/2
    lam = np.array([0.1, 1.0, 7.0])
    assert np.allclose(bv_cp.psi(lam), 2 * lam - 0.5 * lam / (1 + 0.5 * lam), rtol=1e-14)


def test_psi_tempered_matches_quadrature(tempered):
    # frozen from direct mpmath quadrature of the Levy-Khintchine integral
    assert tempered.psi(0.5) == pytest.approx(0.29942640084237441, rel=1e-13)
    assert tempered.psi(2.0) == pytest.approx(2.0453887977265952, rel=1e-13)


def test_psi_atomic_closed_form():
    spec = ProcessSpec(1.0, 0.5, AtomicJumps([0.5, 1.0], [1.0, 2.0]))
    lam = 1.3
    # jumps of size >= 1 sit outside the compensated unit ball
    want = lam + 0.125 * lam ** 2 + (math.exp(-0.5 * lam) - 1 + 0.5 * lam) + 2 * (math.exp(-lam) - 1)
    assert spec.psi(lam) == pytest.approx(want, rel=1e-14)


def test_dpsi_matches_finite_difference(tempered, bv_cp, stable15):
    for spec in (tempered, bv_cp, stable15):
        for lam in (0.3, 2.0):
            h = 1e-6 * lam
            fd = (spec.psi(lam + h) - spec.psi(lam - h)) / (2 * h)
            assert spec.dpsi(lam) == pytest.approx(fd, rel=1e-7)


def test_psi_mp_agrees_with_float(tempered, bv_cp):
    for spec in (tempered, bv_cp):
        assert float(spec.psi_mp(1.7)) == pytest.approx(spec.psi(1.7), rel=1e-14)


def test_stable_scale_and_index(stable15, bm):
    assert stable15.stable_index == 1.5 and stable15.stable_scale == 1.0
    assert bm.stable_index == 2.0 and bm.stable_scale == pytest.approx(1.0)
    assert ProcessSpec.brownian(drift=1.0).stable_scale is None


def test_public_psi_rejects_negative(bm):
    with pytest.raises(DomainError, match="lambda"):
        snlp.psi(bm, -1.0)


# --- right inverse -------------------------------------------------------

def test_phi_brownian_closed_forms(bm, bm_drift, bm_negative):
    q = np.array([0.0, 0.25, 2.0, 100.0])
    assert np.allclose(phi(bm, q), np.sqrt(q), rtol=1e-13, atol=0)
    assert np.allclose(phi(bm_drift, q), (-1 + np.sqrt(1 + 4 * q)) / 2, rtol=1e-12, atol=0)
    assert np.allclose(phi(bm_negative, q), (1 + np.sqrt(1 + 4 * q)) / 2, rtol=1e-12)


def test_phi_zero_is_largest_root(bm_negative, bm_drift):
    assert phi(bm_negative, 0.0) == pytest.approx(1.0, rel=1e-13)
    assert phi(bm_drift, 0.0) == 0.0


def test_phi_scalar_and_vector(stable15):
    assert isinstance(phi(stable15, 2.0), float)
    assert phi(stable15, [1.0, 8.0]).shape == (2,)


def test_phi_domain(bm):
    with pytest.raises(DomainError, match="q"):
        phi(bm, -0.5)


def test_phi_mp_refines(tempered):
    import mpmath
    with mpmath.workdps(40):
        q = mpmath.mpf("3.7")
        v = phi_mp(tempered, q)
        assert abs(tempered.psi_mp(v) - q) < mpmath.mpf("1e-30")


def test_bracket_error_type():
    assert issubclass(BracketError, ArithmeticError)


# --- killing, drift, Esscher ----------------------------------------------

def test_killing_and_drift(bm_negative, bv_cp, stable15):
    kd = killing_and_drift(bm_negative)
    assert kd.k == pytest.approx(1.0) and kd.d == 0.0
    kd = killing_and_drift(bv_cp)
    assert kd.k == 0.0 and kd.d == pytest.approx(0.5) and kd.converged
    assert kd.d_extrapolated == pytest.approx(0.5, rel=1e-8)
    assert killing_and_drift(stable15).d == 0.0


def test_esscher_brownian(bm_negative):
    nat = esscher(bm_negative)
    lam = np.array([0.0, 0.5, 2.0])
    # psi(lam + 1) - psi(1) for psi = -lam + lam^2 is lam + lam^2
    assert np.allclose(nat.psi(lam), lam + lam ** 2, rtol=1e-12, atol=1e-15)
    assert nat.mean > 0


def test_esscher_tilt_of_jumps():
    spec = ProcessSpec(-1.0, 0.5, TemperedStableJumps(1.5, 1.0, 0.5))
    k = phi(spec, 0.0)
    assert k > 0
    nat = esscher(spec)
    lam = np.array([0.2, 1.0, 3.0])
    assert np.allclose(nat.psi(lam), spec.psi(lam + k) - spec.psi(k), rtol=1e-11, atol=1e-12)
    assert nat.jumps.theta == pytest.approx(0.5 + k)


def test_esscher_identity_when_not_killed(bm_drift):
    assert esscher(bm_drift) == bm_drift


# --- subordinator triplets -----------------------------------------------

def test_subordinator_stable(stable15):
    sub = subordinator_of(stable15)
    assert sub.nu == "stable" and sub.nu_params["beta"] == pytest.approx(2 / 3)
    lam = np.array([0.5, 2.0])
    assert np.allclose(sub.laplace_exponent(lam), phi(stable15, lam), rtol=1e-12)


def test_subordinator_inverse_gaussian(bm_drift, bm_negative):
    for spec in (bm_drift, bm_negative):
        sub = subordinator_of(spec)
        assert sub.nu == "inverse_gaussian"
        lam = np.array([0.0, 0.5, 2.0])
        assert np.allclose(sub.laplace_exponent(lam), phi(spec, lam), rtol=1e-12)
    assert subordinator_of(bm_drift).mean == pytest.approx(1.0)
    assert subordinator_of(bm_negative).mean == math.inf


def test_subordinator_numeric(bv_cp):
    sub = subordinator_of(bv_cp)
    assert sub.nu == "numeric" and sub.approximate and sub.d == pytest.approx(0.5)
    assert sub.mean == pytest.approx(1 / 1.5)
    # nu_bar from Laplace inversion against a finite difference of the density-free identity
    # int_0^inf e^{-lam x} nu_bar(x) dx = (Phi(lam) - k) / lam - d
    from scipy import integrate
    lam = 1.0
    val, _ = integrate.quad(lambda x: math.exp(-lam * x) * sub.nu_tail(x), 1e-9, 40, limit=200)
    assert val == pytest.approx((phi(bv_cp, lam)) / lam - 0.5, rel=1e-5)


def test_stable_tail_density_consistency(stable15):
    from scipy import integrate
    sub = subordinator_of(stable15)
    x = 0.7
    val, _ = integrate.quad(lambda y: float(sub.nu_density(y)), x, np.inf)
    assert val == pytest.approx(sub.nu_tail(x), rel=1e-8)


def test_inverse_gaussian_tail_density_consistency(bm_drift):
    from scipy import integrate
    sub = subordinator_of(bm_drift)
    x = 0.4
    val, _ = integrate.quad(lambda y: float(sub.nu_density(y)), x, np.inf)
    assert val == pytest.approx(sub.nu_tail(x), rel=1e-8)


def test_pure_drift_subordinator():
    sub = subordinator_of(ProcessSpec(2.0, 0.0, NoJumps()))
    assert sub.nu == "none" and sub.d == 0.5


def test_subordinator_validation():
    with pytest.raises(ValidationError):
        SubordinatorSpec(k=-1.0, d=0.0)
    with pytest.raises(ValidationError):
        SubordinatorSpec(k=0.0, d=0.0, nu="none")


# --- hypothesis probes ---------------------------------------------------

def test_probes_stable_satisfied(stable15):
    for h, beta in ((Hypothesis.H1, 2.0), (Hypothesis.H2, 2.0)):
        assert probe_hypothesis(stable15, h, beta).verdict is ProbeVerdict.SATISFIED
    for h in (Hypothesis.H3, Hypothesis.H4):
        probe = probe_hypothesis(stable15, h, 0.5, grid=np.geomspace(1e-1, 1e-4, 9) if h is Hypothesis.H3
                                 else np.geomspace(10, 1e4, 9))
        assert probe.verdict is ProbeVerdict.SATISFIED
        assert probe.ratio_values[-1] == pytest.approx(0.5 ** 0.5, rel=1e-6)


def test_probe_h4_violated_when_drifting_up(bv_cp):
    # W(beta x)/W(x) -> 1 for a process drifting to +infinity
    probe = probe_hypothesis(bv_cp, Hypothesis.H4, 0.5, grid=np.geomspace(1, 60, 12))
    assert probe.verdict is ProbeVerdict.VIOLATED


def test_probe_beta_domain(stable15):
    with pytest.raises(DomainError):
        probe_hypothesis(stable15, "H1", 0.5)
    with pytest.raises(DomainError):
        probe_hypothesis(stable15, "H3", 2.0)


def test_probe_h3_violated_for_bounded_variation(bv_cp):
    # W(0) > 0, so W(beta x)/W(x) -> 1 at 0
    probe = probe_hypothesis(bv_cp, Hypothesis.H3, 0.5, grid=np.geomspace(1e-1, 1e-9, 12))
    assert probe.verdict is ProbeVerdict.VIOLATED
    short = probe_hypothesis(bv_cp, Hypothesis.H3, 0.5, grid=np.geomspace(1e-1, 1e-5, 12))
    assert short.verdict is ProbeVerdict.INCONCLUSIVE


def test_probe_short_grid_inconclusive(stable15):
    assert probe_hypothesis(stable15, "H1", 2.0, grid=[0.1, 0.01]).verdict is ProbeVerdict.INCONCLUSIVE
