"""Spectrally negative Levy processes described through their Laplace exponent.

A process is given by its triplet (a, sigma, Pi), with Pi carried on the
negative half-line.  With the truncation convention used throughout,

    psi(lam) = a lam + sigma^2 lam^2 / 2
               + int_{(-inf,0)} (e^{lam x} - 1 - lam x 1{x > -1}) Pi(dx),

so that E[exp(lam xi_t)] = exp(t psi(lam)) for lam >= 0.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import mpmath
import numpy as np
from scipy import special

from .errors import BracketError, DomainError, UnsupportedSpecError, ValidationError
from .inversion import DEFAULT_TERMS, MP_LOCK, gaver_stehfest_with_error, working_dps


def _check_params(family: str, params: Mapping[str, Any], required: set, optional: set = frozenset()):
    unknown = set(params) - required - optional
    if unknown:
        raise ValidationError(f"jumps.params: unknown field(s) {sorted(unknown)} for family '{family}'")
    missing = required - set(params)
    if missing:
        raise ValidationError(f"jumps.params: missing field(s) {sorted(missing)} for family '{family}'")


def _positive(name: str, value: Any, allow_zero: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"{name} must be finite and {bound}, got {value!r}")
    return v


# --------------------------------------------------------------------------
# Jump measure families
# --------------------------------------------------------------------------

class JumpFamily:
    """Parametric Levy measure on (-inf, 0).

    Subclasses provide the jump part of psi (``laplace``), its derivative,
    an mpmath evaluation for the inversion routines, and the exponential
    tilt e^{theta x} Pi(dx) used by the Esscher transform.
    """

    family = "none"
    bounded_variation = True
    finite = True

    def params(self) -> dict:
        return {}

    def laplace(self, lam):
        return np.zeros_like(np.asarray(lam, dtype=float))

    def dlaplace(self, lam):
        return np.zeros_like(np.asarray(lam, dtype=float))

    def laplace_mp(self, lam):
        return mpmath.mpf(0)

    def dlaplace_mp(self, lam):
        return mpmath.mpf(0)

    def inner_mean(self) -> float:
        """int_{[-1,0)} x Pi(dx); finite only for bounded-variation families."""
        return 0.0

    def tilt(self, theta: float) -> "JumpFamily":
        return self

    def total_rate(self) -> float:
        return 0.0

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((self.family, json.dumps(self.params(), sort_keys=True)))

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


class NoJumps(JumpFamily):
    pass


class ExponentialJumps(JumpFamily):
    """Compound Poisson jumps -Y with Y ~ Exponential(mean), at ``rate``."""

    family = "compound_poisson"

    def __init__(self, rate: float, mean: float):
        self.rate = _positive("jumps.params.rate", rate, allow_zero=True)
        self.mean = _positive("jumps.params.mean", mean)
        self._mu = 1.0 / self.mean

    def params(self):
        return {"rate": self.rate, "mean": self.mean}

    def inner_mean(self):
        mu = self._mu
        return -self.rate * (-math.expm1(-mu) - mu * math.exp(-mu)) / mu

    def laplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        return -self.rate * lam / (self._mu + lam) - lam * self.inner_mean()

    def dlaplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        return -self.rate * self._mu / (self._mu + lam) ** 2 - self.inner_mean()

    def laplace_mp(self, lam):
        mu = mpmath.mpf(1) / mpmath.mpf(self.mean)
        r = mpmath.mpf(self.rate)
        inner = -r * (1 - mpmath.exp(-mu) * (1 + mu)) / mu
        return -r * lam / (mu + lam) - lam * inner

    def dlaplace_mp(self, lam):
        mu = mpmath.mpf(1) / mpmath.mpf(self.mean)
        r = mpmath.mpf(self.rate)
        inner = -r * (1 - mpmath.exp(-mu) * (1 + mu)) / mu
        return -r * mu / (mu + lam) ** 2 - inner

    def tilt(self, theta):
        mu = self._mu + theta
        return ExponentialJumps(self.rate * self._mu / mu, 1.0 / mu)

    def total_rate(self):
        return self.rate


class AtomicJumps(JumpFamily):
    """Finitely many jump sizes -s_i, each arriving at its own rate.

    This is also the route for an arbitrary Levy measure: discretise it into
    quadrature nodes and weights and pass them here.
    """

    family = "compound_poisson"

    def __init__(self, sizes: Sequence[float], rates: Sequence[float]):
        sizes = [_positive("jumps.params.sizes[]", s) for s in sizes]
        rates = [_positive("jumps.params.rates[]", r, allow_zero=True) for r in rates]
        if len(sizes) != len(rates) or not sizes:
            raise ValidationError("jumps.params: 'sizes' and 'rates' must be non-empty and equally long")
        self.sizes = np.array(sizes)
        self.rates = np.array(rates)

    def params(self):
        return {"sizes": self.sizes.tolist(), "rates": self.rates.tolist()}

    def inner_mean(self):
        near = self.sizes < 1.0
        return -float(np.sum(self.rates[near] * self.sizes[near]))

    def laplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        s = self.sizes
        terms = self.rates * np.expm1(-np.multiply.outer(lam, s))
        return terms.sum(axis=-1) - lam * self.inner_mean()

    def dlaplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        s = self.sizes
        terms = -self.rates * s * np.exp(-np.multiply.outer(lam, s))
        return terms.sum(axis=-1) - self.inner_mean()

    def laplace_mp(self, lam):
        acc = mpmath.fsum(mpmath.mpf(r) * mpmath.expm1(-lam * mpmath.mpf(s))
                          for s, r in zip(self.sizes, self.rates))
        return acc - lam * mpmath.mpf(self.inner_mean())

    def dlaplace_mp(self, lam):
        acc = mpmath.fsum(-mpmath.mpf(r) * mpmath.mpf(s) * mpmath.exp(-lam * mpmath.mpf(s))
                          for s, r in zip(self.sizes, self.rates))
        return acc - mpmath.mpf(self.inner_mean())

    def tilt(self, theta):
        return AtomicJumps(self.sizes, self.rates * np.exp(-theta * self.sizes))

    def total_rate(self):
        return float(self.rates.sum())


class TemperedStableJumps(JumpFamily):
    """Pi(dx) = c e^{-theta |x|} |x|^{-1-alpha} dx on x < 0, alpha in (1, 2).

    ``scale`` fixes c = scale / Gamma(-alpha), so that the compensated jump
    integral equals scale * ((theta+lam)^alpha - theta^alpha - alpha theta^(alpha-1) lam).
    With theta = 0 this is the one-sided stable family.
    """

    family = "tempered_stable"
    bounded_variation = False
    finite = False

    def __init__(self, alpha: float, scale: float = 1.0, theta: float = 0.0):
        try:
            alpha = float(alpha)
        except (TypeError, ValueError):
            raise ValidationError(f"jumps.params.alpha must be a real number, got {alpha!r}") from None
        if not 1.0 < alpha < 2.0:
            raise ValidationError(f"jumps.params.alpha must lie in (1, 2), got {alpha!r}")
        self.alpha = alpha
        self.scale = _positive("jumps.params.scale", scale)
        self.theta = _positive("jumps.params.theta", theta, allow_zero=True)
        self.density_constant = self.scale / special.gamma(-alpha)
        self._outer = self._outer_mean()

    def params(self):
        return {"alpha": self.alpha, "scale": self.scale, "theta": self.theta}

    def _outer_mean(self) -> float:
        # int_{(-inf,-1)} x Pi(dx) = -c int_1^inf y^{-alpha} e^{-theta y} dy
        c, a, th = self.density_constant, self.alpha, self.theta
        if th == 0.0:
            return -c / (a - 1.0)
        with MP_LOCK, mpmath.workdps(30):
            tail = mpmath.mpf(th) ** (a - 1) * mpmath.gammainc(1 - a, th)
        return -c * float(tail)

    def laplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, th = self.alpha, self.theta
        comp = (th + lam) ** a - th ** a - a * th ** (a - 1) * lam if th > 0 else lam ** a
        return self.scale * comp + lam * self._outer

    def dlaplace(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, th = self.alpha, self.theta
        comp = a * ((th + lam) ** (a - 1) - th ** (a - 1)) if th > 0 else a * lam ** (a - 1)
        return self.scale * comp + self._outer

    def laplace_mp(self, lam):
        a, th = mpmath.mpf(self.alpha), mpmath.mpf(self.theta)
        if self.theta > 0:
            comp = (th + lam) ** a - th ** a - a * th ** (a - 1) * lam
        else:
            comp = lam ** a
        return mpmath.mpf(self.scale) * comp + lam * mpmath.mpf(self._outer)

    def dlaplace_mp(self, lam):
        a, th = mpmath.mpf(self.alpha), mpmath.mpf(self.theta)
        if self.theta > 0:
            comp = a * ((th + lam) ** (a - 1) - th ** (a - 1))
        else:
            comp = a * lam ** (a - 1)
        return mpmath.mpf(self.scale) * comp + mpmath.mpf(self._outer)

    def outer_mean(self) -> float:
        return self._outer

    def tilt(self, theta):
        return TemperedStableJumps(self.alpha, self.scale, self.theta + theta)

    def total_rate(self):
        return math.inf


class StableJumps(TemperedStableJumps):
    family = "stable"

    def __init__(self, alpha: float, scale: float = 1.0):
        super().__init__(alpha, scale, 0.0)

    def params(self):
        return {"alpha": self.alpha, "scale": self.scale}


def jumps_from_json(obj: Any) -> JumpFamily:
    if not isinstance(obj, Mapping):
        raise ValidationError("jumps must be an object {'family': ..., 'params': {...}}")
    unknown = set(obj) - {"family", "params"}
    if unknown:
        raise ValidationError(f"jumps: unknown field(s) {sorted(unknown)}")
    family = obj.get("family")
    params = obj.get("params", {})
    if not isinstance(params, Mapping):
        raise ValidationError("jumps.params must be an object")
    if family == "none":
        _check_params(family, params, set())
        return NoJumps()
    if family == "compound_poisson":
        if "sizes" in params:
            _check_params(family, params, {"sizes", "rates"})
            return AtomicJumps(params["sizes"], params["rates"])
        _check_params(family, params, {"rate", "mean"})
        return ExponentialJumps(params["rate"], params["mean"])
    if family == "stable":
        _check_params(family, params, {"alpha"}, {"scale"})
        return StableJumps(params["alpha"], params.get("scale", 1.0))
    if family == "tempered_stable":
        _check_params(family, params, {"alpha", "theta"}, {"scale"})
        return TemperedStableJumps(params["alpha"], params.get("scale", 1.0), params["theta"])
    raise ValidationError(f"jumps.family: unknown family {family!r} "
                          "(expected none, compound_poisson, stable, tempered_stable)")


# --------------------------------------------------------------------------
# Process specification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProcessSpec:
    """Levy triplet (a, sigma, Pi) of a spectrally negative process."""

    a: float
    sigma: float = 0.0
    jumps: JumpFamily = field(default_factory=NoJumps)

    def __post_init__(self):
        try:
            a = float(self.a)
            sigma = float(self.sigma)
        except (TypeError, ValueError):
            raise ValidationError("a and sigma must be real numbers") from None
        if not math.isfinite(a):
            raise ValidationError(f"a must be finite, got {self.a!r}")
        if not math.isfinite(sigma) or sigma < 0:
            raise ValidationError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not isinstance(self.jumps, JumpFamily):
            raise ValidationError("jumps must be a JumpFamily")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma", sigma)
        if self.bounded_variation and not self.bv_drift > 0:
            raise ValidationError(
                f"bounded-variation process needs a positive drift, got {self.bv_drift!r}; "
                "with no upward motion psi is never positive and Phi is undefined")

    # --- constructors ----------------------------------------------------
    @classmethod
    def brownian(cls, variance: float = 2.0, drift: float = 0.0) -> "ProcessSpec":
        """psi(lam) = drift * lam + variance * lam^2 / 2."""
        return cls(a=drift, sigma=math.sqrt(variance))

    @classmethod
    def stable(cls, alpha: float, scale: float = 1.0) -> "ProcessSpec":
        """Spectrally negative stable process with psi(lam) = scale * lam^alpha.

        ``alpha = 2`` gives Brownian motion with variance 2 * scale.
        """
        if alpha == 2.0:
            return cls.brownian(variance=2.0 * scale)
        jumps = StableJumps(alpha, scale)
        return cls(a=-jumps.outer_mean(), sigma=0.0, jumps=jumps)

    @classmethod
    def bounded_variation_cp(cls, drift: float, rate: float, mean: float) -> "ProcessSpec":
        """xi_t = drift * t minus compound Poisson with exponential jumps."""
        jumps = ExponentialJumps(rate, mean)
        return cls(a=drift + jumps.inner_mean(), sigma=0.0, jumps=jumps)

    # --- structure -------------------------------------------------------
    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0.0 and self.jumps.bounded_variation

    @property
    def bv_drift(self) -> float | None:
        """Drift b with psi(lam)/lam -> b, for bounded-variation processes."""
        if not (self.sigma == 0.0 and self.jumps.bounded_variation):
            return None
        return self.a - self.jumps.inner_mean()

    @property
    def stable_index(self) -> float | None:
        """alpha when psi(lam) = s * lam^alpha exactly, else None."""
        s = self.stable_scale
        if s is None:
            return None
        return 2.0 if isinstance(self.jumps, NoJumps) else self.jumps.alpha

    @property
    def stable_scale(self) -> float | None:
        if isinstance(self.jumps, NoJumps):
            return self.sigma ** 2 / 2 if self.sigma > 0 and self.a == 0.0 else None
        if type(self.jumps) is StableJumps and self.sigma == 0.0:
            if abs(self.a + self.jumps.outer_mean()) <= 1e-12 * max(1.0, abs(self.a)):
                return self.jumps.scale
        return None

    # --- exponent --------------------------------------------------------
    def psi(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = self.a * lam + 0.5 * self.sigma ** 2 * lam ** 2 + self.jumps.laplace(lam)
        return out if out.ndim else float(out)

    def dpsi(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = self.a + self.sigma ** 2 * lam + self.jumps.dlaplace(lam)
        return out if out.ndim else float(out)

    def psi_mp(self, lam):
        lam = mpmath.mpf(lam)
        return (mpmath.mpf(self.a) * lam + mpmath.mpf(self.sigma) ** 2 * lam ** 2 / 2
                + self.jumps.laplace_mp(lam))

    def dpsi_mp(self, lam):
        lam = mpmath.mpf(lam)
        return mpmath.mpf(self.a) + mpmath.mpf(self.sigma) ** 2 * lam + self.jumps.dlaplace_mp(lam)

    @property
    def mean(self) -> float:
        """E[xi_1] = psi'(0+)."""
        return float(self.dpsi(0.0))

    # --- serialisation ---------------------------------------------------
    def to_json(self) -> dict:
        return {"a": self.a, "sigma": self.sigma, "jumps": self.jumps.to_json()}

    @classmethod
    def from_json(cls, obj: Any) -> "ProcessSpec":
        if not isinstance(obj, Mapping):
            raise ValidationError("process spec must be a JSON object")
        unknown = set(obj) - {"a", "sigma", "jumps"}
        if unknown:
            raise ValidationError(f"process spec: unknown field(s) {sorted(unknown)}")
        if "a" not in obj:
            raise ValidationError("process spec: missing field 'a'")
        jumps = jumps_from_json(obj.get("jumps", {"family": "none", "params": {}}))
        return cls(a=obj["a"], sigma=obj.get("sigma", 0.0), jumps=jumps)


# --------------------------------------------------------------------------
# Right inverse
# --------------------------------------------------------------------------

def phi(spec: ProcessSpec, q):
    """Largest root lam >= 0 of psi(lam) = q, vectorised over ``q``.

    The sublevel set {psi <= q} is an interval [0, Phi(q)] by convexity, so
    bisection on the invariant psi(lo) <= q < psi(hi) always lands on the
    right-most root; a few Newton steps from the upper end (monotone for a
    convex function) then polish the result.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(~(q_arr >= 0)):
        raise DomainError(f"phi requires q >= 0, got {q!r}")
    scalar = q_arr.ndim == 0
    q_arr = np.atleast_1d(q_arr).astype(float)
    lo = np.zeros_like(q_arr)
    hi = np.ones_like(q_arr)
    for _ in range(200):
        below = spec.psi(hi) <= q_arr
        if not below.any():
            break
        lo = np.where(below, hi, lo)
        hi = np.where(below, 2.0 * hi, hi)
    else:
        bad = int(np.argmax(spec.psi(hi) <= q_arr))
        raise BracketError("phi: bracket expansion limit reached", float(lo[bad]), float(hi[bad]))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = spec.psi(mid) <= q_arr
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-9 * hi):
            break
    lam = hi.copy()
    for _ in range(6):
        slope = spec.dpsi(lam)
        step = np.where(slope > 0, (spec.psi(lam) - q_arr) / np.where(slope > 0, slope, 1.0), 0.0)
        lam = np.clip(lam - step, lo, hi)
    if spec.mean >= 0:
        lam = np.where(q_arr == 0, 0.0, lam)
    return float(lam[0]) if scalar else lam


def phi_mp(spec: ProcessSpec, q):
    """Phi(q) refined in the current mpmath precision (call under MP_LOCK)."""
    q = mpmath.mpf(q)
    if q == 0 and spec.mean >= 0:
        return mpmath.mpf(0)
    lam = mpmath.mpf(phi(spec, float(q)))
    if lam == 0:
        lam = mpmath.mpf(1e-300)
    for _ in range(8):
        step = (spec.psi_mp(lam) - q) / spec.dpsi_mp(lam)
        lam -= step
        if abs(step) <= abs(lam) * mpmath.mpf(10) ** (-mpmath.mp.dps + 3):
            break
    return lam


@dataclass(frozen=True)
class KillingDrift:
    k: float
    d: float
    d_extrapolated: float
    converged: bool
    iterates: tuple[float, float]


def killing_and_drift(spec: ProcessSpec) -> KillingDrift:
    """Killing rate k = Phi(0) and drift d = lim Phi(lam)/lam.

    The limit is estimated by one Richardson step along lam = 2^j,
    j = 20..40.  When the structure of the triplet settles d (zero under
    unbounded variation, 1/b under bounded variation) that value is
    returned as ``d``; the extrapolated iterate is kept for diagnostics.
    """
    k = phi(spec, 0.0)
    lam = 2.0 ** np.arange(20, 41)
    ratio = phi(spec, lam) / lam
    rich = 2.0 * ratio[1:] - ratio[:-1]
    last, prev = float(rich[-1]), float(rich[-2])
    converged = bool(abs(last - prev) <= 1e-8 * max(1.0, abs(last)) and abs(ratio[-1] - last) <= 1e-6 * max(1.0, abs(last)))
    d_est = 0.0 if abs(last) < 1e-10 else last
    if spec.bounded_variation:
        d = 1.0 / spec.bv_drift
    else:
        d = 0.0
    return KillingDrift(k=k, d=d, d_extrapolated=d_est, converged=converged, iterates=(prev, last))


def esscher(spec: ProcessSpec) -> ProcessSpec:
    """Exponential tilt by Phi(0): psi_nat(lam) = psi(Phi(0) + lam).

    Identity when the process does not drift to -infinity.  The tilted
    Levy measure is e^{Phi(0) x} Pi(dx); the linear coefficient is fixed by
    matching psi_nat'(0) = psi'(Phi(0)).
    """
    theta = phi(spec, 0.0)
    if theta == 0.0:
        return spec
    jumps = spec.jumps.tilt(theta)
    a = float(spec.dpsi(theta)) - float(jumps.dlaplace(0.0))
    return ProcessSpec(a=a, sigma=spec.sigma, jumps=jumps)


# --------------------------------------------------------------------------
# First-passage subordinator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SubordinatorSpec:
    """Subordinator with exponent Phi(lam) = k + d lam + int (1 - e^{-lam x}) nu(dx).

    ``nu`` names the jump family: ``none``, ``stable`` (Phi_jump = coef * lam^beta),
    ``inverse_gaussian`` (first passage of Brownian motion with drift), or
    ``numeric`` (tail obtained by Laplace inversion of Phi(lam)/lam - d).
    """

    k: float
    d: float
    nu: str = "none"
    nu_params: Mapping[str, float] = field(default_factory=dict)
    source: ProcessSpec | None = None
    approximate: bool = False

    def __post_init__(self):
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise ValidationError(f"killing rate k must be finite and >= 0, got {self.k!r}")
        if not (self.d >= 0 and math.isfinite(self.d)):
            raise ValidationError(f"drift d must be finite and >= 0, got {self.d!r}")
        if self.nu not in ("none", "stable", "inverse_gaussian", "numeric"):
            raise ValidationError(f"unknown subordinator jump family {self.nu!r}")
        if self.nu == "numeric" and self.source is None:
            raise ValidationError("numeric jump family needs a source process")
        if self.nu == "none" and self.d == 0 and self.k == 0:
            raise ValidationError("subordinator with no drift, jumps or killing is identically zero")
        if self.nu == "stable" and not 0 < self.nu_params.get("beta", 0) < 1:
            raise ValidationError("stable subordinator needs beta in (0, 1)")

    @property
    def closed_form(self) -> bool:
        return self.nu != "numeric"

    def laplace_exponent(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.nu == "numeric":
            out = np.asarray(phi(self.source, lam), dtype=float)
        else:
            out = self.k + self.d * lam + self._jump_exponent(lam)
        return out if out.ndim else float(out)

    def _jump_exponent(self, lam):
        p = self.nu_params
        if self.nu == "stable":
            return p["coef"] * lam ** p["beta"]
        if self.nu == "inverse_gaussian":
            s2, m = p["sigma"] ** 2, p["mu"]
            return (np.sqrt(m * m + 2.0 * s2 * lam) - m) / s2
        return np.zeros_like(lam)

    def nu_density(self, x):
        """Density of nu; closed-form families only."""
        x = np.asarray(x, dtype=float)
        p = self.nu_params
        if self.nu == "none":
            return np.zeros_like(x)
        if self.nu == "stable":
            b = p["beta"]
            return p["coef"] * b * x ** (-1.0 - b) / special.gamma(1.0 - b)
        if self.nu == "inverse_gaussian":
            s, m = p["sigma"], p["mu"]
            return np.exp(-m * m * x / (2 * s * s)) / (s * math.sqrt(2 * math.pi)) * x ** -1.5
        raise UnsupportedSpecError("nu has no closed-form density for this subordinator")

    def jump_tail(self, x):
        """nu((x, inf)), without the killing rate."""
        x = np.asarray(x, dtype=float)
        p = self.nu_params
        if self.nu == "none":
            out = np.zeros_like(x)
        elif self.nu == "stable":
            b = p["beta"]
            out = p["coef"] * x ** (-b) / special.gamma(1.0 - b)
        elif self.nu == "inverse_gaussian":
            s, m = p["sigma"], p["mu"]
            c = m * m / (2 * s * s)
            out = (2.0 * x ** -0.5 * np.exp(-c * x)
                   - 2.0 * math.sqrt(math.pi * c) * special.erfc(np.sqrt(c * x))) / (s * math.sqrt(2 * math.pi))
        else:
            out = np.vectorize(lambda v: self.numeric_tail(v)[0], otypes=[float])(x)
        return out if out.ndim else float(out)

    def nu_tail(self, x):
        """nu_bar(x) = k + nu((x, inf))."""
        return self.k + self.jump_tail(x)

    def numeric_tail(self, x: float, n_terms: int = DEFAULT_TERMS) -> tuple[float, float]:
        """Invert (Phi(lam) - k)/lam - d at x; returns (value, error estimate)."""
        src, k, d = self.source, self.k, self.d

        def transform(lam):
            return (phi_mp(src, lam) - k_mp) / lam - d_mp

        with MP_LOCK, mpmath.workdps(working_dps(n_terms)):
            k_mp = phi_mp(src, 0) if k > 0 else mpmath.mpf(0)
            d_mp = mpmath.mpf(d)
            return gaver_stehfest_with_error(transform, float(x), n_terms)

    @property
    def mean(self) -> float:
        """E[T_1] when the subordinator is not killed (inf otherwise)."""
        if self.k > 0:
            return math.inf
        if self.nu == "stable":
            return math.inf
        if self.nu == "inverse_gaussian":
            m = self.nu_params["mu"]
            return self.d + (1.0 / m if m > 0 else math.inf)
        if self.nu == "none":
            return self.d
        mu = self.source.mean
        return 1.0 / mu if mu > 0 else math.inf

    def to_json(self) -> dict:
        return {"k": self.k, "d": self.d, "nu": {"family": self.nu, "params": dict(self.nu_params)},
                "approximate": self.approximate}


def subordinator_of(spec: ProcessSpec) -> SubordinatorSpec:
    """Triplet (k, d, nu) of the first-passage process T_x = inf{t : xi_t >= x}."""
    s = spec.stable_scale
    if s is not None:
        alpha = spec.stable_index
        return SubordinatorSpec(k=0.0, d=0.0, nu="stable",
                                nu_params={"beta": 1.0 / alpha, "coef": s ** (-1.0 / alpha)}, source=spec)
    kd = killing_and_drift(spec)
    if isinstance(spec.jumps, NoJumps):
        if spec.sigma == 0.0:
            return SubordinatorSpec(k=0.0, d=1.0 / spec.a, nu="none", source=spec)
        return SubordinatorSpec(k=kd.k, d=0.0, nu="inverse_gaussian",
                                nu_params={"sigma": spec.sigma, "mu": abs(spec.a)}, source=spec)
    return SubordinatorSpec(k=kd.k, d=kd.d, nu="numeric", source=spec, approximate=True)


# --------------------------------------------------------------------------
# Hypothesis probes
# --------------------------------------------------------------------------

class Hypothesis(str, enum.Enum):
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4 = "H4"


class ProbeVerdict(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class HypothesisProbe:
    hypothesis: Hypothesis
    beta: float
    grid: tuple[float, ...]
    ratio_values: tuple[float, ...]
    verdict: ProbeVerdict


def geometric_grid(start: float, stop: float, n: int) -> np.ndarray:
    return np.geomspace(start, stop, n)


def probe_hypothesis(spec: ProcessSpec, h: Hypothesis | str, beta: float,
                     grid: Sequence[float] | None = None, scale_function=None) -> HypothesisProbe:
    """Evaluate the ratio behind (H1)-(H4) along ``grid`` and give a verdict.

    H1/H2 record psi(x)/psi(beta x) with beta > 1 (x -> 0 and x -> inf);
    H3/H4 record W(beta x)/W(x) with beta in (0, 1).  For processes drifting
    to -infinity the Esscher-transformed exponent is probed.

    Satisfied: at least six points, and over the last third of the grid the
    distance of the running extreme from the excluded bound changes by at
    most 1% and stays >= 1e-6.  Violated: the running extreme comes within 1e-6
    of the bound.  Otherwise Inconclusive.
    """
    h = Hypothesis(h)
    if h in (Hypothesis.H1, Hypothesis.H2):
        if not beta > 1:
            raise DomainError(f"{h.value} needs beta > 1, got {beta}")
    elif not 0 < beta < 1:
        raise DomainError(f"{h.value} needs beta in (0, 1), got {beta}")
    if grid is None:
        grid = (geometric_grid(1e-1, 1e-10, 30) if h in (Hypothesis.H1, Hypothesis.H3)
                else geometric_grid(1e1, 1e10, 30))
    xs = np.asarray(grid, dtype=float)
    base = esscher(spec)
    if h in (Hypothesis.H1, Hypothesis.H2):
        ratios = np.asarray(base.psi(xs), dtype=float) / np.asarray(base.psi(beta * xs), dtype=float)
    else:
        from .scale_fn import scale_function as make_sf
        sf = scale_function if scale_function is not None else make_sf(spec)
        ratios = np.array([sf.W(beta * x) / sf.W(x) for x in xs])
    verdict = _probe_verdict(h, ratios)
    return HypothesisProbe(h, float(beta), tuple(map(float, xs)), tuple(map(float, ratios)), verdict)


def _probe_verdict(h: Hypothesis, ratios: np.ndarray) -> ProbeVerdict:
    n = len(ratios)
    if n < 6 or not np.all(np.isfinite(ratios)):
        return ProbeVerdict.INCONCLUSIVE
    lower = h in (Hypothesis.H1, Hypothesis.H2)
    running = np.minimum.accumulate(ratios) if lower else np.maximum.accumulate(ratios)
    start, end = running[(2 * n) // 3], running[-1]
    # distances from the excluded bound (0 for H1/H2, 1 for H3/H4)
    d_start, d_end = (start, end) if lower else (1 - start, 1 - end)
    if d_end < 1e-6:
        return ProbeVerdict.VIOLATED
    if abs(d_end - d_start) <= 1e-2 * d_end:
        return ProbeVerdict.SATISFIED
    return ProbeVerdict.INCONCLUSIVE


def load_spec(path) -> ProcessSpec:
    with open(path) as fh:
        return ProcessSpec.from_json(json.load(fh))
