"""Rate functions, iterated-logarithm constants and integral-test classifiers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .errors import DomainError, UnsupportedSpecError, ValidationError
from .levy_model import ProcessSpec, SubordinatorSpec, esscher, phi

N_BLOCKS = 40
FIRST_BLOCK = 2
RATIO_THRESHOLD = 0.9
CONVERGE_EXPONENT = 1.25
DIVERGE_EXPONENT = 0.75
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class Side(str, enum.Enum):
    AT_ZERO = "AtZero"
    AT_INFINITY = "AtInfinity"


class Verdict(str, enum.Enum):
    CONVERGE = "Converge"
    DIVERGE = "Diverge"
    INCONCLUSIVE = "Inconclusive"


# --------------------------------------------------------------------------
# Rate functions
# --------------------------------------------------------------------------

def _loglog(t, name: str) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError(f"{name} must be positive, got {t}")
    lt = np.abs(np.log(t))
    if np.any(lt <= 1.0):
        raise DomainError(f"{name} must lie outside the band [e^-1, e] where log|log {name}| <= 0")
    return np.log(lt)


def rate_h(spec: ProcessSpec, t):
    """h(t) = log|log t| / Phi(t^{-1} log|log t|), for t in (0, 1/e) or (e, inf).

    For processes drifting to -infinity the exponent of the Esscher transform
    is used; both define the same conditioned process.
    """
    ll = _loglog(t, "t")
    t = np.asarray(t, dtype=float)
    out = ll / np.asarray(phi(esscher(spec), ll / t))
    return out if out.ndim else float(out)


def rate_g(spec: ProcessSpec, x):
    """g(x) = log|log x| / psi(x^{-1} log|log x|), for x in (0, 1/e) or (e, inf)."""
    ll = _loglog(x, "x")
    x = np.asarray(x, dtype=float)
    out = ll / np.asarray(esscher(spec).psi(ll / x))
    return out if out.ndim else float(out)


def lil_constants(alpha: float) -> tuple[float, float]:
    """(c, c_chung) for index alpha in (1, 2].

    c = (1/alpha)^{-1/alpha} (1 - 1/alpha)^{(1-alpha)/alpha} is the upper
    iterated-logarithm constant of the stable case and
    c_chung = (1/alpha) (1 - 1/alpha)^{alpha-1} the lower constant of the
    last-passage process.  Powers of the form eps^eps are taken through
    exp(eps log eps) so that alpha close to 1 stays finite.
    """
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha}")
    e = 1.0 - 1.0 / alpha
    log_e = math.log(e)
    c_upper = math.exp(math.log(alpha) / alpha + (1.0 - alpha) / alpha * log_e)
    c_chung = math.exp(-math.log(alpha) + (alpha - 1.0) * log_e)
    return c_upper, c_chung


# --------------------------------------------------------------------------
# Envelopes
# --------------------------------------------------------------------------

class Monotone(str, enum.Enum):
    DECREASING = "Decreasing"
    INCREASING = "Increasing"
    NEITHER = "Neither"


@dataclass(frozen=True)
class EnvelopeFunction:
    """A nonnegative function f on (0, inf) with its declared shape.

    ``family`` and ``params`` make the envelope serialisable:
    ``zero`` (f = 0) and ``power_log`` (f(t) = K t^p |log t|^-kappa).
    """

    f: Callable[[np.ndarray], np.ndarray]
    increasing: bool = True
    f_over_t: Monotone = Monotone.NEITHER
    family: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, t):
        return self.f(np.asarray(t, dtype=float))

    @classmethod
    def zero(cls) -> "EnvelopeFunction":
        return cls(lambda t: np.zeros_like(t), True, Monotone.NEITHER, "zero", {})

    @classmethod
    def power_log(cls, p: float, kappa: float = 0.0, K: float = 1.0,
                  f_over_t: Monotone | str | None = None) -> "EnvelopeFunction":
        if not K > 0:
            raise ValidationError(f"envelope K must be positive, got {K}")
        if f_over_t is None:
            f_over_t = (Monotone.DECREASING if p < 1 else Monotone.INCREASING if p > 1 else Monotone.NEITHER)

        def f(t):
            return K * t ** p * np.abs(np.log(t)) ** (-kappa)

        return cls(f, True, Monotone(f_over_t), "power_log", {"K": K, "p": p, "kappa": kappa})

    @classmethod
    def from_json(cls, obj: Any) -> "EnvelopeFunction":
        if not isinstance(obj, Mapping) or "family" not in obj:
            raise ValidationError("envelope_f must be an object with a 'family' field")
        fam, params = obj["family"], dict(obj.get("params", {}))
        if fam == "zero":
            return cls.zero()
        if fam == "power_log":
            unknown = set(params) - {"K", "p", "kappa"}
            if unknown or "p" not in params:
                raise ValidationError("envelope_f.params for power_log: need 'p', optional 'K', 'kappa'")
            return cls.power_log(params["p"], params.get("kappa", 0.0), params.get("K", 1.0))
        raise ValidationError(f"envelope_f.family: unknown family {fam!r} (expected zero, power_log)")

    def to_json(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    def check_shape(self, side: Side, want_f_over_t: Monotone | None = None) -> list[str]:
        """Spot-check the declared monotonicity on 100 log-spaced points near the limit point."""
        t = _side_grid(side)
        ft = self(t)
        warnings = []
        if np.any(ft < 0):
            warnings.append("f takes negative values")
        if self.increasing and np.any(np.diff(ft) < -1e-12 * np.abs(ft[1:])):
            warnings.append("f is not increasing on the check grid")
        want = want_f_over_t or self.f_over_t
        if want is not Monotone.NEITHER and np.any(ft > 0):
            r = np.diff(ft / t)
            scale = 1e-12 * np.abs(ft[1:] / t[1:])
            bad = np.any(r > scale) if want is Monotone.DECREASING else np.any(r < -scale)
            if bad:
                warnings.append(f"f(t)/t is not {want.value.lower()} on the check grid")
        return warnings


def _side_grid(side: Side) -> np.ndarray:
    # inner half of the blocks: the tests only need eventual monotonicity
    mid = FIRST_BLOCK + N_BLOCKS // 2
    if Side(side) is Side.AT_ZERO:
        return np.geomspace(2.0 ** -(FIRST_BLOCK + N_BLOCKS), 2.0 ** -mid, 100)
    return np.geomspace(2.0 ** mid, 2.0 ** (FIRST_BLOCK + N_BLOCKS), 100)


# --------------------------------------------------------------------------
# Block classifier
# --------------------------------------------------------------------------

@dataclass
class TestVerdict:
    verdict: Verdict
    partial_sums: list[float]
    exponent: float
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"verdict": self.verdict.value, "blocks": list(self.partial_sums),
                "exponent": self.exponent}


def block_sums(integrand: Callable[[np.ndarray], np.ndarray], side: Side) -> np.ndarray:
    """Integrals of ``integrand`` over the 40 dyadic blocks toward ``side``.

    Each block is integrated by Gauss-Legendre in log t, ordered from the
    outermost block to the one closest to the limit point.
    """
    side = Side(side)
    j = np.arange(FIRST_BLOCK, FIRST_BLOCK + N_BLOCKS)
    if side is Side.AT_ZERO:
        lo, hi = -(j + 1) * math.log(2), -j * math.log(2)
    else:
        lo, hi = j * math.log(2), (j + 1) * math.log(2)
    half = 0.5 * (hi - lo)
    s = 0.5 * (hi + lo)[:, None] + half[:, None] * _GL_NODES[None, :]
    t = np.exp(s)
    vals = np.asarray(integrand(t), dtype=float) * t
    return (vals * _GL_WEIGHTS).sum(axis=1) * half


def classify(blocks: np.ndarray, side: Side) -> tuple[Verdict, float]:
    """Three-valued verdict from dyadic block integrals.

    With u = |log t| at the block midpoints, a power law B_j ~ u^-p is
    fitted over the last half of the blocks.  Converge when the last three
    ratios B_{j+1}/B_j are <= 0.9 (geometric decay) or p >= 1.25;
    Diverge when p <= 0.75 (block sums bounded below or decaying too slowly
    to be summable); Inconclusive otherwise.
    """
    b = np.asarray(blocks, dtype=float)
    if np.all(b == 0):
        return Verdict.CONVERGE, math.inf
    if np.any(~np.isfinite(b)) or np.any(b < 0):
        return Verdict.INCONCLUSIVE, math.nan
    j = np.arange(FIRST_BLOCK, FIRST_BLOCK + b.size)
    u = (j + 0.5) * math.log(2)
    tail = slice(b.size // 2, None)
    if np.any(b[tail] == 0):
        return Verdict.CONVERGE, math.inf
    p = -float(np.polyfit(np.log(u[tail]), np.log(b[tail]), 1)[0])
    ratios = b[-3:] / b[-4:-1]
    if np.all(ratios <= RATIO_THRESHOLD) or p >= CONVERGE_EXPONENT:
        return Verdict.CONVERGE, p
    if p <= DIVERGE_EXPONENT:
        return Verdict.DIVERGE, p
    return Verdict.INCONCLUSIVE, p


def _run(integrand, side, warnings) -> TestVerdict:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        b = block_sums(integrand, side)
    verdict, p = classify(b, side)
    return TestVerdict(verdict, [float(x) for x in b], p, warnings)


def integral_test_stable(f: EnvelopeFunction, alpha: float, side: Side | str = Side.AT_ZERO) -> TestVerdict:
    """Classify int (f(t)/t)^{1/alpha} dt/t near 0 or infinity."""
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha}")
    side = Side(side)
    warnings = f.check_shape(side)
    return _run(lambda t: (f(t) / t) ** (1.0 / alpha) / t, side, warnings)


def integral_test_nu(f: EnvelopeFunction, sub: SubordinatorSpec, side: Side | str = Side.AT_ZERO) -> TestVerdict:
    """Classify int f(x) nu(dx) near 0 or infinity (f increasing, f(t)/t decreasing)."""
    if not sub.closed_form:
        raise UnsupportedSpecError("integral_test_nu needs a closed-form jump measure")
    side = Side(side)
    warnings = f.check_shape(side, Monotone.DECREASING)
    return _run(lambda x: f(x) * sub.nu_density(x), side, warnings)


def integral_test_phi(f: EnvelopeFunction, spec: ProcessSpec, side: Side | str = Side.AT_ZERO) -> TestVerdict:
    """Classify int x^{-1} f(x) Phi(1/x) dx near 0 or infinity."""
    side = Side(side)
    warnings = f.check_shape(side, Monotone.DECREASING)
    nat = esscher(spec)

    def integrand(x):
        return f(x) * np.asarray(phi(nat, 1.0 / x.ravel())).reshape(x.shape) / x

    return _run(integrand, side, warnings)


def integral_test_nubar(f: EnvelopeFunction, sub: SubordinatorSpec, side: Side | str = Side.AT_ZERO) -> TestVerdict:
    """Classify int nu_bar(f(t)) dt near 0 or infinity (f increasing, f(t)/t increasing)."""
    if not sub.closed_form:
        raise UnsupportedSpecError("integral_test_nubar needs a closed-form jump tail")
    side = Side(side)
    warnings = f.check_shape(side, Monotone.INCREASING)

    def integrand(t):
        ft = f(t)
        out = np.where(ft > 0, np.asarray(sub.nu_tail(np.where(ft > 0, ft, 1.0))), np.inf)
        return out if sub.nu != "none" or sub.k > 0 else np.zeros_like(t)

    return _run(integrand, side, warnings)
