"""Path simulation: unconditioned skeletons, the process conditioned to stay
positive (discrete Doob h-transform with harmonic function W), and the
passage-time subordinators.
"""

from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import DegeneracyError, DomainError, ResolutionError, UnsupportedSpecError
from .inversion import MP_LOCK
from .levy_model import (AtomicJumps, ExponentialJumps, NoJumps, ProcessSpec, StableJumps,
                         SubordinatorSpec, TemperedStableJumps, esscher, phi)

MAX_JUMPS_PER_STEP = 10.0
N_CANDIDATES = 64
MIN_ACCEPTANCE = 1e-4
TIE_TOL = 1e-12


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# --------------------------------------------------------------------------
# Exact stable draws
# --------------------------------------------------------------------------

def stable_negative(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Totally skewed-left stable variables X with E exp(lam X) = exp(lam^alpha), alpha in (1, 2).

    Chambers-Mallows-Stuck with beta = -1, rescaled by |cos(pi alpha / 2)|^{1/alpha}.
    """
    t = math.tan(math.pi * alpha / 2)
    b = math.atan(-t) / alpha
    s = (1 + t * t) ** (1 / (2 * alpha)) * (-math.cos(math.pi * alpha / 2)) ** (1 / alpha)
    u = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    aub = alpha * (u + b)
    return s * np.sin(aub) / np.cos(u) ** (1 / alpha) * (np.cos(u - aub) / w) ** ((1 - alpha) / alpha)


def stable_positive(beta: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive stable variables S with E exp(-lam S) = exp(-lam^beta), beta in (0, 1) (Kanter)."""
    u = rng.uniform(0.0, math.pi, size)
    e = rng.standard_exponential(size)
    a = (np.sin(beta * u) ** beta * np.sin((1 - beta) * u) ** (1 - beta) / np.sin(u)) ** (1 / (1 - beta))
    return (a / e) ** ((1 - beta) / beta)


# --------------------------------------------------------------------------
# Increment law of the skeleton
# --------------------------------------------------------------------------

class IncrementSampler:
    """Draws xi_{t+dt} - xi_t for arrays of step sizes dt.

    Stable, compound-Poisson and Brownian parts are exact.  Tempered stable
    jumps smaller than ``delta`` are replaced by a Gaussian with the same
    variance, the drift being set so that E[increment] = psi'(0) dt.
    """

    def __init__(self, spec: ProcessSpec, dt: float):
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        self.spec = spec
        self.dt = float(dt)
        j = spec.jumps
        self.delta = None
        self.small_var = 0.0
        if isinstance(j, StableJumps):
            self.drift = spec.a + j.outer_mean()
        elif isinstance(j, TemperedStableJumps):
            self._setup_tempered(j)
        elif isinstance(j, (ExponentialJumps, AtomicJumps)):
            self.drift = spec.a - j.inner_mean()
            if j.total_rate() * dt > MAX_JUMPS_PER_STEP:
                raise ResolutionError(
                    f"dt={dt} gives {j.total_rate() * dt:.3g} expected jumps per step "
                    f"(limit {MAX_JUMPS_PER_STEP:g}); reduce dt")
        else:
            self.drift = spec.a

    def _setup_tempered(self, j: TemperedStableJumps):
        c, a, th = j.density_constant, j.alpha, j.theta
        v_gauss = self.spec.sigma ** 2

        def moments(delta):
            with MP_LOCK, mpmath.workdps(20):
                d, t = mpmath.mpf(delta), mpmath.mpf(th)
                rate = c * t ** a * mpmath.gammainc(-a, t * d)
                big_mean = c * t ** (a - 1) * mpmath.gammainc(1 - a, t * d)
                var = c * t ** (a - 2) * mpmath.gammainc(2 - a, 0, t * d)
                k3 = c * t ** (a - 3) * mpmath.gammainc(3 - a, 0, t * d)
            return float(rate), float(big_mean), float(var), float(k3)

        def skew_ok(delta):
            _, _, var, k3 = moments(delta)
            return k3 <= 1e-3 * (v_gauss + var) ** 1.5 * math.sqrt(self.dt)

        def budget_ok(delta):
            return moments(delta)[0] * self.dt <= 1.0

        def smallest(pred):
            lo, hi = 1e-300, 1.0
            while not pred(hi):
                hi *= 2.0
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if pred(mid):
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1 + 1e-6:
                    break
            return hi

        def largest(pred):
            lo, hi = 1e-300, 1.0
            while pred(hi):
                hi *= 2.0
            if not pred(lo):
                return lo
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if pred(mid):
                    lo = mid
                else:
                    hi = mid
                if hi / lo < 1 + 1e-6:
                    break
            return lo

        # skewness test holds for small delta; the rate budget holds for large delta
        d_skew = largest(skew_ok)
        d_budget = smallest(budget_ok)
        self.delta = max(d_skew, d_budget)
        self.rate, big_mean, self.small_var, _ = moments(self.delta)
        self.drift = self.spec.a + float(j.dlaplace(0.0)) + big_mean

    def draw(self, rng: np.random.Generator, dt) -> np.ndarray:
        dt = np.asarray(dt, dtype=float)
        spec, j = self.spec, self.spec.jumps
        out = self.drift * dt
        var = spec.sigma ** 2 + self.small_var
        if var > 0:
            out = out + np.sqrt(var * dt) * rng.standard_normal(dt.shape)
        if isinstance(j, StableJumps):
            out = out + (j.scale * dt) ** (1 / j.alpha) * stable_negative(j.alpha, dt.shape, rng)
        elif isinstance(j, TemperedStableJumps):
            out = out - self._tempered_big(rng, dt, j)
        elif isinstance(j, ExponentialJumps):
            counts = rng.poisson(j.rate * dt)
            sizes = np.zeros(dt.shape)
            pos = counts > 0
            sizes[pos] = rng.gamma(counts[pos], j.mean)
            out = out - sizes
        elif isinstance(j, AtomicJumps):
            for s, r in zip(j.sizes, j.rates):
                out = out - s * rng.poisson(r * dt)
        return out

    def _tempered_big(self, rng, dt, j: TemperedStableJumps) -> np.ndarray:
        counts = rng.poisson(self.rate * dt).ravel()
        total = int(counts.sum())
        sizes = np.empty(0)
        a, th, delta = j.alpha, j.theta, self.delta
        while sizes.size < total:
            need = total - sizes.size
            y = delta * rng.uniform(size=2 * need + 8) ** (-1.0 / a)
            keep = rng.uniform(size=y.size) < np.exp(-th * (y - delta))
            sizes = np.concatenate([sizes, y[keep]])
        owner = np.repeat(np.arange(counts.size), counts)
        return np.bincount(owner, weights=sizes[:total], minlength=counts.size).reshape(dt.shape)


# --------------------------------------------------------------------------
# Paths and functionals
# --------------------------------------------------------------------------

class PathKind(str, enum.Enum):
    UNCONDITIONED = "Unconditioned"
    CONDITIONED = "Conditioned"
    KILLED_AT_ZERO = "KilledAtZero"


@dataclass
class SamplePath:
    times: np.ndarray
    values: np.ndarray
    start: float
    kind: PathKind
    dt: float | None = None
    approximate_start: bool = False

    def to_csv(self) -> str:
        lines = ["t,value"] + [f"{t!r},{v!r}" for t, v in zip(self.times.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"


@dataclass
class SubordinatorPath:
    levels: np.ndarray
    times: np.ndarray
    killed_at: float | None = None


@dataclass
class PathFunctionals:
    supremum: np.ndarray
    future_infimum: np.ndarray
    min_index: int
    min_time: float
    min_value: float
    tie: bool


class Passage(NamedTuple):
    t_first: float | None
    t_last: float | None
    censored: bool


def functionals(path: SamplePath) -> PathFunctionals:
    v = np.asarray(path.values, dtype=float)
    if v.size == 0:
        raise DomainError("functionals need a nonempty path")
    sup = np.maximum.accumulate(v)
    fut = np.minimum.accumulate(v[::-1])[::-1]
    i = int(np.argmin(v))
    tie = int(np.count_nonzero(np.abs(v - v[i]) <= TIE_TOL * max(1.0, abs(v[i])))) > 1
    return PathFunctionals(sup, fut, i, float(path.times[i]), float(v[i]), tie)


def passage_times(path: SamplePath, x: float) -> Passage:
    """First grid time with value >= x, and the grid time closing the last step
    that started at or below x.

    Both bracket the continuous-time passage from the right, so
    t_first <= t_last on every path.  ``censored`` is set when the path ends
    at or below x; the last passage then lies beyond the horizon and
    ``t_last`` is None.
    """
    if not x >= 0:
        raise DomainError(f"passage level must be >= 0, got {x}")
    v, t = np.asarray(path.values), np.asarray(path.times)
    above = np.nonzero(v >= x)[0]
    below = np.nonzero(v <= x)[0]
    censored = bool(v[-1] <= x)
    t_first = float(t[above[0]]) if above.size else None
    t_last = float(t[below[-1] + 1]) if below.size and not censored else None
    return Passage(t_first, t_last, censored)


def _check_grid(horizon: float, dt: float):
    if not horizon > 0 or not math.isfinite(horizon):
        raise DomainError(f"horizon must be positive and finite, got {horizon}")
    if not 0 < dt < horizon:
        raise DomainError(f"dt must satisfy 0 < dt < horizon, got dt={dt}, horizon={horizon}")


def sample_unconditioned(spec: ProcessSpec, horizon: float, dt: float, rng, x0: float = 0.0) -> SamplePath:
    _check_grid(horizon, dt)
    rng = as_generator(rng)
    n = int(round(horizon / dt))
    inc = IncrementSampler(spec, dt).draw(rng, np.full(n, dt))
    values = np.concatenate([[x0], x0 + np.cumsum(inc)])
    return SamplePath(np.arange(n + 1) * dt, values, float(x0), PathKind.UNCONDITIONED, dt)


def sample_killed(spec: ProcessSpec, x0: float, horizon: float, dt: float, rng) -> SamplePath:
    """Skeleton started at x0 and stopped at the first grid time with value < 0."""
    path = sample_unconditioned(spec, horizon, dt, rng, x0=x0)
    neg = np.nonzero(path.values < 0)[0]
    end = neg[0] + 1 if neg.size else path.values.size
    return SamplePath(path.times[:end], path.values[:end], float(x0), PathKind.KILLED_AT_ZERO, dt)


# --------------------------------------------------------------------------
# Conditioned process
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveStep:
    """Step rule dt = min(dt_max, 1/psi_nat(1/ell)) with length scale

        ell = v * clip(gap_factor * g / v, rho_min, rho),

    v the current value and g its distance to the running minimum or to the
    nearest tracked passage level, whichever is closer.  Steps have relative
    size rho far from these features and shrink to rho_min next to them,
    where grid minima and grid passage times are most sensitive to
    excursions missed between grid points.
    """

    rho: float = 0.1
    rho_min: float = 0.01
    gap_factor: float = 0.25
    dt_max: float = math.inf

    def __post_init__(self):
        if not 0 < self.rho_min <= self.rho:
            raise DomainError("adaptive step needs 0 < rho_min <= rho")


@dataclass
class ConditionedBatch:
    start: float
    approximate_start: bool
    final_time: np.ndarray
    final_value: np.ndarray
    final_scale: np.ndarray
    stopped: np.ndarray
    min_value: np.ndarray
    min_time: np.ndarray
    min_tie: np.ndarray
    checkpoints: np.ndarray
    checkpoint_values: np.ndarray
    segment_min: np.ndarray
    levels: np.ndarray
    first_passage: np.ndarray
    last_passage: np.ndarray
    paths: list | None = None
    n_steps: int = 0

    def future_infimum(self) -> np.ndarray:
        """J at each checkpoint, over the simulated horizon."""
        suffix = np.minimum.accumulate(self.segment_min[:, ::-1], axis=1)[:, ::-1]
        return np.minimum(self.checkpoint_values, suffix[:, 1:])


def zero_start(spec: ProcessSpec, dt: float | None = None, t_ref: float | None = None) -> float:
    """Start level standing in for x0 = 0.

    Uniform steps: max(10 sigma sqrt(dt), 1/Phi_nat(1/dt)), the spatial scale
    of one step.  Adaptive steps: 1e-3 / Phi_nat(1/t_ref), well below the
    scale of the process at the first time of interest.
    """
    nat = esscher(spec)
    if dt is not None:
        return max(10.0 * spec.sigma * math.sqrt(dt), 1.0 / phi(nat, 1.0 / dt))
    return 1e-3 / phi(nat, 1.0 / t_ref)


def simulate_conditioned(spec: ProcessSpec, sf, x0: float, n_paths: int, rng, *,
                         horizon: float, dt: float | None = None, step: AdaptiveStep | None = None,
                         stop_level: float | None = None, checkpoints: Sequence[float] = (),
                         levels: Sequence[float] = (), record: bool = False,
                         n_candidates: int = N_CANDIDATES) -> ConditionedBatch:
    """Run ``n_paths`` independent conditioned chains started at x0.

    Each step draws ``n_candidates`` proposals x + Delta from the skeleton's
    increment law and selects one with probability proportional to
    W(x + Delta) 1{x + Delta > 0} (sampling-importance-resampling estimate of
    the h-transform kernel).  Exactly one of ``dt`` (uniform grid) and
    ``step`` (adaptive grid) must be given.  Checkpoint times are hit
    exactly; paths stop at ``horizon`` or on reaching ``stop_level``.
    """
    if (dt is None) == (step is None):
        raise DomainError("give exactly one of dt and step")
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if dt is not None:
        _check_grid(horizon, dt)
    if not x0 >= 0:
        raise DomainError(f"x0 must be >= 0, got {x0}")
    rng = as_generator(rng)
    cps = np.asarray(sorted(checkpoints), dtype=float)
    if cps.size and (cps[0] <= 0 or cps[-1] > horizon):
        raise DomainError("checkpoints must lie in (0, horizon]")
    targets = np.append(cps[cps < horizon], horizon)
    n_cp = cps.size
    lev = np.asarray(levels, dtype=float)
    approx = x0 == 0
    nat = esscher(spec)
    if approx and dt is None:
        # first time of interest: first target, or the time scale of the lowest level
        scales = [lv for lv in (*lev.tolist(), stop_level) if lv is not None and lv > 0]
        t_ref = float(targets[0])
        if scales:
            t_ref = min(t_ref, 1.0 / float(nat.psi(1.0 / min(scales))))
        start = zero_start(spec, t_ref=t_ref)
    elif approx:
        start = zero_start(spec, dt=dt)
    else:
        start = float(x0)
    inc = IncrementSampler(spec, dt if dt is not None else min(step.dt_max, horizon))
    if dt is not None:
        target_steps = np.rint(targets / dt).astype(np.int64)
        targets = target_steps * dt

    n = int(n_paths)
    v = np.full(n, start)
    t = np.zeros(n)
    k_steps = np.zeros(n, dtype=np.int64)
    m = v.copy()
    mt = np.zeros(n)
    tie = np.zeros(n, dtype=bool)
    scale = np.zeros(n)
    nxt = np.zeros(n, dtype=np.int64)
    cp_val = np.full((n, n_cp), np.nan)
    seg_min = np.full((n, n_cp + 1), np.nan)
    seg_min[:, 0] = start
    first = np.full((n, lev.size), np.nan)
    last = np.full((n, lev.size), np.nan)
    first[:, start >= lev] = 0.0
    stopped = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    log = [(np.arange(n), t.copy(), v.copy())] if record else None
    W = sf.W_array
    steps = 0

    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        steps += 1
        vi = v[idx]
        if dt is None:
            gap = vi - m[idx]
            if lev.size:
                gap = np.minimum(gap, np.abs(vi[:, None] - lev).min(axis=1))
            rel = np.clip(step.gap_factor * gap / vi, step.rho_min, step.rho)
            ell = vi * rel
            h = np.minimum(step.dt_max, 1.0 / np.asarray(nat.psi(1.0 / ell)))
            rem = targets[nxt[idx]] - t[idx]
            hit = h >= rem
            h = np.where(hit, rem, h)
        else:
            ell = np.full(idx.size, 1.0 / phi(nat, 1.0 / dt)) if steps == 1 else scale[idx]
            h = np.full(idx.size, dt)
            hit = k_steps[idx] + 1 >= target_steps[nxt[idx]]
        scale[idx] = ell
        prop = vi[:, None] + inc.draw(rng, np.repeat(h[:, None], n_candidates, axis=1))
        w = W(prop)
        w[prop <= 0] = 0.0
        tot = w.sum(axis=1)
        here = W(vi)
        bad = ~(tot > 0) | (tot / n_candidates < MIN_ACCEPTANCE * here)
        if bad.any():
            i = int(idx[np.argmax(bad)])
            raise DegeneracyError(
                f"h-transform acceptance below {MIN_ACCEPTANCE:g} at x={v[i]:.6g}, t={t[i]:.6g}; "
                "the start level is too small for the step size")
        cs = np.cumsum(w, axis=1)
        u = rng.uniform(size=idx.size) * tot
        pick = np.minimum((cs <= u[:, None]).sum(axis=1), n_candidates - 1)
        vn = prop[np.arange(idx.size), pick]

        if dt is None:
            tn = np.where(hit, targets[nxt[idx]], t[idx] + h)
        else:
            k_steps[idx] += 1
            tn = k_steps[idx] * dt
        v[idx], t[idx] = vn, tn

        mi = m[idx]
        same = np.abs(vn - mi) <= TIE_TOL * np.maximum(1.0, np.abs(mi))
        lower = (vn < mi) & ~same
        tie[idx] = np.where(lower, False, tie[idx] | same)
        m[idx] = np.where(lower, vn, mi)
        mt[idx] = np.where(lower, tn, mt[idx])

        seg = nxt[idx]
        seg_min[idx, seg] = np.fmin(seg_min[idx, seg], vn)
        if lev.size:
            fi = first[idx]
            first[idx] = np.where(np.isnan(fi) & (vn[:, None] >= lev), tn[:, None], fi)
            # right end of the last step that started at or below the level
            last[idx] = np.where(vi[:, None] <= lev, tn[:, None], last[idx])
        if record:
            log.append((idx.copy(), tn.copy(), vn.copy()))

        hi_idx = idx[hit]
        if hi_idx.size:
            j = nxt[hi_idx]
            rec = j < n_cp
            cp_val[hi_idx[rec], j[rec]] = v[hi_idx[rec]]
            nxt[hi_idx] += 1
            more = nxt[hi_idx] <= n_cp
            seg_min[hi_idx[more], nxt[hi_idx[more]]] = v[hi_idx[more]]
        done = nxt[idx] >= targets.size
        if stop_level is not None:
            reach = vn >= stop_level
            stopped[idx] = reach
            done |= reach
        active[idx[done]] = False

    paths = None
    if record:
        paths = []
        for p in range(n):
            ts, vs = [], []
            for ids, tt, vv in log:
                sel = np.nonzero(ids == p)[0]
                if sel.size:
                    ts.append(tt[sel[0]])
                    vs.append(vv[sel[0]])
            paths.append((np.array(ts), np.array(vs)))
    return ConditionedBatch(start=start, approximate_start=approx, final_time=t, final_value=v,
                            final_scale=scale, stopped=stopped, min_value=m, min_time=mt, min_tie=tie,
                            checkpoints=cps, checkpoint_values=cp_val, segment_min=seg_min, levels=lev,
                            first_passage=first, last_passage=last, paths=paths, n_steps=steps)


def sample_conditioned(spec: ProcessSpec, sf, x0: float, horizon: float, dt: float, rng,
                       n_candidates: int = N_CANDIDATES) -> SamplePath:
    """One conditioned path on the uniform grid k * dt (x0 = 0 uses a small positive start)."""
    batch = simulate_conditioned(spec, sf, x0, 1, rng, horizon=horizon, dt=dt, record=True,
                                 n_candidates=n_candidates)
    times, values = batch.paths[0]
    return SamplePath(times, values, float(x0), PathKind.CONDITIONED, dt, batch.approximate_start)


# --------------------------------------------------------------------------
# Subordinators
# --------------------------------------------------------------------------

class _NumericTail:
    """Tabulated jump tail of a numeric subordinator for inverse-transform sampling."""

    def __init__(self, sub: SubordinatorSpec, lo: float = 1e-8, hi: float = 1e4, per_decade: int = 24):
        n = int(per_decade * math.log10(hi / lo)) + 1
        self.x = np.geomspace(lo, hi, n)
        vals = np.array([max(sub.numeric_tail(x)[0], 0.0) for x in self.x])
        vals = np.minimum.accumulate(vals)
        keep = vals > 0
        self.x, self.tail = self.x[keep], vals[keep]
        if self.x.size < 2:
            raise UnsupportedSpecError("numeric jump tail vanishes on the tabulation range")
        self.logx, self.logt = np.log(self.x), np.log(self.tail)

    def tail_at(self, x):
        return np.exp(np.interp(np.log(x), self.logx, self.logt))

    def quantile(self, level):
        # inverse of the decreasing tail on the table
        return np.exp(np.interp(-np.log(level), -self.logt, self.logx))

    def small_mean(self, delta: float) -> float:
        """int_0^delta x nu(dx) = int_0^delta (nu_bar(u) - nu_bar(delta)) du."""
        x = np.geomspace(self.x[0], delta, 200)
        f = self.tail_at(x) - self.tail_at(delta)
        body = integrate.trapezoid(f, x)
        p = (self.logt[1] - self.logt[0]) / (self.logx[1] - self.logx[0])
        head = self.tail[0] * self.x[0] / (1.0 + p) if p > -1 else 0.0
        return float(body + head)


# tail tables cost one inversion per node, so they are built once per process
_TAIL_CACHE: dict[str, _NumericTail] = {}
_TAIL_LOCK = threading.Lock()


def _tail_table(sub: SubordinatorSpec) -> _NumericTail:
    key = json.dumps([sub.source.to_json() if sub.source is not None else None, sub.k, sub.d],
                     sort_keys=True)
    with _TAIL_LOCK:
        tab = _TAIL_CACHE.get(key)
        if tab is None:
            tab = _TAIL_CACHE[key] = _NumericTail(sub)
    return tab


class SubordinatorSampler:
    """Exact increments for closed-form subordinators; truncated compound
    Poisson with small-jump mean compensation for numeric tails."""

    def __init__(self, sub: SubordinatorSpec):
        self.sub = sub
        self._table = _tail_table(sub) if sub.nu == "numeric" else None

    def increments(self, rng: np.random.Generator, h: np.ndarray, size: int) -> np.ndarray:
        """Matrix (size, len(h)) of independent increments over level steps h."""
        sub, p = self.sub, self.sub.nu_params
        h = np.asarray(h, dtype=float)
        shape = (size, h.size)
        out = np.broadcast_to(sub.d * h, shape).copy()
        if sub.nu == "stable":
            b = p["beta"]
            out += (p["coef"] * h) ** (1 / b) * stable_positive(b, shape, rng)
        elif sub.nu == "inverse_gaussian":
            s, mu = p["sigma"], p["mu"]
            hh = np.broadcast_to(h, shape)
            if mu > 0:
                out += rng.wald(hh / mu, (hh / s) ** 2)
            else:
                out += (hh / s) ** 2 / rng.standard_normal(shape) ** 2
        elif sub.nu == "numeric":
            out += self._numeric(rng, h, shape)
        return out

    def _numeric(self, rng, h, shape):
        tab = self._table
        h_max = float(h.max())
        # truncation level with at most MAX_JUMPS_PER_STEP / 2 expected jumps per step
        target = 0.5 * MAX_JUMPS_PER_STEP / h_max
        if tab.tail[0] <= target:
            delta = float(tab.x[0])
        else:
            delta = float(tab.quantile(target))
        rate = float(tab.tail_at(delta))
        if rate * h_max > MAX_JUMPS_PER_STEP:
            raise ResolutionError(f"level step {h_max} gives {rate * h_max:.3g} jumps per step")
        small = tab.small_mean(delta)
        counts = rng.poisson(rate * np.broadcast_to(h, shape))
        total = int(counts.sum())
        sizes = tab.quantile(rate * rng.uniform(size=total)) if total else np.empty(0)
        owner = np.repeat(np.arange(counts.size), counts.ravel())
        jumps = np.bincount(owner, weights=sizes, minlength=counts.size).reshape(shape)
        return small * h + jumps

    def at_levels(self, rng, levels: Sequence[float], size: int) -> tuple[np.ndarray, np.ndarray]:
        """T at increasing ``levels`` for ``size`` realisations, and the killing levels.

        Values beyond an independent Exp(k) killing level are +inf.
        """
        lev = np.asarray(levels, dtype=float)
        if lev.size == 0 or np.any(np.diff(lev) <= 0) or lev[0] < 0:
            raise DomainError("levels must be nonnegative and strictly increasing")
        h = np.diff(np.concatenate([[0.0], lev]))
        times = np.cumsum(self.increments(rng, h, size), axis=1)
        killed = np.full(size, math.inf)
        if self.sub.k > 0:
            killed = rng.exponential(1.0 / self.sub.k, size)
            times[lev[None, :] >= killed[:, None]] = math.inf
        return times, killed


def sample_subordinator(sub: SubordinatorSpec, level_max: float, dx: float, rng) -> SubordinatorPath:
    if not level_max > 0:
        raise DomainError(f"level_max must be positive, got {level_max}")
    if not 0 < dx < level_max:
        raise DomainError(f"dx must satisfy 0 < dx < level_max, got {dx}")
    rng = as_generator(rng)
    n = int(round(level_max / dx))
    levels = np.arange(n + 1) * dx
    times, killed = SubordinatorSampler(sub).at_levels(rng, levels[1:], 1)
    k = float(killed[0])
    return SubordinatorPath(levels, np.concatenate([[0.0], times[0]]), k if k <= level_max else None)
