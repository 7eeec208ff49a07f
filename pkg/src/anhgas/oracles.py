"""Independent ground-truth machinery.

Adaptive Gauss-Kronrod quadrature on finite and semi-infinite intervals,
safeguarded series summation with geometric tail bounds, truncated-basis
diagonalization, and a seeded Metropolis sampler.  Everything here is the
oracle side of a two-route check, so it deliberately shares no code with
the closed-form evaluations it validates.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureResult",
    "SeriesTruncation",
    "McEstimate",
    "IntegrandError",
    "SeriesDivergenceError",
    "integrate_finite",
    "integrate_semi_infinite",
    "sum_until_tail_bound",
    "diagonalize_truncated",
    "diagonalize_converged",
    "metropolis_expectation",
]


class IntegrandError(RuntimeError):
    """The integrand returned NaN; the message carries the location."""


class SeriesDivergenceError(RuntimeError):
    """Series terms failed the monotone-decay policy."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class SeriesTruncation:
    n_max: int
    i_max: int = 0
    j_max: int = 0
    tail_estimate: float = 0.0
    condition: str = "monotone-decay"


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    acceptance_rate: float
    tuning_flagged: bool = False


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15 adaptive quadrature
# ---------------------------------------------------------------------------

# QUADPACK abscissae and weights for the (G7, K15) pair on [-1, 1]
_XGK = (
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993945, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
)
_WGK = (
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
)
_WG = (
    0.1294849661688697, 0.2797053914892767,
    0.3818300505051189, 0.4179591836734694,
)


def _gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel; returns (K15 value, error estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fc = f(mid)
    if math.isnan(fc):
        raise IntegrandError(f"integrand returned NaN at {mid!r}")
    gauss = _WG[3] * fc
    kron = _WGK[7] * fc
    for i in range(7):
        dx = half * _XGK[i]
        f1 = f(mid - dx)
        f2 = f(mid + dx)
        if math.isnan(f1) or math.isnan(f2):
            where = mid - dx if math.isnan(f1) else mid + dx
            raise IntegrandError(f"integrand returned NaN at {where!r}")
        s = f1 + f2
        kron += _WGK[i] * s
        if i % 2 == 1:
            gauss += _WG[i // 2] * s
    return kron * half, abs(kron - gauss) * half


def integrate_finite(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-300,
    max_evals: int = 200_000,
) -> QuadratureResult:
    """Adaptive bisection with Gauss-Kronrod panels on [a, b]."""
    if not (rel_tol > 0.0 and abs_tol > 0.0):
        raise ValueError("tolerances must be positive")
    val, err = _gk15(f, a, b)
    heap: list[tuple[float, float, float, float, float]] = [(-err, a, b, val, err)]
    total, total_err = val, err
    evals = 15
    while total_err > max(abs_tol, rel_tol * abs(total)) and evals + 30 <= max_evals:
        neg, lo, hi, v, e = heapq.heappop(heap)
        midpoint = 0.5 * (lo + hi)
        if midpoint == lo or midpoint == hi:
            # interval at float resolution; keep its estimate
            heapq.heappush(heap, (0.0, lo, hi, v, e))
            break
        v1, e1 = _gk15(f, lo, midpoint)
        v2, e2 = _gk15(f, midpoint, hi)
        evals += 30
        total += v1 + v2 - v
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, lo, midpoint, v1, e1))
        heapq.heappush(heap, (-e2, midpoint, hi, v2, e2))
    # re-sum in a fixed order for reproducibility and to refresh the error
    panels = sorted((lo, hi, v, e) for _, lo, hi, v, e in heap)
    total = math.fsum(p[2] for p in panels)
    total_err = math.fsum(p[3] for p in panels)
    converged = total_err <= max(abs_tol, rel_tol * abs(total))
    return QuadratureResult(total, total_err, evals, converged)


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-300,
    transform: str = "rational",
    max_evals: int = 200_000,
) -> QuadratureResult:
    """Integral of f over [a, inf).

    The interval is first mapped onto (0, 1); ``rational`` uses
    y = a + t/(1-t), ``exp`` uses y = a - ln(1-t).  The two transforms
    must agree within tolerances (transform-invariance property).
    """
    if transform == "rational":

        def g(t: float) -> float:
            w = 1.0 - t
            return f(a + t / w) / (w * w)

    elif transform == "exp":

        def g(t: float) -> float:
            w = 1.0 - t
            return f(a - math.log(w)) / w

    else:
        raise ValueError(f"unknown transform {transform!r}")
    return integrate_finite(g, 0.0, 1.0, rel_tol=rel_tol, abs_tol=abs_tol,
                            max_evals=max_evals)


# ---------------------------------------------------------------------------
# series summation with a geometric tail bound
# ---------------------------------------------------------------------------

def sum_until_tail_bound(
    term: Callable[[int], float],
    rel_tol: float = 1e-8,
    window: int = 8,
    max_terms: int = 2_000_000,
    n_start: int = 0,
) -> tuple[float, SeriesTruncation]:
    """Sum term(n) for n >= n_start until a geometric tail bound closes.

    Terms must eventually be positive and decreasing; once the trailing
    window confirms that, the dropped remainder is bounded by
    t_last * r / (1 - r) with r the worst consecutive ratio in the window.
    Growing windows raise SeriesDivergenceError (the runtime face of the
    spectrum positivity conditions).
    """
    total = 0.0
    recent: list[float] = []
    n = n_start
    grow_strikes = 0
    while n < n_start + max_terms:
        t = term(n)
        if math.isnan(t):
            raise IntegrandError(f"series term returned NaN at n={n}")
        total += t
        recent.append(t)
        if len(recent) > window:
            recent.pop(0)
        if len(recent) == window:
            positive = all(u >= 0.0 for u in recent)
            decreasing = all(recent[k + 1] <= recent[k] for k in range(window - 1))
            if positive and decreasing and recent[0] > 0.0:
                ratios = [
                    recent[k + 1] / recent[k]
                    for k in range(window - 1)
                    if recent[k] > 0.0
                ]
                r = max(ratios) if ratios else 0.0
                if r < 1.0:
                    tail = recent[-1] * r / (1.0 - r) if r > 0.0 else 0.0
                    if tail <= rel_tol * max(abs(total), 1e-300):
                        return total, SeriesTruncation(n_max=n, tail_estimate=tail)
            elif not positive or recent[-1] > recent[0]:
                # growing or sign-flipping window: strike, eventually abort
                if abs(recent[-1]) > abs(recent[0]) and abs(recent[-1]) > rel_tol * abs(total):
                    grow_strikes += 1
                    if grow_strikes >= 6 and n > n_start + 4 * window:
                        raise SeriesDivergenceError(
                            "series not convergent under monotone-decay policy "
                            f"(terms growing near n={n}; positivity condition violated?)"
                        )
        n += 1
    raise SeriesDivergenceError(
        f"series did not meet tail bound within {max_terms} terms"
    )


# ---------------------------------------------------------------------------
# truncated-basis diagonalization
# ---------------------------------------------------------------------------

def diagonalize_truncated(h: np.ndarray, k: int) -> np.ndarray:
    """The k lowest eigenvalues of a dense symmetric matrix, ascending."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"matrix must be square, got shape {h.shape}")
    n = h.shape[0]
    if n > 2000:
        raise ValueError(f"dimension {n} exceeds the supported 2000")
    if not (1 <= k <= n):
        raise ValueError(f"k={k} outside 1..{n}")
    scale = max(1.0, float(np.max(np.abs(h))))
    asym = float(np.max(np.abs(h - h.T)))
    if asym > 1e-12 * scale:
        raise ValueError(f"matrix asymmetry {asym:.3e} exceeds 1e-12 * scale")
    return np.linalg.eigvalsh(h)[:k]


def diagonalize_converged(
    build: Callable[[int], np.ndarray],
    k: int,
    n_start: int = 200,
    drift_tol: float = 1e-8,
    n_cap: int = 2000,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Double the basis until the k lowest eigenvalues stop drifting.

    Returns (eigenvalues, per-eigenvalue converged flags, basis size used).
    """
    n = n_start
    vals = diagonalize_truncated(build(n), k)
    while 2 * n <= n_cap:
        n *= 2
        new = diagonalize_truncated(build(n), k)
        drift = np.abs(new - vals) / np.maximum(np.abs(new), 1e-300)
        vals = new
        if np.all(drift <= drift_tol):
            return vals, np.ones(k, dtype=bool), n
    new = diagonalize_truncated(build(min(2 * n, n_cap)), k) if n < n_cap else vals
    drift = np.abs(new - vals) / np.maximum(np.abs(new), 1e-300)
    return new, drift <= drift_tol, min(2 * n, n_cap)


# ---------------------------------------------------------------------------
# seeded Metropolis sampler
# ---------------------------------------------------------------------------

def metropolis_expectation(
    log_weight: Callable[[float], float],
    observable: Callable[[float], float],
    proposal_scale: float,
    n_samples: int,
    burn_in: int,
    seed: int,
    x0: float = 1.0,
    n_batches: int = 32,
) -> McEstimate:
    """Random-walk Metropolis estimate of <observable> under exp(log_weight).

    Deterministic for a fixed seed; the standard error comes from batch
    means, so short-range autocorrelation is accounted for.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10^4")
    rng = np.random.default_rng(seed)
    total = burn_in + n_samples
    steps = rng.normal(0.0, proposal_scale, size=total)
    log_us = np.log(rng.random(size=total))
    x = float(x0)
    lw = log_weight(x)
    if not math.isfinite(lw):
        raise ValueError(f"log_weight not finite at start point {x0}")
    accepted = 0
    values = np.empty(n_samples)
    for i in range(total):
        prop = x + steps[i]
        lw_prop = log_weight(prop)
        if lw_prop - lw > log_us[i]:
            x = prop
            lw = lw_prop
            accepted += 1
        if i >= burn_in:
            values[i - burn_in] = observable(x)
    acc = accepted / total
    usable = (n_samples // n_batches) * n_batches
    batches = values[:usable].reshape(n_batches, -1).mean(axis=1)
    mean = float(values.mean())
    std_error = float(batches.std(ddof=1) / math.sqrt(n_batches))
    return McEstimate(
        mean=mean,
        std_error=std_error,
        samples=n_samples,
        seed=seed,
        acceptance_rate=acc,
        tuning_flagged=not (0.1 <= acc <= 0.9),
    )
