"""Self-contained special functions used by the gas modules.

Modified Bessel K of real order (fractional orders are first-class),
its derivative, Whittaker W, and the upper incomplete gamma function,
each with a log-scaled variant so callers can multiply huge exponentials
by tiny function values without overflow.

Branch policy for K_nu:

* ``x <= 4``    power series through the base orders in [0, 1] plus the
                stable upward recurrence K_{v+1} = K_{v-1} + (2v/x) K_v;
* large ``x``   the divergent asymptotic series, used only when its
                terms provably shrink below machine precision;
* otherwise     adaptive quadrature of int_0^inf exp(-x cosh t) cosh(vt) dt.

Branch boundaries are covered by cross-branch consistency tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SpecialFunctionResult",
    "SpecialFunctionDomainError",
    "SpecialFunctionRangeError",
    "SpecialFunctionOverflow",
    "bessel_k",
    "bessel_k_scaled",
    "log_bessel_k",
    "bessel_k_derivative",
    "bessel_k_derivative_scaled",
    "log_abs_bessel_k_derivative",
    "whittaker_w",
    "log_whittaker_w",
    "upper_incomplete_gamma",
    "log_upper_incomplete_gamma",
    "upper_incomplete_gamma_ext",
    "log_upper_incomplete_gamma_ext",
    "exp1",
]

EULER_GAMMA = 0.5772156649015328606065120900824024

# branch boundaries for bessel_k
_SERIES_X_MAX = 4.0
_ASYM_X_MIN = 16.0
_NU_MAX = 50.0
_NEAR_INT = 1e-3          # fractional orders closer than this to an integer
_INT_SNAP = 1e-11         # ...and closer than this are treated as integers
_LOG_HUGE = 700.0         # ln of the unscaled overflow threshold


class SpecialFunctionDomainError(ValueError):
    """Argument outside the mathematical domain (e.g. x <= 0 for K_nu)."""


class SpecialFunctionRangeError(ValueError):
    """Arguments inside the domain but outside the supported region."""


class SpecialFunctionOverflow(OverflowError):
    """Unscaled value exceeds double range; use the log-scaled variant."""


@dataclass(frozen=True)
class SpecialFunctionResult:
    """A function value with an honest absolute error estimate.

    ``method`` records which evaluation branch produced the value:
    one of ``series``, ``asymptotic``, ``quadrature``, ``recurrence``.
    """

    value: float
    abs_error_estimate: float
    method: str


# ---------------------------------------------------------------------------
# modified Bessel K
# ---------------------------------------------------------------------------

def _i_series(order: float, x: float) -> float:
    # I_order(x) = sum_k (x/2)^(2k+order) / (k! Gamma(order+k+1)),
    # used only for order in (-1, 1) where every Gamma argument is positive.
    half = 0.5 * x
    q = half * half
    term = math.exp(order * math.log(half) - math.lgamma(order + 1.0))
    total = term
    for k in range(1, 400):
        term *= q / (k * (order + k))
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def _k_base_fractional(p: float, x: float) -> float:
    # K_p for non-integer p in (0, 1), x <= _SERIES_X_MAX.
    return 0.5 * math.pi * (_i_series(-p, x) - _i_series(p, x)) / math.sin(math.pi * p)


def _k01_integer_series(x: float) -> tuple[float, float]:
    # (K_0, K_1) by the classical log-type series, x <= _SERIES_X_MAX.
    q = 0.25 * x * x
    lx = math.log(0.5 * x)

    i0 = 1.0
    term = 1.0
    k0 = 0.0
    h = 0.0
    for k in range(1, 200):
        term *= q / (k * k)
        h += 1.0 / k
        i0 += term
        k0 += term * h
        if term <= 1e-18 * i0:
            break
    k0 += -(lx + EULER_GAMMA) * i0

    # K_1 = ln(x/2) I_1 + 1/x - (x/4) sum_k [psi(k+1)+psi(k+2)] q^k / (k!(k+1)!)
    i1 = 1.0
    term = 1.0
    s1 = -2.0 * EULER_GAMMA + 1.0      # psi(1)+psi(2) = -2 gamma + 1
    acc = s1
    psum = 1.0
    for k in range(1, 200):
        term *= q / (k * (k + 1))
        psum += 1.0 / k + 1.0 / (k + 1.0)
        acc += term * (-2.0 * EULER_GAMMA + psum)
        i1 += term
        if term <= 1e-18 * i1:
            break
    i1 *= 0.5 * x
    k1 = lx * i1 + 1.0 / x - 0.25 * x * acc
    return k0, k1


def _log_k_small(nu: float, x: float) -> tuple[float, str]:
    """ln K_nu(x) for 0 <= nu <= _NU_MAX and x <= _SERIES_X_MAX.

    The pair (K_p, K_{p+1}) with p in [0, 1) is built by series, then the
    upward ladder K_{v+1} = K_{v-1} + (2v/x) K_v runs in log space, which
    is stable (all terms positive) and immune to overflow.
    """
    m = round(nu)
    rho = nu - m
    if abs(rho) <= _INT_SNAP:
        if m == 0 or m == 1:
            k0, k1 = _k01_integer_series(x)
            return math.log(k1 if m else k0), "series"
        k0, k1 = _k01_integer_series(x)
        lo, hi = math.log(k0), math.log(k1)
        order0, steps = 1.0, m - 1
    else:
        rho_hat = abs(rho)
        l_a = math.log(_k_base_fractional(rho_hat, x))        # ln K_{rho_hat}
        l_b = math.log(_k_base_fractional(1.0 - rho_hat, x))  # ln K_{1-rho_hat}
        if rho > 0.0:
            if m == 0:
                return l_a, "series"
            # K_{rho_hat - 1} = K_{1 - rho_hat} by symmetry
            lo, hi = l_b, l_a
            order0, steps = rho_hat, m
        else:
            if m == 1:
                return l_b, "series"
            lo, hi = l_a, l_b
            order0, steps = 1.0 - rho_hat, m - 1
    order = order0
    for _ in range(steps):
        lo, hi = hi, _logaddexp(lo, math.log(2.0 * order / x) + hi)
        order += 1.0
    return hi, "recurrence"


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if a == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def _k_asymptotic_scaled(nu: float, x: float) -> float | None:
    # K_nu(x) e^x ~ sqrt(pi/2x) sum_k a_k(nu)/x^k; None if the series does
    # not reach machine precision while still decreasing.
    mu = 4.0 * nu * nu
    s = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, 60):
        term *= (mu - (2.0 * k - 1.0) ** 2) / (8.0 * x * k)
        if abs(term) >= prev:
            return None
        s += term
        prev = abs(term)
        if abs(term) <= 1e-17 * abs(s):
            return math.sqrt(math.pi / (2.0 * x)) * s
    return None


def _log_cosh(u: float) -> float:
    u = abs(u)
    return u - math.log(2.0) + math.log1p(math.exp(-2.0 * u))


def _k_quadrature_scaled(nu: float, x: float) -> tuple[float, float]:
    """K_nu(x) e^x by adaptive quadrature of the cosh representation."""
    from .oracles import integrate_semi_infinite

    def integrand(t: float) -> float:
        # exp(-x (cosh t - 1)) cosh(nu t), assembled in log space
        if t >= 350.0:
            return 0.0
        expo = _log_cosh(nu * t) - x * (math.cosh(t) - 1.0)
        if expo < -745.0:
            return 0.0
        return math.exp(expo)

    res = integrate_semi_infinite(integrand, 0.0, rel_tol=1e-12, abs_tol=1e-280)
    return res.value, res.abs_error_estimate


def _validate_k_args(nu: float, x: float) -> float:
    if not (x > 0.0) or math.isnan(x):
        raise SpecialFunctionDomainError(f"bessel_k requires x > 0, got x={x!r}")
    if abs(nu) > _NU_MAX:
        raise SpecialFunctionRangeError(
            f"order |nu|={abs(nu)} outside supported range <= {_NU_MAX}"
        )
    return abs(nu)  # K_{-nu} = K_nu


def log_bessel_k(nu: float, x: float) -> SpecialFunctionResult:
    """ln K_nu(x); never overflows on the supported (nu, x) region."""
    nu = _validate_k_args(nu, x)
    if x <= _SERIES_X_MAX:
        m = round(nu)
        if _INT_SNAP < abs(nu - m) < _NEAR_INT:
            val, err = _k_quadrature_scaled(nu, x)
            return SpecialFunctionResult(
                math.log(val) - x, (err / val) + 1e-15 * (abs(math.log(val)) + x),
                "quadrature",
            )
        lk, method = _log_k_small(nu, x)
        # the dominant small-x error is series cancellation, growing ~ e^(2x)
        err = 1e-15 * (1.0 + nu) + 5e-16 * math.exp(2.0 * x)
        return SpecialFunctionResult(lk, err, method)
    scaled = _k_asymptotic_scaled(nu, x) if x >= _ASYM_X_MIN else None
    if scaled is not None:
        return SpecialFunctionResult(
            math.log(scaled) - x, 1e-14 * max(1.0, x), "asymptotic"
        )
    val, err = _k_quadrature_scaled(nu, x)
    return SpecialFunctionResult(
        math.log(val) - x, (err / val) + 1e-15 * x, "quadrature"
    )


def bessel_k_scaled(nu: float, x: float) -> SpecialFunctionResult:
    """K_nu(x) * e^x, the overflow-tamed form used in closed formulas."""
    nu = _validate_k_args(nu, x)
    if x <= _SERIES_X_MAX:
        m = round(nu)
        if _INT_SNAP < abs(nu - m) < _NEAR_INT:
            val, err = _k_quadrature_scaled(nu, x)
            return SpecialFunctionResult(val, err + 1e-14 * val, "quadrature")
        lk, method = _log_k_small(nu, x)
        lscaled = lk + x
        if lscaled > _LOG_HUGE:
            raise SpecialFunctionOverflow(
                f"bessel_k_scaled({nu}, {x}) overflows; use log_bessel_k"
            )
        v = math.exp(lscaled)
        err = (1e-15 * (1.0 + nu) + 5e-16 * math.exp(2.0 * x)) * v
        return SpecialFunctionResult(v, err, method)
    scaled = _k_asymptotic_scaled(nu, x) if x >= _ASYM_X_MIN else None
    if scaled is not None:
        return SpecialFunctionResult(scaled, 1e-14 * scaled, "asymptotic")
    val, err = _k_quadrature_scaled(nu, x)
    return SpecialFunctionResult(val, err + 1e-14 * val, "quadrature")


def bessel_k(nu: float, x: float) -> SpecialFunctionResult:
    """K_nu(x) for real order, |nu| <= 50, x > 0.

    Raises SpecialFunctionRangeError when the value would not fit in a
    double; callers needing that regime use the scaled or log variants.
    """
    res = log_bessel_k(nu, x)
    if res.value > _LOG_HUGE:
        raise SpecialFunctionRangeError(
            f"bessel_k({nu}, {x}) exceeds double range; use log_bessel_k"
        )
    if res.value < -_LOG_HUGE:
        raise SpecialFunctionRangeError(
            f"bessel_k({nu}, {x}) underflows double range; use log_bessel_k"
        )
    v = math.exp(res.value)
    err = v * (res.abs_error_estimate + 2e-16 * abs(res.value))
    return SpecialFunctionResult(v, err, res.method)


def bessel_k_derivative(nu: float, x: float) -> SpecialFunctionResult:
    """K'_nu(x) via the recurrence K'_nu = -(K_{nu-1} + K_{nu+1}) / 2."""
    a = bessel_k(abs(nu) - 1.0, x)
    b = bessel_k(abs(nu) + 1.0, x)
    v = -0.5 * (a.value + b.value)
    return SpecialFunctionResult(
        v, 0.5 * (a.abs_error_estimate + b.abs_error_estimate), "recurrence"
    )


def bessel_k_derivative_scaled(nu: float, x: float) -> SpecialFunctionResult:
    """K'_nu(x) * e^x (always negative for x > 0)."""
    a = bessel_k_scaled(abs(nu) - 1.0, x)
    b = bessel_k_scaled(abs(nu) + 1.0, x)
    v = -0.5 * (a.value + b.value)
    return SpecialFunctionResult(
        v, 0.5 * (a.abs_error_estimate + b.abs_error_estimate), "recurrence"
    )


def log_abs_bessel_k_derivative(nu: float, x: float) -> SpecialFunctionResult:
    """ln |K'_nu(x)|; the sign is always -1 on x > 0."""
    a = log_bessel_k(abs(nu) - 1.0, x)
    b = log_bessel_k(abs(nu) + 1.0, x)
    v = _logaddexp(a.value, b.value) - math.log(2.0)
    return SpecialFunctionResult(
        v, a.abs_error_estimate + b.abs_error_estimate, "recurrence"
    )


# ---------------------------------------------------------------------------
# upper incomplete gamma
# ---------------------------------------------------------------------------

def _lower_p_series(a: float, x: float) -> float:
    # regularized lower gamma P(a, x) by its series, for x < a + 1
    if x == 0.0:
        return 0.0
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(500):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_cf(a: float, x: float, itmax: int = 10000) -> float:
    # Lentz continued fraction for Gamma(a, x) e^x x^-a; x >= ~1 or a << x
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, itmax):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        dl = d * c
        h *= dl
        if abs(dl - 1.0) < 1e-16:
            return h
    raise SpecialFunctionRangeError(
        f"incomplete gamma continued fraction failed at a={a}, x={x}"
    )


def upper_incomplete_gamma(a: float, x: float) -> SpecialFunctionResult:
    """Gamma(a, x) = int_x^inf t^(a-1) e^-t dt for a > 0, x >= 0."""
    if not (a > 0.0):
        raise SpecialFunctionDomainError(f"upper_incomplete_gamma requires a > 0, got {a}")
    if x < 0.0:
        raise SpecialFunctionDomainError(f"upper_incomplete_gamma requires x >= 0, got {x}")
    if x == 0.0:
        if a > 171.0:
            raise SpecialFunctionRangeError("Gamma(a) overflows; use the log variant")
        v = math.gamma(a)
        return SpecialFunctionResult(v, 4e-16 * v, "series")
    if x < a + 1.0:
        p = _lower_p_series(a, x)
        v = math.gamma(a) * (1.0 - p) if a <= 171.0 else math.exp(
            math.lgamma(a) + math.log1p(-p)
        )
        return SpecialFunctionResult(v, 4e-15 * abs(v) / max(1e-16, 1.0 - p), "series")
    h = _upper_cf(a, x)
    v = math.exp(-x + a * math.log(x)) * h
    return SpecialFunctionResult(v, 4e-15 * v, "recurrence")


def log_upper_incomplete_gamma(a: float, x: float) -> SpecialFunctionResult:
    """ln Gamma(a, x) for a > 0, x >= 0."""
    if not (a > 0.0):
        raise SpecialFunctionDomainError(f"log_upper_incomplete_gamma requires a > 0, got {a}")
    if x < 0.0:
        raise SpecialFunctionDomainError(f"requires x >= 0, got {x}")
    if x == 0.0:
        return SpecialFunctionResult(math.lgamma(a), 4e-16 * abs(math.lgamma(a)) + 1e-16, "series")
    if x < a + 1.0:
        p = _lower_p_series(a, x)
        v = math.lgamma(a) + math.log1p(-p)
        return SpecialFunctionResult(v, 1e-14 * max(1.0, abs(v)), "series")
    v = -x + a * math.log(x) + math.log(_upper_cf(a, x))
    return SpecialFunctionResult(v, 1e-14 * max(1.0, abs(v)), "recurrence")


def exp1(x: float) -> float:
    """Exponential integral E_1(x) = Gamma(0, x), x > 0."""
    if not (x > 0.0):
        raise SpecialFunctionDomainError(f"exp1 requires x > 0, got {x}")
    if x <= 1.0:
        total = -EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, 80):
            term *= -x / k
            d = -term / k
            total += d
            if abs(d) <= 1e-18 * max(abs(total), 1e-300):
                break
        return total
    return math.exp(-x) * _upper_cf(0.0, x)


def upper_incomplete_gamma_ext(a: float, x: float) -> float:
    """Gamma(a, x) for any real a (including a <= 0), x > 0.

    Extension used by the mode-series terms, where the orders run through
    negative integers.  Always positive.
    """
    if x <= 0.0:
        raise SpecialFunctionDomainError(f"extension requires x > 0, got {x}")
    if a > 0.0:
        return upper_incomplete_gamma(a, x).value
    if x >= 1.5:
        return math.exp(-x + a * math.log(x)) * _upper_cf(a, x)
    # downward recurrence Gamma(a-1,x) = (Gamma(a,x) - x^(a-1) e^-x) / (a-1),
    # seeded at the first order in (0, 1] (or at E_1 for integer a)
    n_steps = int(math.ceil(-a)) + (1 if a == math.floor(a) else 0)
    a0 = a + n_steps
    if a0 == 0.0:
        g = exp1(x)
    else:
        g = upper_incomplete_gamma(a0, x).value
    cur = a0
    ex = math.exp(-x)
    for _ in range(n_steps):
        cur -= 1.0
        if cur == 0.0:
            # crossing zero exactly: restart from E_1
            g = exp1(x)
        else:
            g = (g - math.pow(x, cur) * ex) / cur
    return g


def log_upper_incomplete_gamma_ext(a: float, x: float) -> float:
    """ln Gamma(a, x) for any real a, x > 0, safe for huge magnitudes."""
    if x <= 0.0:
        raise SpecialFunctionDomainError(f"extension requires x > 0, got {x}")
    if a > 0.0:
        return log_upper_incomplete_gamma(a, x).value
    if x >= 1.5:
        return -x + a * math.log(x) + math.log(_upper_cf(a, x))
    n_steps = int(math.ceil(-a)) + (1 if a == math.floor(a) else 0)
    a0 = a + n_steps
    lg = math.log(exp1(x)) if a0 == 0.0 else log_upper_incomplete_gamma(a0, x).value
    cur = a0
    lx = math.log(x)
    for _ in range(n_steps):
        cur -= 1.0
        if cur == 0.0:
            lg = math.log(exp1(x))
            continue
        l_pow = cur * lx - x            # ln(x^cur e^-x)
        # Gamma(cur, x) = (x^cur e^-x - Gamma(cur+1, x)) / (-cur), both positive
        if l_pow >= lg:
            lg = l_pow + math.log1p(-math.exp(lg - l_pow)) - math.log(-cur)
        else:
            # only possible through rounding at the crossover; fall back
            lg = math.log((math.exp(lg) - math.exp(l_pow)) / cur)
    return lg


# ---------------------------------------------------------------------------
# Whittaker W
# ---------------------------------------------------------------------------

def _kummer_u_log(a: float, b: float, z: float) -> tuple[float, float]:
    """Confluent hypergeometric U(a, b, z) as (ln|U|, sign), z > 0.

    Closed forms cover a = 0, a = 1 and non-positive-integer a (the cases
    the series terms generate); anything else goes to mpmath.
    """
    if a == 0.0:
        return 0.0, 1.0
    if a == 1.0:
        # U(1, b, z) = e^z z^(1-b) Gamma(b-1, z)
        return z + (1.0 - b) * math.log(z) + log_upper_incomplete_gamma_ext(b - 1.0, z), 1.0
    if a < 0.0 and abs(a - round(a)) < 1e-12:
        # polynomial case: U(-n, b, z) = (-1)^n sum_k C(n,k) (b+k)_(n-k) (-z)^k
        n = int(round(-a))
        total = 0.0
        for k in range(n + 1):
            poch = 1.0
            for j in range(n - k):
                poch *= b + k + j
            total += math.comb(n, k) * poch * (-z) ** k
        total *= (-1.0) ** n
        if total == 0.0:
            return -math.inf, 1.0
        return math.log(abs(total)), math.copysign(1.0, total)
    import mpmath as _mp

    with _mp.workdps(30):
        u = _mp.hyperu(a, b, z)
        if u == 0:
            return -math.inf, 1.0
        return float(_mp.log(abs(u))), 1.0 if u > 0 else -1.0


def _kummer_u(a: float, b: float, z: float) -> float:
    log_u, sign = _kummer_u_log(a, b, z)
    if log_u == -math.inf:
        return 0.0
    if log_u > _LOG_HUGE:
        raise SpecialFunctionOverflow(
            f"U({a}, {b}, {z}) overflows double range; use the log route"
        )
    return sign * math.exp(log_u)


def _whittaker_params(kappa: float, mu: float) -> tuple[float, float, float]:
    """Pick the mu sign (W is even in mu) whose U parameters are cheapest.

    Returns (a, b, mu_used): prefer the orientation that lands on the
    closed-form U cases (a = 0, a = 1, or a a non-positive integer).
    """
    candidates = []
    for m_ in (mu, -mu):
        a = m_ - kappa + 0.5
        b = 1.0 + 2.0 * m_
        closed = (
            a == 0.0 or a == 1.0
            or (a < 0.0 and abs(a - round(a)) < 1e-12)
        )
        candidates.append((not closed, m_ < 0.0, a, b, m_))
    candidates.sort()
    _, _, a, b, m_ = candidates[0]
    return a, b, m_


def whittaker_w(kappa: float, mu: float, z: float) -> SpecialFunctionResult:
    """W_{kappa,mu}(z) through the U connection, z > 0, |kappa|,|mu| <= 60."""
    if not (z > 0.0):
        raise SpecialFunctionDomainError(f"whittaker_w requires z > 0, got {z}")
    if abs(kappa) > 60.0 or abs(mu) > 60.0:
        raise SpecialFunctionRangeError("whittaker_w parameters outside supported range")
    a, b, mu_used = _whittaker_params(kappa, mu)
    log_pref = -0.5 * z + (mu_used + 0.5) * math.log(z)
    u = _kummer_u(a, b, z)
    if u == 0.0:
        return SpecialFunctionResult(0.0, 1e-300, "series")
    log_mag = log_pref + math.log(abs(u))
    if log_mag > _LOG_HUGE:
        raise SpecialFunctionOverflow(
            f"whittaker_w({kappa}, {mu}, {z}) overflows; use log_whittaker_w"
        )
    v = math.copysign(math.exp(log_mag), u)
    return SpecialFunctionResult(v, 1e-13 * abs(v) + 1e-300, "series")


def log_whittaker_w(kappa: float, mu: float, z: float) -> tuple[float, float]:
    """(ln |W_{kappa,mu}(z)|, sign)."""
    if not (z > 0.0):
        raise SpecialFunctionDomainError(f"log_whittaker_w requires z > 0, got {z}")
    a, b, mu_used = _whittaker_params(kappa, mu)
    log_pref = -0.5 * z + (mu_used + 0.5) * math.log(z)
    log_u, sign = _kummer_u_log(a, b, z)
    if log_u == -math.inf:
        return -math.inf, 1.0
    return log_pref + log_u, sign
