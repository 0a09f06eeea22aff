"""Scalar weights of the multiscale integrators.

All weights are evaluated through the entire functions

    phi1(z) = (e^z - 1)/z,   phi2(z) = (e^z - 1 - z)/z^2,   psi(z) = ((z - 1)e^z + 1)/z^2,

which have no removable singularities (alpha -> 0, resonance), plus Taylor
series when omega*tau is small and the closed forms would cancel.  The
textbook closed forms are kept in :func:`printed_forms` for auditing, and
:func:`defining_integrals` evaluates every weight from its integral
definition with a composite Gauss-Legendre rule.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, fields
from functools import lru_cache

import mpmath
import numpy as np

_INV_FACT = np.array([1.0 / math.factorial(n) for n in range(120)])
SERIES_W = 0.5  # omega*tau below which series are used


def omega(epsilon: float, alpha: float) -> float:
    return math.sqrt(1.0 + epsilon**2 * alpha) / epsilon**2


def lambda_pm(epsilon: float, alpha: float) -> tuple[float, float]:
    """Roots of eps^2 l^2 + 2 l - alpha = 0, the small one in cancellation-free form."""
    root = math.sqrt(1.0 + alpha * epsilon**2)
    return -(1.0 + root) / epsilon**2, alpha / (1.0 + root)


def fast_phase(s: float, epsilon: float, mult: int = 1) -> complex:
    """exp(i mult s/eps^2) with the argument reduced in extended precision."""
    with mpmath.workdps(40):
        theta = mpmath.mpf(mult) * mpmath.mpf(s) / mpmath.mpf(epsilon) ** 2
        v = mpmath.expj(theta)
        return complex(float(v.real), float(v.imag))


# ---------------------------------------------------------------------------
# entire functions


def phi1(z: complex) -> complex:
    if abs(z) < 1.0:
        return complex(sum(z**n * _INV_FACT[n + 1] for n in range(22)))
    return (cmath.exp(z) - 1.0) / z


def phi2(z: complex) -> complex:
    if abs(z) < 1.0:
        return complex(sum(z**n * _INV_FACT[n + 2] for n in range(22)))
    return (cmath.exp(z) - 1.0 - z) / (z * z)


def psi(z: complex) -> complex:
    """int_0^1 e^{z v} v dv."""
    if abs(z) < 1.0:
        return complex(sum(z**n * (n + 1) * _INV_FACT[n + 2] for n in range(22)))
    return ((z - 1.0) * cmath.exp(z) + 1.0) / (z * z)


def sinc(x: float) -> float:
    if abs(x) < 1e-4:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


# ---------------------------------------------------------------------------
# weight containers


@dataclass(frozen=True)
class GautschiWeights:
    p: complex
    q: complex
    pdot: complex
    qdot: complex


@dataclass(frozen=True)
class ABWeights:
    a: complex
    b: complex
    adot: complex
    bdot: complex
    c: complex
    d: complex
    cdot: complex
    ddot: complex


@dataclass(frozen=True)
class BetaGamma:
    beta1: complex
    beta2: complex
    gamma1: float
    gamma2: float
    gamma3: float


@dataclass(frozen=True)
class CoefficientSet:
    tau: float
    epsilon: float
    alpha: float
    omega: float
    lambda_plus: float
    lambda_minus: float
    gautschi: tuple  # GautschiWeights for k = 1..p
    ab: ABWeights
    bg: BetaGamma
    cos_wt: float
    sin_wt_over_w: float
    fast: complex  # exp(i tau/eps^2)
    phase_alpha: complex  # exp(i alpha tau/2)


# ---------------------------------------------------------------------------
# Gautschi weights p_k, q_k and their derivatives


def _e0(a: complex, b: complex, tau: float) -> complex:
    # int_0^tau e^{a(tau-t)} e^{b t} dt
    return tau * cmath.exp(a * tau) * phi1((b - a) * tau)


def _e1(a: complex, b: complex, tau: float) -> complex:
    # int_0^tau e^{a(tau-t)} e^{b t} t dt
    return tau * tau * cmath.exp(a * tau) * psi((b - a) * tau)


def _gautschi_series(kappa, om, tau, eps):
    w2 = (om * tau) ** 2
    x = 1j * kappa * tau
    J, N = 14, 60
    j = np.arange(J)[:, None]
    n = np.arange(N)[None, :]
    base = ((-1.0) ** j) * w2**j * x**n
    m = 2 * j + n
    p = np.sum(base * _INV_FACT[m + 2]) * tau**2
    q = np.sum(base * (n + 1) * _INV_FACT[m + 3]) * tau**3
    pd = np.sum(base * _INV_FACT[m + 1]) * tau
    qd = np.sum(base * (n + 1) * _INV_FACT[m + 2]) * tau**2
    s = 1.0 / eps**2
    return GautschiWeights(complex(p * s), complex(q * s), complex(pd * s), complex(qd * s))


def gautschi_weights(k: int, tau: float, epsilon: float, omega: float) -> GautschiWeights:
    """p_k = int_0^tau sin(w(tau-t))/(eps^2 w) e^{i(2k+1)t/eps^2} dt, q_k with an extra t,
    and pdot_k, qdot_k with cos(w(tau-t))/eps^2 as kernel."""
    if tau == 0.0:
        return GautschiWeights(0j, 0j, 0j, 0j)
    eps2 = epsilon**2
    kappa = (2 * k + 1) / eps2
    if omega * tau < SERIES_W and kappa * tau <= 4.0:
        return _gautschi_series(kappa, omega, tau, epsilon)
    ik, iw = 1j * kappa, 1j * omega
    a0p, a0m = _e0(iw, ik, tau), _e0(-iw, ik, tau)
    a1p, a1m = _e1(iw, ik, tau), _e1(-iw, ik, tau)
    return GautschiWeights(
        (a0p - a0m) / (2j * eps2 * omega),
        (a1p - a1m) / (2j * eps2 * omega),
        (a0p + a0m) / (2.0 * eps2),
        (a1p + a1m) / (2.0 * eps2),
    )


# ---------------------------------------------------------------------------
# homogeneous kernels a, b and their integrals c, d


def _ab_series(tau, eps, alpha, lp, lm):
    # b(u) = (1/eps^2) sum_{n>=1} -i^{n+1} h_{n-1}(lp, lm) u^n/n!, h the complete
    # homogeneous symmetric polynomial; H_m = tau^m h_m(lp, lm)
    N = 40
    H = np.empty(N)
    x, y = lp * tau, lm * tau
    H[0] = 1.0
    xp = 1.0
    for m in range(1, N):
        xp *= x
        H[m] = xp + y * H[m - 1]
    n = np.arange(1, N + 1)
    cn = -(1j ** (n + 1)) * H[n - 1]
    s = 1.0 / eps**2
    b = s * tau * np.sum(cn * _INV_FACT[n])
    bdot = s * np.sum(cn * _INV_FACT[n - 1])
    c = s * tau**2 * np.sum(cn * _INV_FACT[n + 1])
    d = s * tau**3 * np.sum(cn * _INV_FACT[n + 2])
    return complex(b), complex(bdot), complex(c), complex(d)


def ab_weights(tau: float, epsilon: float, alpha: float) -> ABWeights:
    """a, b solve 2i z' + eps^2 z'' + alpha z = 0 with (a, a')(0) = (1, 0), (b, b')(0) = (0, 1/eps^2);
    c = int b, d = int int b, so that cdot = b and ddot = c."""
    eps2 = epsilon**2
    lp, lm = lambda_pm(epsilon, alpha)
    if abs(lp * tau) < SERIES_W:
        b, bdot, c, d = _ab_series(tau, epsilon, alpha, lp, lm)
        a = 1.0 - alpha * c
    else:
        two_root = eps2 * (lm - lp)  # 2 sqrt(1 + alpha eps^2)
        ep, em = cmath.exp(1j * tau * lp), cmath.exp(1j * tau * lm)
        a = (lp * em - lm * ep) / (lp - lm)
        b = 1j * (ep - em) / two_root
        bdot = (lm * em - lp * ep) / two_root
        c = 1j * tau * (phi1(1j * lp * tau) - phi1(1j * lm * tau)) / two_root
        d = 1j * tau**2 * (phi2(1j * lp * tau) - phi2(1j * lm * tau)) / two_root
    return ABWeights(a=complex(a), b=b, adot=-alpha * b, bdot=bdot, c=c, d=d, cdot=b, ddot=c)


# ---------------------------------------------------------------------------
# general-nonlinearity weights


def beta_gamma(tau: float, epsilon: float, alpha: float, omega: float) -> BetaGamma:
    """beta1, beta2 = (i/2) int_0^tau e^{i alpha (tau-s)/2} {1, s} ds;
    gamma1 = int_0^tau sin(w(tau-s))/(eps^2 w) ds, gamma2, gamma3 the cosine-kernel
    weights of the linear interpolant through s = 0 and s = tau."""
    if tau == 0.0:
        return BetaGamma(0j, 0j, 0.0, 0.0, 0.0)
    eps2 = epsilon**2
    z = 0.5j * alpha * tau
    beta1 = 0.5j * tau * phi1(z)
    beta2 = 0.5j * tau * tau * phi2(z)
    w = omega * tau
    s = sinc(0.5 * w)
    gamma3 = 0.5 * tau / eps2 * s * s
    gamma1 = gamma3 * tau
    if w < SERIES_W:
        gamma2 = sum((-1) ** j * w ** (2 * j) * (2 * j + 1) * _INV_FACT[2 * j + 2] for j in range(12)) * tau / eps2
    else:
        gamma2 = (w * math.sin(w) + math.cos(w) - 1.0) / (eps2 * omega**2 * tau)
    return BetaGamma(beta1, beta2, gamma1, float(gamma2), gamma3)


@lru_cache(maxsize=512)
def coefficient_set(tau: float, epsilon: float, alpha: float, p: int = 0) -> CoefficientSet:
    om = omega(epsilon, alpha)
    lp, lm = lambda_pm(epsilon, alpha)
    w = om * tau
    return CoefficientSet(
        tau=tau, epsilon=epsilon, alpha=alpha, omega=om, lambda_plus=lp, lambda_minus=lm,
        gautschi=tuple(gautschi_weights(k, tau, epsilon, om) for k in range(1, p + 1)),
        ab=ab_weights(tau, epsilon, alpha),
        bg=beta_gamma(tau, epsilon, alpha, om),
        cos_wt=math.cos(w),
        sin_wt_over_w=tau * sinc(w),
        fast=fast_phase(tau, epsilon),
        phase_alpha=cmath.exp(0.5j * alpha * tau),
    )


# ---------------------------------------------------------------------------
# textbook closed forms (audit only)


def printed_forms(k: int, tau: float, epsilon: float, alpha: float) -> dict[str, complex]:
    """Closed forms as usually printed; singular at alpha = 0 and cancel for small tau."""
    eps2 = epsilon**2
    om = omega(epsilon, alpha)
    lp, lm = lambda_pm(epsilon, alpha)
    K = 2 * k + 1
    e = cmath.exp(1j * K * tau / eps2)
    c, s = math.cos(om * tau), math.sin(om * tau)
    den = eps2**2 * om**2 - K**2
    out = {
        "p": (eps2 * om * c + 1j * K * s - eps2 * om * e) / (K**2 * om - eps2**2 * om**3),
        "pdot": (1j * K * c - eps2 * om * s - 1j * K * e) / (K**2 - eps2**2 * om**2),
        "q": eps2 / (om * den**2) * (1j * (4 * k + 2) * eps2 * om * c - (eps2**2 * om**2 + K**2) * s
                                     + (eps2**2 * om**3 * tau - K**2 * om * tau - 1j * (4 * k + 2) * eps2 * om) * e),
        "qdot": 1.0 / den**2 * (-(eps2**3 * om**2 + K**2 * eps2) * c - 1j * (4 * k + 2) * eps2**2 * om * s
                                + (1j * K * tau * eps2**2 * om**2 - 1j * K**3 * tau + eps2**3 * om**2 + K**2 * eps2) * e),
    }
    ep, em = cmath.exp(1j * tau * lp), cmath.exp(1j * tau * lm)
    with np.errstate(all="ignore"):
        if alpha != 0.0:
            out["c"] = (lm * ep - lp * em + lp - lm) / (eps2 * (lm - lp) * lp * lm)
            out["d"] = 1j * (lm**2 * ep - lp**2 * em + 1j * tau * lp * lm * (lp - lm) + lp**2 - lm**2) / (
                eps2 * (lp - lm) * lp**2 * lm**2)
            za = 0.5j * alpha * tau
            out["beta1"] = 1j / (2 * alpha) * (cmath.exp(za) - 1.0)
            out["beta2"] = (2 * cmath.exp(za) - 1j * alpha * tau - 2) / (2 * alpha**2)
        else:
            for key in ("c", "d", "beta1", "beta2"):
                out[key] = complex("nan")
    out["cdot"] = 1j * (ep - em) / (eps2 * (lm - lp))
    return out


# ---------------------------------------------------------------------------
# quadrature oracle

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gl(fun, tau: float, panels: int) -> complex:
    # extended precision keeps the rounding of large phases out of the sum
    edges = np.linspace(np.longdouble(0.0), np.longdouble(tau), panels + 1)
    h = np.diff(edges)[:, None]
    t = edges[:-1, None] + 0.5 * h * (_GL_X[None, :].astype(np.longdouble) + 1)
    v = fun(t) * (0.5 * h * _GL_W[None, :].astype(np.longdouble))
    return complex(np.sum(v))


def oscillatory_quad(fun, tau: float, max_freq: float) -> tuple[complex, float]:
    """Composite 24-point Gauss-Legendre with panels spanning at most ~pi/2 radians
    of the fastest oscillation; returns (value, change against half as many panels)."""
    if tau == 0.0:
        return 0j, 0.0
    panels = max(4, int(math.ceil(2.0 * max_freq * tau / math.pi)) + 4)
    coarse = _gl(fun, tau, panels)
    fine = _gl(fun, tau, 2 * panels)
    return fine, abs(fine - coarse)


K_DEPENDENT = ("p", "q", "pdot", "qdot")


def defining_integrals(k: int, tau: float, epsilon: float, alpha: float, names=None) -> dict[str, complex]:
    """Every weight evaluated from its defining integral by :func:`oscillatory_quad`."""
    eps2 = epsilon**2
    om = omega(epsilon, alpha)
    lp, lm = lambda_pm(epsilon, alpha)
    kap = (2 * k + 1) / eps2
    two_root = eps2 * (lm - lp)

    def bdot(u):
        return (lm * np.exp(1j * lm * u) - lp * np.exp(1j * lp * u)) / two_root

    def b(u):
        return 1j * (np.exp(1j * lp * u) - np.exp(1j * lm * u)) / two_root

    ks = lambda t: np.sin(om * (tau - t)) / (eps2 * om)
    kc = lambda t: np.cos(om * (tau - t)) / eps2
    ex = lambda t: np.exp(1j * kap * t)
    fg = om + kap
    fb = abs(lp) + abs(lm)
    ea = lambda t: np.exp(0.5j * alpha * (tau - t))
    items = {
        "p": (lambda t: ks(t) * ex(t), fg),
        "q": (lambda t: ks(t) * ex(t) * t, fg),
        "pdot": (lambda t: kc(t) * ex(t), fg),
        "qdot": (lambda t: kc(t) * ex(t) * t, fg),
        "c": (lambda t: b(tau - t), fb),
        "d": (lambda t: b(tau - t) * t, fb),
        "cdot": (lambda t: bdot(tau - t), fb),
        "ddot": (lambda t: bdot(tau - t) * t, fb),
        "beta1": (lambda t: 0.5j * ea(t), alpha),
        "beta2": (lambda t: 0.5j * ea(t) * t, alpha),
        "gamma1": (lambda t: ks(t) + 0j, om),
        "gamma2": (lambda t: kc(t) * (tau - t) / tau + 0j, om),
        "gamma3": (lambda t: kc(t) * t / tau + 0j, om),
    }
    names = items.keys() if names is None else names
    return {name: oscillatory_quad(items[name][0], tau, items[name][1])[0] for name in names}


def weights_flat(k: int, tau: float, epsilon: float, alpha: float) -> dict[str, complex]:
    """The production weights keyed like :func:`defining_integrals`."""
    om = omega(epsilon, alpha)
    g = gautschi_weights(k, tau, epsilon, om)
    ab = ab_weights(tau, epsilon, alpha)
    bg = beta_gamma(tau, epsilon, alpha, om)
    out = {f.name: getattr(g, f.name) for f in fields(g)}
    out.update({n: getattr(ab, n) for n in ("c", "d", "cdot", "ddot")})
    out.update({f.name: getattr(bg, f.name) for f in fields(bg)})
    return out


def relative_deviation(value: complex, exact: complex) -> float:
    if exact == 0:
        return abs(value)
    return abs(value - exact) / abs(exact)


VALIDATION_GRID = dict(epsilon=(1.0, 0.5, 0.1, 0.01), tau=(0.2, 0.01, 1e-4), alpha=(0.0, 2.0, 3.0), k=(1, 2, 3))


def validate_coefficients(grid: dict = VALIDATION_GRID) -> dict:
    """Max relative deviation per weight over a grid, for production and printed forms.

    Also reports the measured ratio printed/defining for beta1 and beta2.
    """
    prod: dict[str, float] = {}
    printed: dict[str, float] = {}
    ratios: dict[str, list[complex]] = {"beta1": [], "beta2": []}
    for eps in grid["epsilon"]:
        for tau in grid["tau"]:
            for alpha in grid["alpha"]:
                shared = None
                for k in grid["k"]:
                    if shared is None:
                        ref = defining_integrals(k, tau, eps, alpha)
                        shared = {n: v for n, v in ref.items() if n not in K_DEPENDENT}
                    else:
                        ref = dict(shared, **defining_integrals(k, tau, eps, alpha, K_DEPENDENT))
                    got = weights_flat(k, tau, eps, alpha)
                    pr = printed_forms(k, tau, eps, alpha)
                    for name, exact in ref.items():
                        prod[name] = max(prod.get(name, 0.0), relative_deviation(got[name], exact))
                        if name in pr:
                            dev = relative_deviation(pr[name], exact)
                            printed[name] = max(printed.get(name, 0.0), dev if math.isfinite(dev) else math.inf)
                    for name in ratios:
                        if alpha != 0.0 and math.isfinite(abs(pr[name])):
                            ratios[name].append(pr[name] / ref[name])
    measured = {n: complex(np.mean(v)) for n, v in ratios.items() if v}
    spread = {n: float(max(abs(x - measured[n]) for x in v)) for n, v in ratios.items() if v}
    return {"production": prod, "printed": printed, "beta_ratio": measured, "beta_ratio_spread": spread}
