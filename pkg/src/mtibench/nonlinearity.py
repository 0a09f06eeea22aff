"""Gauge invariant nonlinearities and their two-frequency decomposition.

For w = e^{is/eps^2} z+ + e^{-is/eps^2} conj(z-) the nonlinearity splits as

    f(w) = f+ e^{is/eps^2} + conj(f-) e^{-is/eps^2} + (higher harmonics),

with f+- the averages (1/2pi) int f(z+- + e^{it} conj(z-+)) dt.  For the pure
power f(y) = lam |y|^{2p} y everything is a finite polynomial: f+- = g+- z+-,
and the harmonic e^{i(2k+1)s/eps^2} carries g_k(z+, z-).  General
nonlinearities go through a periodic trapezoidal rule.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher

# ---------------------------------------------------------------------------
# pure power algebra


def index_set(p: int, k: int) -> list[tuple[int, int, int]]:
    """Triples (p1, p2, p3) with p1 + 2 p2 + p3 = p - k and p3 in {0, 1}, lexicographic."""
    m = p - k
    out = []
    if m < 0:
        return out
    for p1 in range(m + 1):
        for p2 in range(m // 2 + 1):
            for p3 in (0, 1):
                if p1 + 2 * p2 + p3 == m:
                    out.append((p1, p2, p3))
    return out


def index_weight(p: int, k: int, triple: tuple[int, int, int]) -> int:
    """Multinomial weight of a triple: p! / (p1! (k+p2+p3)! p2!)."""
    p1, p2, p3 = triple
    return math.factorial(p) // (math.factorial(p1) * math.factorial(k + p2 + p3) * math.factorial(p2))


@njit(cache=True)
def _fact(n):
    r = 1.0
    for j in range(2, n + 1):
        r *= j
    return r


@njit(cache=True)
def _pw(x, n):
    # x**n for integer n >= 0 with 0**0 = 1
    r = 1.0 + 0.0 * x
    for _ in range(n):
        r = r * x
    return r


@njit(cache=True)
def _dpw(x, xd, n):
    # d/ds x**n
    if n == 0:
        return 0.0 * x
    return n * _pw(x, n - 1) * xd


@njit(cache=True)
def qsum(p, k, ra, rb, rad, rbd):
    """Q_k = sum w S^p1 P^p2 rb^p3 over the index set, and its flow derivative."""
    S = ra + rb
    P = ra * rb
    Sd = rad + rbd
    Pd = rad * rb + ra * rbd
    m = p - k
    Q = 0.0
    Qd = 0.0
    if m < 0:
        return Q, Qd
    fp = _fact(p)
    for p1 in range(m + 1):
        for p2 in range(m // 2 + 1):
            for p3 in range(2):
                if p1 + 2 * p2 + p3 != m:
                    continue
                w = fp / (_fact(p1) * _fact(k + p2 + p3) * _fact(p2))
                a = _pw(S, p1)
                b = _pw(P, p2)
                c = _pw(rb, p3)
                Q += w * a * b * c
                Qd += w * (_dpw(S, Sd, p1) * b * c + a * _dpw(P, Pd, p2) * c + a * b * _dpw(rb, rbd, p3))
    return Q, Qd


@njit(cache=True)
def gk_flow(lam, p, k, a, b, ad, bd):
    """lam a^{k+1} b^k Q_k(|a|^2, |b|^2) and its derivative along (ad, bd).

    k = 0 gives f+ = g+ z+ (with a = z+, b = z-) and its flow derivative.
    """
    ra = a.real * a.real + a.imag * a.imag
    rb = b.real * b.real + b.imag * b.imag
    rad = 2.0 * (a.real * ad.real + a.imag * ad.imag)
    rbd = 2.0 * (b.real * bd.real + b.imag * bd.imag)
    Q, Qd = qsum(p, k, ra, rb, rad, rbd)
    ma = _pw(a, k + 1)
    mb = _pw(b, k)
    m = ma * mb
    md = _dpw(a, ad, k + 1) * mb + ma * _dpw(b, bd, k)
    return lam * m * Q, lam * (md * Q + m * Qd)


@njit(cache=True)
def g_pm_kernel(lam, p, rp, rm):
    gp, _ = qsum(p, 0, rp, rm, 0.0, 0.0)
    gm, _ = qsum(p, 0, rm, rp, 0.0, 0.0)
    return lam * gp, lam * gm


@njit(cache=True)
def power_g(lam, p, rho):
    return lam * _pw(rho, p)


@njit(cache=True)
def power_f(lam, p, y):
    rho = y.real * y.real + y.imag * y.imag
    return lam * _pw(rho, p) * y


# ---------------------------------------------------------------------------
# periodic quadrature for general nonlinearities


def _make_quadrature(deco):
    @deco
    def fpm(f, E, zp, zm):
        n = E.shape[0]
        sp = 0j
        sm = 0j
        czp = zp.conjugate()
        czm = zm.conjugate()
        for j in range(n):
            sp += f(zp + E[j] * czm)
            sm += f(zm + E[j] * czp)
        return sp / n, sm / n

    @deco
    def dfpm(fy, fyb, E, zp, zm, dzp, dzm):
        n = E.shape[0]
        sp = 0j
        sm = 0j
        for j in range(n):
            w = zp + E[j] * zm.conjugate()
            d = dzp + E[j] * dzm.conjugate()
            sp += fy(w) * d + fyb(w) * d.conjugate()
            w = zm + E[j] * zp.conjugate()
            d = dzm + E[j] * dzp.conjugate()
            sm += fy(w) * d + fyb(w) * d.conjugate()
        return sp / n, sm / n

    @deco
    def fr(f, fp, fm, zp, zm, r, ph):
        # ph = e^{is/eps^2}; fp, fm are f+- at (zp, zm)
        w = ph * zp + (ph * zm).conjugate()
        return f(w + r) - fp * ph - (ph * fm).conjugate()

    return fpm, dfpm, fr


QUAD_JIT = _make_quadrature(njit)
QUAD_PY = _make_quadrature(lambda fn: fn)


def quadrature_nodes(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


# ---------------------------------------------------------------------------
# specifications


@dataclass(frozen=True)
class PurePower:
    """f(y) = lam |y|^{2p} y."""

    lam: float
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 0:
            raise ValueError(f"p must be a nonnegative integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def name(self) -> str:
        return f"power:{self.lam:g}:{self.p}"

    def g(self, rho):
        return self.lam * rho**self.p

    def f(self, y):
        return self.lam * (abs(y) ** 2) ** self.p * y

    def df_dy(self, y):
        return self.lam * (self.p + 1) * (abs(y) ** 2) ** self.p

    def df_dybar(self, y):
        if self.p == 0:
            return 0j * y
        return self.lam * self.p * (abs(y) ** 2) ** (self.p - 1) * y * y

    def antiderivative(self, rho):
        return self.lam * rho ** (self.p + 1) / (self.p + 1)

    def as_general(self, quadrature_nodes: int = 64, jit: bool = True) -> "General":
        """The same f routed through the quadrature path (for cross-checks)."""
        if quadrature_nodes <= 2 * self.p + 1:
            raise ValueError("quadrature_nodes must exceed 2p+1")
        return _power_as_general(self.lam, self.p, int(quadrature_nodes), bool(jit))


@functools.lru_cache(maxsize=None)
def _power_as_general(lam: float, p: int, quadrature_nodes: int, jit: bool) -> "General":
    # cached so that the numba closures are compiled once per (lam, p)
    spec = PurePower(lam, p)

    def f(y):
        return power_f(lam, p, y)

    def fy(y):
        rho = y.real * y.real + y.imag * y.imag
        return lam * (p + 1) * _pw(rho, p) + 0j

    def fyb(y):
        if p == 0:
            return 0j * y
        rho = y.real * y.real + y.imag * y.imag
        return lam * p * _pw(rho, p - 1) * y * y

    return General(f, fy, fyb, quadrature_nodes, antiderivative=spec.antiderivative,
                   name=spec.name + "@quad", jit=jit)


class General:
    """Gauge invariant f with Wirtinger derivatives df/dy and df/dybar.

    With ``jit=True`` plain Python callables are compiled with numba; pass
    ``jit=False`` for callables numba cannot handle (much slower).
    """

    def __init__(self, f: Callable, df_dy: Callable, df_dybar: Callable,
                 quadrature_nodes: int = 64, antiderivative: Optional[Callable] = None,
                 name: str = "general", jit: bool = True):
        if quadrature_nodes < 1:
            raise ValueError("quadrature_nodes must be positive")
        self.jit = bool(jit)
        if self.jit:
            f, df_dy, df_dybar = (fn if isinstance(fn, CPUDispatcher) else njit(fn)
                                  for fn in (f, df_dy, df_dybar))
        self.f = f
        self.df_dy = df_dy
        self.df_dybar = df_dybar
        self.quadrature_nodes = int(quadrature_nodes)
        self.nodes = quadrature_nodes_cache(self.quadrature_nodes)
        self.antiderivative = antiderivative
        self.name = name

    @property
    def quad(self):
        return QUAD_JIT if self.jit else QUAD_PY

    def with_nodes(self, n: int) -> "General":
        return General(self.f, self.df_dy, self.df_dybar, n, self.antiderivative, self.name, self.jit)

    def __repr__(self):
        return f"General({self.name!r}, N={self.quadrature_nodes})"


_NODE_CACHE: dict[int, np.ndarray] = {}


def quadrature_nodes_cache(n: int) -> np.ndarray:
    if n not in _NODE_CACHE:
        _NODE_CACHE[n] = quadrature_nodes(n)
    return _NODE_CACHE[n]


NonlinearitySpec = Union[PurePower, General]


@njit(cache=True)
def _sin2_f(y):
    r = y.real * y.real + y.imag * y.imag
    s = math.sin(r)
    return s * s * y


@njit(cache=True)
def _sin2_fy(y):
    r = y.real * y.real + y.imag * y.imag
    s = math.sin(r)
    return (math.sin(2.0 * r) * r + s * s) + 0j


@njit(cache=True)
def _sin2_fyb(y):
    r = y.real * y.real + y.imag * y.imag
    return math.sin(2.0 * r) * y * y


def _sin2_F(rho):
    return 0.5 * rho - 0.25 * np.sin(2.0 * rho)


def sin2(quadrature_nodes: int = 64) -> General:
    """f(y) = sin^2(|y|^2) y."""
    return General(_sin2_f, _sin2_fy, _sin2_fyb, quadrature_nodes, antiderivative=_sin2_F, name="sin2")


def parse_nonlinearity(text: str):
    """Parse 'power:lam:p' or 'sin2' (optionally 'sin2:N')."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    if kind == "power":
        if len(parts) != 3:
            raise ValueError(f"expected power:lambda:p, got {text!r}")
        return PurePower(float(parts[1]), int(parts[2]))
    if kind == "sin2":
        n = int(parts[1]) if len(parts) > 1 else 64
        return sin2(n)
    raise ValueError(f"unknown nonlinearity {text!r}")


# ---------------------------------------------------------------------------
# public operations


def g_pm(lam: float, p: int, rho_plus: float, rho_minus: float) -> tuple[float, float]:
    return g_pm_kernel(float(lam), int(p), float(rho_plus), float(rho_minus))


def g_k(lam: float, p: int, k: int, z_plus: complex, z_minus: complex) -> complex:
    return gk_flow(float(lam), int(p), int(k), complex(z_plus), complex(z_minus), 0j, 0j)[0]


def flow_derivative_g_k(lam, p, k, z_plus, z_minus, zdot_plus, zdot_minus) -> complex:
    return gk_flow(float(lam), int(p), int(k), complex(z_plus), complex(z_minus),
                   complex(zdot_plus), complex(zdot_minus))[1]


def f_pm(spec, z_plus: complex, z_minus: complex) -> tuple[complex, complex]:
    zp, zm = complex(z_plus), complex(z_minus)
    if isinstance(spec, PurePower):
        fp = gk_flow(spec.lam, spec.p, 0, zp, zm, 0j, 0j)[0]
        fm = gk_flow(spec.lam, spec.p, 0, zm, zp, 0j, 0j)[0]
        return fp, fm
    return spec.quad[0](spec.f, spec.nodes, zp, zm)


def flow_derivative_f_pm(spec, z_plus, z_minus, zdot_plus, zdot_minus) -> tuple[complex, complex]:
    zp, zm, dp, dm = (complex(v) for v in (z_plus, z_minus, zdot_plus, zdot_minus))
    if isinstance(spec, PurePower):
        return (gk_flow(spec.lam, spec.p, 0, zp, zm, dp, dm)[1],
                gk_flow(spec.lam, spec.p, 0, zm, zp, dm, dp)[1])
    return spec.quad[1](spec.df_dy, spec.df_dybar, spec.nodes, zp, zm, dp, dm)


def ansatz(z_plus, z_minus, s, epsilon):
    ph = cmath.exp(1j * s / epsilon**2)
    return ph * z_plus + (ph * z_minus).conjugate()


def h_remainder(spec: PurePower, z_plus, z_minus, r, s, epsilon) -> complex:
    """g(|w+r|^2)(w+r) - g(|w|^2) w with w the two-frequency ansatz."""
    w = ansatz(complex(z_plus), complex(z_minus), s, epsilon)
    r = complex(r)
    if r == 0:
        return 0j
    return power_f(spec.lam, spec.p, w + r) - power_f(spec.lam, spec.p, w)


def f_r(spec, z_plus, z_minus, r, s, epsilon) -> complex:
    """Full-frequency remainder f(w + r) - f+ e^{is/eps^2} - conj(f-) e^{-is/eps^2}."""
    zp, zm, r = complex(z_plus), complex(z_minus), complex(r)
    ph = cmath.exp(1j * s / epsilon**2)
    fp, fm = f_pm(spec, zp, zm)
    if isinstance(spec, PurePower):
        w = ph * zp + (ph * zm).conjugate()
        return power_f(spec.lam, spec.p, w + r) - fp * ph - (ph * fm).conjugate()
    return spec.quad[2](spec.f, fp, fm, zp, zm, r, ph)


def evaluate(spec, y):
    """f(y) for either kind of spec."""
    if isinstance(spec, PurePower):
        return power_f(spec.lam, spec.p, complex(y))
    return spec.f(complex(y))


def quadrature_doubling_error(spec: General, z_plus, z_minus) -> float:
    """max |f+-(N) - f+-(2N)|, the spectral convergence check for the node count."""
    a = f_pm(spec, z_plus, z_minus)
    b = f_pm(spec.with_nodes(2 * spec.quadrature_nodes), z_plus, z_minus)
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))
