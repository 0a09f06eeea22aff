"""Classical integrators for the pure power problem: exponential wave integrators
(Gautschi type with stabilisation, Deuflhard type, mollified impulse with
filters) and finite differences (Crank-Nicolson, semi-implicit, leap-frog)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .coefficients import sinc
from .model import BLOWUP, Problem
from .nonlinearity import PurePower, _pw, power_f, power_g

EWI_G, EWI_D, CNFD, SIFD, EXFD = 0, 1, 2, 3, 4
KIND = {"ewi-g": EWI_G, "ewi-d": EWI_D, "cnfd": CNFD, "sifd": SIFD, "exfd": EXFD}

OK, UNSTABLE, SOLVER_FAILED = 0, 1, 2
CNFD_TOL = 1e-14
CNFD_MAXIT = 200


@dataclass(frozen=True)
class TwoStepState:
    """Levels n-1 and n of a three-term recursion.

    For the EWIs ydot_* come from the exponential y' recursion.  For the
    finite differences ydot_prev is the centred difference at level n-1 and
    ydot_curr the backward difference at level n.
    """

    y_prev: complex
    y_curr: complex
    ydot_prev: complex
    ydot_curr: complex
    alpha_n: float = 0.0
    n: int = 1


@dataclass(frozen=True)
class FilterSet:
    psi: Callable[[float], float]
    phi: Callable[[float], float]
    psi0: Callable[[float], float]
    psi1: Callable[[float], float]


# psi1 = psi/sinc reduces to sinc for both sets, which avoids 0/0 at rho = m pi
F1 = FilterSet(psi=lambda r: sinc(r) ** 2, phi=sinc, psi0=lambda r: math.cos(r) * sinc(r), psi1=sinc)
F2 = FilterSet(psi=lambda r: sinc(r) ** 2, phi=lambda r: 1.0, psi0=lambda r: math.cos(r) * sinc(r), psi1=sinc)


def _power(problem: Problem) -> PurePower:
    nl = problem.nonlinearity
    if not isinstance(nl, PurePower):
        raise TypeError("classical integrators are implemented for pure power nonlinearities only")
    return nl


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _bad(y):
    return not (math.isfinite(y.real) and math.isfinite(y.imag)) or abs(y) > BLOWUP


@njit(cache=True)
def fhat(lam, p, y1, y2):
    """Difference quotient (F(|y1|^2) - F(|y2|^2))/(|y1|^2 - |y2|^2) (y1 + y2)/2 for
    F = lam rho^{p+1}/(p+1), evaluated as the exact polynomial quotient."""
    r1 = y1.real * y1.real + y1.imag * y1.imag
    r2 = y2.real * y2.real + y2.imag * y2.imag
    s = 0.0
    for j in range(p + 1):
        s += _pw(r1, j) * _pw(r2, p - j)
    return lam / (p + 1) * s * 0.5 * (y1 + y2)


@njit(cache=True)
def first_step_kernel(kind, eps2, alpha, lam, p, tau, phi1, phi2):
    om = math.sqrt(1.0 + eps2 * alpha) / eps2
    cw, sw = math.cos(om * tau), math.sin(om * tau)
    g0 = power_g(lam, p, phi1.real * phi1.real + phi1.imag * phi1.imag)
    a0 = 0.0
    if kind == EWI_G:
        a0 = max(0.0, g0)
        omn = math.sqrt(1.0 + eps2 * (alpha + a0)) / eps2
        G = (1.0 - math.cos(omn * tau)) / (eps2 * omn * omn) * (g0 - a0) * phi1
        y1 = math.cos(omn * tau) * phi1 + math.sin(omn * tau) / (eps2 * omn) * phi2 - G
    else:
        y1 = cw * phi1 + sw / (eps2 * om) * phi2 - tau * sw / (2.0 * eps2 * om) * g0 * phi1
    yd1 = -om * sw * phi1 + cw * phi2 / eps2 - sw / (eps2 * om) * g0 * phi1
    return y1, yd1, a0


@njit(cache=True)
def advance_kernel(kind, eps2, alpha, lam, p, tau, yp, y, ydp, an):
    """y^{n+1} (and the EWI y'^{n+1}) from levels n-1, n.  Returns (y1, yd1, an, status)."""
    om = math.sqrt(1.0 + eps2 * alpha) / eps2
    cw, sw = math.cos(om * tau), math.sin(om * tau)
    rho = y.real * y.real + y.imag * y.imag
    g = power_g(lam, p, rho)
    A = alpha + 1.0 / eps2
    yd1 = 0j
    status = OK
    if tau == 0.0:
        return y, ydp, an, status
    if kind == EWI_G or kind == EWI_D:
        if kind == EWI_G:
            an = max(an, g)
            omn = math.sqrt(1.0 + eps2 * (alpha + an)) / eps2
            G = (1.0 - math.cos(omn * tau)) / (eps2 * omn * omn) * (g - an) * y
            y1 = -yp + 2.0 * math.cos(omn * tau) * y - 2.0 * G
        else:
            D = tau * sw / (2.0 * eps2 * om) * g * y
            y1 = -yp + 2.0 * cw * y - 2.0 * D
        yd1 = ydp - 2.0 * om * sw * y - 2.0 * sw / (eps2 * om) * g * y
    elif kind == SIFD:
        c1 = eps2 / (tau * tau) + 0.5 * A
        y1 = -yp + (2.0 * eps2 / (tau * tau) * y - g * y) / c1
    elif kind == EXFD:
        y1 = 2.0 * y - yp - tau * tau / eps2 * (A * y + g * y)
    else:
        c1 = eps2 / (tau * tau) + 0.5 * A
        rhs = 2.0 * eps2 / (tau * tau) * y - c1 * yp
        # damped fixed point started from the semi-implicit solution
        x = -yp + (2.0 * eps2 / (tau * tau) * y - g * y) / c1
        damp = 1.0
        last = math.inf
        status = SOLVER_FAILED
        for _ in range(CNFD_MAXIT):
            xn = (rhs - fhat(lam, p, x, yp)) / c1
            delta = abs(xn - x)
            if delta > last:
                damp = 0.5
            x = x + damp * (xn - x)
            last = delta
            if delta <= CNFD_TOL * (1.0 + abs(x)):
                status = OK
                break
            if not math.isfinite(delta):
                break
        y1 = x
    return y1, yd1, an, status


@njit(cache=True)
def two_step_loop(kind, eps2, alpha, lam, p, tau, phi1, phi2, n, idx, ys, yds):
    """Run n steps; record y, y' at the sorted step indices idx.  Returns (steps, status)."""
    fd = kind >= CNFD
    m = idx.shape[0]
    jy = 0
    jd = 0
    y0 = phi1
    yd0 = phi2 / eps2
    while jy < m and idx[jy] == 0:
        ys[jy] = y0
        jy += 1
    while jd < m and idx[jd] == 0:
        yds[jd] = yd0
        jd += 1
    if n == 0:
        return 0, OK
    y1, yd1, an = first_step_kernel(kind, eps2, alpha, lam, p, tau, phi1, phi2)
    if _bad(y1):
        return 1, UNSTABLE
    yp, y, ydp, yd = y0, y1, yd0, yd1
    while jy < m and idx[jy] == 1:
        ys[jy] = y
        jy += 1
    if not fd:
        while jd < m and idx[jd] == 1:
            yds[jd] = yd
            jd += 1
    last = n + 1 if fd else n
    for k in range(1, last):
        y2, yd2, an, st = advance_kernel(kind, eps2, alpha, lam, p, tau, yp, y, ydp, an)
        if k + 1 <= n:
            if st != OK:
                return k + 1, st
            if _bad(y2):
                return k + 1, UNSTABLE
        if fd:
            # centred y' at level k
            while jd < m and idx[jd] == k:
                yds[jd] = (y2 - yp) / (2.0 * tau)
                jd += 1
        else:
            while jd < m and idx[jd] == k + 1:
                yds[jd] = yd2
                jd += 1
        while jy < m and idx[jy] == k + 1 and k + 1 <= n:
            ys[jy] = y2
            jy += 1
        yp, y, ydp, yd = y, y2, yd, yd2
    return n, OK


@njit(cache=True)
def ewi_filtered_step(y, yd, prm):
    eps2, lam, p, tau, om, cw, sw, psi, phi, psi0, psi1 = prm
    f0 = power_f(lam, p, phi * y)
    y1 = cw * y + sw / om * yd - tau * tau / (2.0 * eps2) * psi * f0
    f1 = power_f(lam, p, phi * y1)
    yd1 = -om * sw * y + cw * yd - tau / (2.0 * eps2) * (psi0 * f0 + psi1 * f1)
    return y1, yd1


def filtered_params(problem: Problem, tau: float, filters: FilterSet):
    nl = _power(problem)
    eps2 = problem.epsilon**2
    om = math.sqrt(1.0 + eps2 * problem.alpha) / eps2
    rho = om * tau
    return (eps2, nl.lam, nl.p, float(tau), om, math.cos(rho), math.sin(rho),
            float(filters.psi(rho)), float(filters.phi(rho)), float(filters.psi0(rho)), float(filters.psi1(rho)))


# ---------------------------------------------------------------------------
# single-step API


def _args(problem: Problem, tau: float):
    nl = _power(problem)
    return problem.epsilon**2, problem.alpha, nl.lam, nl.p, float(tau)


def first_step(problem: Problem, tau: float, method: str = "ewi-d") -> TwoStepState:
    """Levels 0 and 1; y^1 from the Deuflhard start (or its stabilised Gautschi analogue)."""
    eps2, alpha, lam, p, tau = _args(problem, tau)
    y1, yd1, a0 = first_step_kernel(KIND[method], eps2, alpha, lam, p, tau, problem.phi1, problem.phi2)
    return TwoStepState(problem.phi1, y1, problem.phi2 / eps2, yd1, a0, 1)


def _advance(kind, problem, state: TwoStepState, tau) -> TwoStepState:
    eps2, alpha, lam, p, tau = _args(problem, tau)
    y2, yd2, an, st = advance_kernel(kind, eps2, alpha, lam, p, tau, complex(state.y_prev),
                                     complex(state.y_curr), complex(state.ydot_prev), float(state.alpha_n))
    if st == SOLVER_FAILED:
        raise RuntimeError("CNFD fixed-point iteration did not converge")
    if kind >= CNFD:
        ydp = (y2 - state.y_prev) / (2.0 * tau) if tau != 0.0 else state.ydot_curr
        ydc = (y2 - state.y_curr) / tau if tau != 0.0 else state.ydot_curr
        return TwoStepState(state.y_curr, y2, ydp, ydc, an, state.n + 1)
    return TwoStepState(state.y_curr, y2, state.ydot_curr, yd2, an, state.n + 1)


def step_ewi_g(problem: Problem, state: TwoStepState, tau: float) -> TwoStepState:
    return _advance(EWI_G, problem, state, tau)


def step_ewi_d(problem: Problem, state: TwoStepState, tau: float) -> TwoStepState:
    return _advance(EWI_D, problem, state, tau)


def step_cnfd(problem: Problem, state: TwoStepState, tau: float) -> TwoStepState:
    return _advance(CNFD, problem, state, tau)


def step_sifd(problem: Problem, state: TwoStepState, tau: float) -> TwoStepState:
    return _advance(SIFD, problem, state, tau)


def step_exfd(problem: Problem, state: TwoStepState, tau: float) -> TwoStepState:
    return _advance(EXFD, problem, state, tau)


def step_ewi_filtered(problem: Problem, y: complex, ydot: complex, tau: float,
                      filters: FilterSet) -> tuple[complex, complex]:
    """One step of the mollified impulse method in (y, y')."""
    return ewi_filtered_step(complex(y), complex(ydot), filtered_params(problem, tau, filters))


# ---------------------------------------------------------------------------
# structure checks


def fd_residual(method: str, problem: Problem, y_next: complex, y_curr: complex, y_prev: complex,
                tau: float) -> complex:
    """Left-hand side of the finite difference relation at level n."""
    nl = _power(problem)
    eps2 = problem.epsilon**2
    A = problem.alpha + 1.0 / eps2
    d2 = eps2 * (y_next - 2.0 * y_curr + y_prev) / tau**2
    if method == "cnfd":
        return d2 + A * 0.5 * (y_next + y_prev) + fhat(nl.lam, nl.p, complex(y_next), complex(y_prev))
    if method == "sifd":
        return d2 + A * 0.5 * (y_next + y_prev) + nl.g(abs(y_curr) ** 2) * y_curr
    if method == "exfd":
        return d2 + A * y_curr + nl.g(abs(y_curr) ** 2) * y_curr
    raise ValueError(method)


def cnfd_energy(problem: Problem, y_n: complex, y_np1: complex, tau: float) -> float:
    """Discrete energy conserved by the Crank-Nicolson scheme."""
    nl = _power(problem)
    eps2 = problem.epsilon**2
    r0, r1 = abs(y_n) ** 2, abs(y_np1) ** 2
    return (eps2 * abs((y_np1 - y_n) / tau) ** 2 + (problem.alpha + 1.0 / eps2) * 0.5 * (r1 + r0)
            + 0.5 * (nl.antiderivative(r1) + nl.antiderivative(r0)))


def cnfd_levels(problem: Problem, tau: float, n: int) -> np.ndarray:
    """y^0 .. y^n of the Crank-Nicolson scheme."""
    eps2, alpha, lam, p, tau = _args(problem, tau)
    idx = np.arange(n + 1)
    ys = np.full(n + 1, np.nan + 0j)
    yds = np.full(n + 1, np.nan + 0j)
    _, st = two_step_loop(CNFD, eps2, alpha, lam, p, tau, problem.phi1, problem.phi2, n, idx, ys, yds)
    if st != OK:
        raise RuntimeError("CNFD run failed")
    return ys
