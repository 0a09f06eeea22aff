"""Multiscale time integrators MTI-FA and MTI-F.

Each step splits (y^n, y'^n) into z+-, r (see :mod:`decomposition`), evolves
the profiles over [0, tau] and reconstructs (y^{n+1}, y'^{n+1}).  Power
nonlinearities use closed-form harmonics and Gautschi weights; general ones
use quadrature averages with the beta/gamma weights.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from numba import njit

from .coefficients import CoefficientSet, coefficient_set
from .decomposition import (SPLIT_GENERAL_JIT, SPLIT_GENERAL_PY, reconstruct_kernel,
                            split_power)
from .model import Problem, State
from .nonlinearity import QUAD_JIT, QUAD_PY, General, PurePower, gk_flow, power_f

FA_POWER = "FA_power"
F_POWER = "F_power"
FA_GENERAL = "FA_general"
F_GENERAL = "F_general"


# ---------------------------------------------------------------------------
# power kernels


@njit(cache=True)
def _harmonics(lam, p, zp, zm, dzp, dzm, P, Q, PD, QD):
    # sum_k [p_k g_k+ + q_k gdot_k+ + conj(p_k g_k- + q_k gdot_k-)] and the cosine-kernel analogue
    s = 0j
    sd = 0j
    for k in range(1, p + 1):
        gp, dgp = gk_flow(lam, p, k, zp, zm, dzp, dzm)
        gm, dgm = gk_flow(lam, p, k, zm, zp, dzm, dzp)
        s += P[k - 1] * gp + Q[k - 1] * dgp + (P[k - 1] * gm + Q[k - 1] * dgm).conjugate()
        sd += PD[k - 1] * gp + QD[k - 1] * dgp + (PD[k - 1] * gm + QD[k - 1] * dgm).conjugate()
    return s, sd


@njit(cache=True)
def fa_power_step(y, yd, prm):
    eps2, alpha, lam, p, tau, ph, cw, sww, P, Q, PD, QD = prm
    zp, zm, dzp, dzm, rd0, mup, mum, u0 = split_power(y, yd, eps2, alpha, lam, p)
    s, sd = _harmonics(lam, p, zp, zm, dzp, dzm, P, Q, PD, QD)
    lin = rd0 - 0.5 * tau * u0
    # profiles follow the exact phase flow
    zp1 = np.exp(1j * mup * tau) * zp
    zm1 = np.exp(1j * mum * tau) * zm
    dzp1 = 1j * mup * zp1
    dzm1 = 1j * mum * zm1
    r1 = sww * lin - s
    y1 = ph * zp1 + (ph * zm1).conjugate() + r1
    u1 = -mup * mup * ph * zp1 - mum * mum * (ph * zm1).conjugate()
    h1 = power_f(lam, p, y1) - power_f(lam, p, y1 - r1)
    rd1 = cw * lin - sd - 0.5 * tau * (h1 * (1.0 / eps2) + u1)
    return reconstruct_kernel(zp1, zm1, dzp1, dzm1, r1, rd1, ph, eps2)


@njit(cache=True)
def f_power_step(y, yd, prm):
    eps2, alpha, lam, p, tau, ph, cw, sww, P, Q, PD, QD, a, b, ad, bd, c, d, cd, dd = prm
    zp, zm, dzp, dzm, rd0, mup, mum, u0 = split_power(y, yd, eps2, alpha, lam, p)
    fp, dfp = gk_flow(lam, p, 0, zp, zm, dzp, dzm)
    fm, dfm = gk_flow(lam, p, 0, zm, zp, dzm, dzp)
    s, sd = _harmonics(lam, p, zp, zm, dzp, dzm, P, Q, PD, QD)
    zp1 = a * zp + eps2 * b * dzp - c * fp - d * dfp
    zm1 = a * zm + eps2 * b * dzm - c * fm - d * dfm
    dzp1 = ad * zp + eps2 * bd * dzp - cd * fp - dd * dfp
    dzm1 = ad * zm + eps2 * bd * dzm - cd * fm - dd * dfm
    r1 = sww * rd0 - s
    y1 = ph * zp1 + (ph * zm1).conjugate() + r1
    h1 = power_f(lam, p, y1) - power_f(lam, p, y1 - r1)
    rd1 = cw * rd0 - sd - 0.5 * tau * h1 * (1.0 / eps2)
    return reconstruct_kernel(zp1, zm1, dzp1, dzm1, r1, rd1, ph, eps2)


# ---------------------------------------------------------------------------
# general kernels


def _make_general_steps(deco, quad, split_general):
    fpm, dfpm, fr = quad

    @deco
    def fa_general_step(y, yd, prm):
        f, fy, fyb, E, eps2, alpha, tau, ph, cw, sww, pha, b1, b2, g1, g2, g3 = prm
        zp, zm, dzp, dzm, rd0, u0, fp, fm, dfp, dfm = split_general(f, fy, fyb, E, y, yd, eps2, alpha)
        fr0 = fr(f, fp, fm, zp, zm, 0j, 1.0 + 0j)
        zp1 = pha * zp + b1 * fp + b2 * dfp
        zm1 = pha * zm + b1 * fm + b2 * dfm
        lin = rd0 - 0.5 * tau * u0
        r1 = sww * lin - g1 * fr0
        fp1, fm1 = fpm(f, E, zp1, zm1)
        dzp1 = 0.5j * (alpha * zp1 + fp1)
        dzm1 = 0.5j * (alpha * zm1 + fm1)
        dfp1, dfm1 = dfpm(fy, fyb, E, zp1, zm1, dzp1, dzm1)
        ddzp1 = 0.5j * (alpha * dzp1 + dfp1)
        ddzm1 = 0.5j * (alpha * dzm1 + dfm1)
        u1 = ph * ddzp1 + (ph * ddzm1).conjugate()
        fr1 = fr(f, fp1, fm1, zp1, zm1, r1, ph)
        rd1 = cw * lin - 0.5 * tau * u1 - g2 * fr0 - g3 * fr1
        return reconstruct_kernel(zp1, zm1, dzp1, dzm1, r1, rd1, ph, eps2)

    @deco
    def f_general_step(y, yd, prm):
        f, fy, fyb, E, eps2, alpha, tau, ph, cw, sww, a, b, ad, bd, c, d, cd, dd, g1, g2, g3 = prm
        zp, zm, dzp, dzm, rd0, u0, fp, fm, dfp, dfm = split_general(f, fy, fyb, E, y, yd, eps2, alpha)
        fr0 = fr(f, fp, fm, zp, zm, 0j, 1.0 + 0j)
        zp1 = a * zp + eps2 * b * dzp - c * fp - d * dfp
        zm1 = a * zm + eps2 * b * dzm - c * fm - d * dfm
        dzp1 = ad * zp + eps2 * bd * dzp - cd * fp - dd * dfp
        dzm1 = ad * zm + eps2 * bd * dzm - cd * fm - dd * dfm
        r1 = sww * rd0 - g1 * fr0
        fp1, fm1 = fpm(f, E, zp1, zm1)
        fr1 = fr(f, fp1, fm1, zp1, zm1, r1, ph)
        rd1 = cw * rd0 - g2 * fr0 - g3 * fr1
        return reconstruct_kernel(zp1, zm1, dzp1, dzm1, r1, rd1, ph, eps2)

    return fa_general_step, f_general_step


GENERAL_STEPS_JIT = _make_general_steps(njit, QUAD_JIT, SPLIT_GENERAL_JIT)
GENERAL_STEPS_PY = _make_general_steps(lambda fn: fn, QUAD_PY, SPLIT_GENERAL_PY)


# ---------------------------------------------------------------------------
# parameter packing


def _gautschi_arrays(cs: CoefficientSet):
    g = cs.gautschi
    return tuple(np.array([getattr(w, n) for w in g], dtype=complex) if g else np.zeros(0, complex)
                 for n in ("p", "q", "pdot", "qdot"))


def step_params(variant: str, problem: Problem, tau: float):
    """(kernel, parameter tuple) for one MTI variant."""
    nl = problem.nonlinearity
    eps2 = problem.epsilon**2
    power = isinstance(nl, PurePower)
    if variant in (FA_POWER, F_POWER) and not power:
        raise TypeError(f"{variant} needs a PurePower nonlinearity")
    if variant in (FA_GENERAL, F_GENERAL) and not isinstance(nl, (General, PurePower)):
        raise TypeError(f"{variant} needs a General nonlinearity")
    if variant in (FA_GENERAL, F_GENERAL) and power:
        nl = nl.as_general()
    cs = coefficient_set(float(tau), problem.epsilon, problem.alpha, nl.p if power and variant in (FA_POWER, F_POWER) else 0)
    ab, bg = cs.ab, cs.bg
    abt = (ab.a, ab.b, ab.adot, ab.bdot, ab.c, ab.d, ab.cdot, ab.ddot)
    common = (float(tau), cs.fast, cs.cos_wt, cs.sin_wt_over_w)
    if variant == FA_POWER:
        return fa_power_step, (eps2, problem.alpha, nl.lam, nl.p) + common + _gautschi_arrays(cs)
    if variant == F_POWER:
        return f_power_step, (eps2, problem.alpha, nl.lam, nl.p) + common + _gautschi_arrays(cs) + abt
    fa, fstep = GENERAL_STEPS_JIT if nl.jit else GENERAL_STEPS_PY
    head = (nl.f, nl.df_dy, nl.df_dybar, nl.nodes, eps2, problem.alpha)
    if variant == FA_GENERAL:
        return fa, head + common + (cs.phase_alpha, bg.beta1, bg.beta2, bg.gamma1, bg.gamma2, bg.gamma3)
    if variant == F_GENERAL:
        return fstep, head + common + abt + (bg.gamma1, bg.gamma2, bg.gamma3)
    raise ValueError(f"unknown MTI variant {variant!r}")


def default_variant(problem: Problem, fa: bool = True) -> str:
    if isinstance(problem.nonlinearity, PurePower):
        return FA_POWER if fa else F_POWER
    return FA_GENERAL if fa else F_GENERAL


@dataclass(frozen=True)
class MtiMethod:
    """One MTI variant bound to a problem and a step size."""

    variant: str
    problem: Problem
    tau: float

    def step(self, state: State) -> State:
        kernel, prm = step_params(self.variant, self.problem, self.tau)
        y, yd = kernel(complex(state.y), complex(state.ydot), prm)
        return State(state.t + self.tau, y, yd)


def step_mti_fa_power(problem: Problem, state: State, tau: float) -> State:
    return MtiMethod(FA_POWER, problem, tau).step(state)


def step_mti_f_power(problem: Problem, state: State, tau: float) -> State:
    return MtiMethod(F_POWER, problem, tau).step(state)


def step_mti_fa_general(problem: Problem, state: State, tau: float) -> State:
    return MtiMethod(FA_GENERAL, problem, tau).step(state)


def step_mti_f_general(problem: Problem, state: State, tau: float) -> State:
    return MtiMethod(F_GENERAL, problem, tau).step(state)
