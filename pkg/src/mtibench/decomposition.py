"""Per-step split of (y, y') into two eps^2-frequency profiles z+- and a remainder r,
and the reconstruction of (y, y') after the profiles have been evolved over one step."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from numba import njit

from .coefficients import fast_phase
from .model import Problem, State
from .nonlinearity import QUAD_JIT, QUAD_PY, General, PurePower, g_pm_kernel

MDF = "MDF"
MDFA = "MDFA"


@dataclass(frozen=True)
class DecomposedState:
    z_plus: complex
    z_minus: complex
    zdot_plus: complex
    zdot_minus: complex
    r: complex
    rdot: complex
    mu_plus: Optional[float] = None
    mu_minus: Optional[float] = None
    u0: Optional[complex] = None


@njit(cache=True)
def split_profiles(y, yd, eps2):
    return 0.5 * (y - 1j * eps2 * yd), 0.5 * (y.conjugate() - 1j * eps2 * yd.conjugate())


@njit(cache=True)
def split_power(y, yd, eps2, alpha, lam, p):
    zp, zm = split_profiles(y, yd, eps2)
    rp = zp.real * zp.real + zp.imag * zp.imag
    rm = zm.real * zm.real + zm.imag * zm.imag
    gp, gm = g_pm_kernel(lam, p, rp, rm)
    mup = 0.5 * (gp + alpha)
    mum = 0.5 * (gm + alpha)
    dzp = 1j * mup * zp
    dzm = 1j * mum * zm
    rd0 = -dzp - dzm.conjugate()
    u0 = -mup * mup * zp - mum * mum * zm.conjugate()
    return zp, zm, dzp, dzm, rd0, mup, mum, u0


@njit(cache=True)
def reconstruct_kernel(zp, zm, dzp, dzm, r, rd, ph, eps2):
    """ph = exp(i s/eps^2) at the evaluation time s."""
    y = ph * zp + (ph * zm).conjugate() + r
    yd = ph * (dzp + 1j * zp / eps2) + (ph * (dzm + 1j * zm / eps2)).conjugate() + rd
    return y, yd


def _make_split_general(deco, quad):
    fpm, dfpm, _ = quad

    @deco
    def split_general(f, fy, fyb, E, y, yd, eps2, alpha):
        zp = 0.5 * (y - 1j * eps2 * yd)
        zm = 0.5 * (y.conjugate() - 1j * eps2 * yd.conjugate())
        fp, fm = fpm(f, E, zp, zm)
        dzp = 0.5j * (alpha * zp + fp)
        dzm = 0.5j * (alpha * zm + fm)
        dfp, dfm = dfpm(fy, fyb, E, zp, zm, dzp, dzm)
        rd0 = -dzp - dzm.conjugate()
        u0 = 0.5j * (alpha * (dzp - dzm.conjugate()) + dfp - dfm.conjugate())
        return zp, zm, dzp, dzm, rd0, u0, fp, fm, dfp, dfm

    return split_general


SPLIT_GENERAL_JIT = _make_split_general(njit, QUAD_JIT)
SPLIT_GENERAL_PY = _make_split_general(lambda fn: fn, QUAD_PY)


def split(problem: Problem, y_n: complex, ydot_n: complex, mode: str = MDFA) -> DecomposedState:
    if mode not in (MDF, MDFA):
        raise ValueError(f"mode must be MDF or MDFA, got {mode!r}")
    eps2 = problem.epsilon**2
    nl = problem.nonlinearity
    y, yd = complex(y_n), complex(ydot_n)
    if isinstance(nl, PurePower):
        zp, zm, dzp, dzm, rd0, mup, mum, u0 = split_power(y, yd, eps2, problem.alpha, nl.lam, nl.p)
        return DecomposedState(zp, zm, dzp, dzm, 0j, rd0, mup, mum, u0 if mode == MDFA else None)
    sg = SPLIT_GENERAL_JIT if nl.jit else SPLIT_GENERAL_PY
    zp, zm, dzp, dzm, rd0, u0, *_ = sg(nl.f, nl.df_dy, nl.df_dybar, nl.nodes, y, yd, eps2, problem.alpha)
    return DecomposedState(zp, zm, dzp, dzm, 0j, rd0, None, None, u0 if mode == MDFA else None)


def reconstruct(d: DecomposedState, tau: float, epsilon: float) -> State:
    """(y, y') at local time tau from profiles evaluated at tau; State.t is tau."""
    ph = fast_phase(tau, epsilon) if tau != 0.0 else 1.0 + 0j
    y, yd = reconstruct_kernel(complex(d.z_plus), complex(d.z_minus), complex(d.zdot_plus),
                               complex(d.zdot_minus), complex(d.r), complex(d.rdot), ph, epsilon**2)
    return State(float(tau), y, yd)
