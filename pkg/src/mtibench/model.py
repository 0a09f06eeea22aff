"""Problem and state definitions, energy, error metrics and convergence rates.

The model is the scalar oscillatory equation

    eps^2 y'' + (alpha + 1/eps^2) y + f(y) = 0,   y(0) = phi1,  y'(0) = phi2/eps^2,

on 0 <= t <= T, with a gauge invariant nonlinearity f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .nonlinearity import NonlinearitySpec, PurePower

#: magnitude of |y| above which a trajectory is declared unstable
BLOWUP = 1e8


@dataclass(frozen=True)
class Problem:
    epsilon: float
    alpha: float
    nonlinearity: NonlinearitySpec
    phi1: complex = 1.0 + 0j
    phi2: complex = 1.0 + 0j
    horizon_T: float = 4.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.horizon_T >= 0.0:
            raise ValueError(f"horizon_T must be nonnegative, got {self.horizon_T}")
        object.__setattr__(self, "phi1", complex(self.phi1))
        object.__setattr__(self, "phi2", complex(self.phi2))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "horizon_T", float(self.horizon_T))

    @property
    def initial_state(self) -> "State":
        return State(0.0, self.phi1, self.phi2 / self.epsilon**2)

    def replace(self, **kw) -> "Problem":
        d = dict(epsilon=self.epsilon, alpha=self.alpha, nonlinearity=self.nonlinearity,
                 phi1=self.phi1, phi2=self.phi2, horizon_T=self.horizon_T)
        d.update(kw)
        return Problem(**d)


@dataclass(frozen=True)
class State:
    t: float
    y: complex
    ydot: complex

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.y) and np.isfinite(self.ydot))

    @property
    def blown_up(self) -> bool:
        return not self.finite or abs(self.y) > BLOWUP


@dataclass(frozen=True)
class ErrorPair:
    e: float
    edot_scaled: float


@dataclass(frozen=True)
class ErrorEnergy:
    value: float


def energy(problem: Problem, state: State) -> float:
    """Hamiltonian eps^2|y'|^2 + (alpha + 1/eps^2)|y|^2 + F(|y|^2)."""
    nl = problem.nonlinearity
    F = getattr(nl, "antiderivative", None)
    if F is None:
        raise ValueError("energy needs a nonlinearity with a known antiderivative F")
    eps2 = problem.epsilon**2
    rho = abs(state.y) ** 2
    return eps2 * abs(state.ydot) ** 2 + (problem.alpha + 1.0 / eps2) * rho + F(rho)


def error_pair(exact: State, numeric: State, epsilon: float) -> ErrorPair:
    return ErrorPair(abs(exact.y - numeric.y), epsilon**2 * abs(exact.ydot - numeric.ydot))


def error_energy(problem: Problem, e: complex, edot: complex) -> ErrorEnergy:
    eps2 = problem.epsilon**2
    return ErrorEnergy(eps2 * abs(edot) ** 2 + (problem.alpha + 1.0 / eps2) * abs(e) ** 2)


def convergence_rate(error_coarse: float, error_fine: float) -> Optional[float]:
    """Observed order for a quartered step, 0.5*log2(e(4 tau)/e(tau)).

    Returns None when either error is zero or not finite.
    """
    if not (math.isfinite(error_coarse) and math.isfinite(error_fine)):
        return None
    if error_coarse <= 0.0 or error_fine <= 0.0:
        return None
    return 0.5 * math.log2(error_coarse / error_fine)


def linear_solution(problem: Problem, t: float) -> State:
    """Closed-form solution when f vanishes identically."""
    eps2 = problem.epsilon**2
    w = math.sqrt(1.0 + eps2 * problem.alpha) / eps2
    y0, v0 = problem.phi1, problem.phi2 / eps2
    c, s = math.cos(w * t), math.sin(w * t)
    return State(t, c * y0 + s / w * v0, -w * s * y0 + c * v0)


def is_power(problem: Problem) -> bool:
    return isinstance(problem.nonlinearity, PurePower)
