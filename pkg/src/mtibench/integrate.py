"""Uniform driver: run any of the nine integrators over [0, T] and sample (y, y')."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import classical as cl
from . import mti
from .model import BLOWUP, Problem, State
from .nonlinearity import General, PurePower

METHODS = ("mti-fa", "mti-f", "ewi-g", "ewi-d", "ewi-f1", "ewi-f2", "cnfd", "sifd", "exfd")
STATUS = {0: "ok", 1: "unstable", 2: "solver-failed"}


def _make_drive(deco):
    @deco
    def drive(step, prm, y, yd, n, idx, ys, yds):
        m = idx.shape[0]
        j = 0
        while j < m and idx[j] == 0:
            ys[j] = y
            yds[j] = yd
            j += 1
        for i in range(n):
            y, yd = step(y, yd, prm)
            if not (math.isfinite(y.real) and math.isfinite(y.imag)
                    and math.isfinite(yd.real) and math.isfinite(yd.imag)) or abs(y) > BLOWUP:
                return i + 1, 1
            while j < m and idx[j] == i + 1:
                ys[j] = y
                yds[j] = yd
                j += 1
        return n, 0

    return drive


DRIVE_JIT = _make_drive(njit)
DRIVE_PY = _make_drive(lambda fn: fn)


@dataclass(frozen=True)
class Trajectory:
    method: str
    tau: float
    steps: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    status: str
    steps_done: int

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.tau

    def state(self, j: int = -1) -> State:
        return State(float(self.steps[j] * self.tau), complex(self.y[j]), complex(self.ydot[j]))


def step_count(T: float, tau: float) -> int:
    if T == 0.0:
        return 0
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    n = int(round(T / tau))
    if n < 1 or abs(n * tau - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of tau={tau}")
    return n


def integrate(problem: Problem, method: str, tau: float, sample_steps: Optional[Sequence[int]] = None,
              n_steps: Optional[int] = None) -> Trajectory:
    """Integrate to T = n_steps*tau (default round(T/tau)) and sample at the given step indices."""
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    n = step_count(problem.horizon_T, tau) if n_steps is None else int(n_steps)
    idx = np.array(sorted(set([0, n] if sample_steps is None else sample_steps)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] > n):
        raise ValueError("sample steps must lie in [0, n]")
    ys = np.full(idx.size, np.nan + 0j)
    yds = np.full(idx.size, np.nan + 0j)
    y0, yd0 = problem.phi1, problem.phi2 / problem.epsilon**2
    nl = problem.nonlinearity
    if method in ("mti-fa", "mti-f"):
        variant = mti.default_variant(problem, method == "mti-fa")
        kernel, prm = mti.step_params(variant, problem, tau)
        jit = isinstance(nl, PurePower) or nl.jit
        done, st = (DRIVE_JIT if jit else DRIVE_PY)(kernel, prm, y0, yd0, n, idx, ys, yds)
    elif method in ("ewi-f1", "ewi-f2"):
        prm = cl.filtered_params(problem, tau, cl.F1 if method == "ewi-f1" else cl.F2)
        done, st = DRIVE_JIT(cl.ewi_filtered_step, prm, y0, yd0, n, idx, ys, yds)
    else:
        if not isinstance(nl, PurePower):
            raise TypeError(f"{method} is implemented for pure power nonlinearities only")
        eps2 = problem.epsilon**2
        done, st = cl.two_step_loop(cl.KIND[method], eps2, problem.alpha, nl.lam, nl.p, float(tau),
                                    problem.phi1, problem.phi2, n, idx, ys, yds)
    return Trajectory(method, float(tau), idx, ys, yds, STATUS[int(st)], int(done))
