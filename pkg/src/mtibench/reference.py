"""Reference ("exact") solutions: generation, on-disk cache and cross-checks.

The main generator is MTI-FA at a very fine step.  An independent classical
RK4 on the rescaled equation (s = t/eps^2)

    y_ss = -(1 + alpha eps^2) y - eps^2 f(y),   y(0) = phi1,  y_s(0) = phi2,

guards against a shared bug for eps >= 0.05; below that only Richardson
halving and an MTI-F reference at the same step are available.

Cache record: one row per sample time, five little-endian float64 values
(t, Re y, Im y, Re y', Im y') in ``<fingerprint>.bin``, or the same columns as
CSV (``%.17g``) in ``<fingerprint>.csv``; metadata sits in ``<fingerprint>.json``.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from filelock import FileLock
from numba import njit

from .integrate import integrate
from .model import Problem, linear_solution
from .nonlinearity import General, PurePower

CACHE_ENV = "MTIBENCH_CACHE_DIR"
RK4_MIN_EPS = 0.05


class ReferenceError(RuntimeError):
    """The reference could not be certified."""


@dataclass(frozen=True)
class ReferenceSettings:
    tau_ref: float = 1e-6  # upper bound on the fine step
    anchor_step: Optional[float] = 0.2  # fine step is anchor/2^k so coarse grids hit T exactly
    generator: str = "mti-fa"
    richardson: bool = True
    richardson_tol: float = 1e-9
    strict: bool = True  # refuse (raise) when the Richardson check fails
    cache_dir: Optional[str] = None
    cache_format: str = "bin"

    def fine_step(self) -> float:
        if self.anchor_step is None:
            return self.tau_ref
        k = max(0, math.ceil(math.log2(self.anchor_step / self.tau_ref)))
        return math.ldexp(self.anchor_step, -k)


@dataclass(frozen=True)
class ReferenceSolution:
    fingerprint: str
    times: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    generator: str
    tau_ref: float
    richardson_change: Optional[float] = None

    def certified(self, tol: float = 1e-9) -> bool:
        return self.richardson_change is not None and self.richardson_change <= tol

    def sample(self, t: float) -> tuple[complex, complex]:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} was not sampled")
        return complex(self.y[j]), complex(self.ydot[j])


@dataclass(frozen=True)
class CrossValidationReport:
    epsilon: float
    rk4_deviation: Optional[float]
    mti_f_deviation: Optional[float]
    richardson_change: Optional[float]
    note: str

    def __str__(self):
        fmt = lambda v: "n/a" if v is None else f"{v:.3e}"
        return (f"eps={self.epsilon:g}: rk4 deviation {fmt(self.rk4_deviation)}, "
                f"mti-f deviation {fmt(self.mti_f_deviation)}, richardson change "
                f"{fmt(self.richardson_change)} ({self.note})")


# ---------------------------------------------------------------------------
# fingerprint and cache


def nonlinearity_key(nl) -> str:
    if isinstance(nl, PurePower):
        return nl.name
    return f"{nl.name}:N={nl.quadrature_nodes}"


def fingerprint(problem: Problem, sample_times: Sequence[float], generator: str, tau_ref: float) -> str:
    payload = {
        "epsilon": float(problem.epsilon).hex(),
        "alpha": float(problem.alpha).hex(),
        "nonlinearity": nonlinearity_key(problem.nonlinearity),
        "phi1": [problem.phi1.real.hex(), problem.phi1.imag.hex()],
        "phi2": [problem.phi2.real.hex(), problem.phi2.imag.hex()],
        "T": float(problem.horizon_T).hex(),
        "generator": generator,
        "tau_ref": float(tau_ref).hex(),
        "times": [float(t).hex() for t in sample_times],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def cache_dir(settings: ReferenceSettings) -> Optional[Path]:
    d = settings.cache_dir or os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def write_record(path: Path, times, y, ydot) -> None:
    rows = np.column_stack([times, y.real, y.imag, ydot.real, ydot.imag]).astype("<f8")
    if path.suffix == ".csv":
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header="t,re_y,im_y,re_ydot,im_ydot", comments="")
    else:
        path.write_bytes(rows.tobytes())


def read_record(path: Path):
    if path.suffix == ".csv":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    else:
        rows = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(-1, 5)
    return rows[:, 0].copy(), rows[:, 1] + 1j * rows[:, 2], rows[:, 3] + 1j * rows[:, 4]


# ---------------------------------------------------------------------------
# generation


def _run(problem: Problem, generator: str, tau: float, times: np.ndarray):
    steps = np.rint(times / tau).astype(np.int64)
    if np.any(np.abs(steps * tau - times) > 1e-9 * np.maximum(1.0, times)):
        raise ReferenceError(f"sample times are not multiples of the fine step {tau!r}")
    n = int(steps.max()) if steps.size else 0
    tr = integrate(problem, generator, tau, sample_steps=steps, n_steps=n)
    if tr.status != "ok":
        raise ReferenceError(f"reference trajectory {tr.status} at step {tr.steps_done}")
    lookup = {int(s): j for j, s in enumerate(tr.steps)}
    order = [lookup[int(s)] for s in steps]
    return tr.y[order], tr.ydot[order]


def generate_reference(problem: Problem, sample_times: Optional[Sequence[float]] = None,
                       settings: ReferenceSettings = ReferenceSettings()) -> ReferenceSolution:
    """Fine-step MTI trajectory sampled at the requested times (default: T)."""
    times = np.asarray([problem.horizon_T] if sample_times is None else sample_times, dtype=float)
    if np.any(times < 0) or np.any(times > problem.horizon_T * (1 + 1e-12)):
        raise ValueError("sample times must lie in [0, T]")
    ref = _cached_or_generated(problem, times, settings)
    if settings.strict and settings.richardson and ref.richardson_change is not None \
            and not ref.richardson_change <= settings.richardson_tol:
        raise ReferenceError(f"Richardson check failed: halving the step changed y by {ref.richardson_change:.3e} "
                             f"(> {settings.richardson_tol:.1e}) at eps={problem.epsilon}")
    return ref


def _cached_or_generated(problem, times, settings) -> ReferenceSolution:
    tau = settings.fine_step()
    fp = fingerprint(problem, times, settings.generator, tau)
    d = cache_dir(settings)
    if d is not None:
        d.mkdir(parents=True, exist_ok=True)
        data = d / f"{fp}.{settings.cache_format}"
        meta = d / f"{fp}.json"
        with FileLock(str(d / f"{fp}.lock")):
            if data.exists() and meta.exists():
                info = json.loads(meta.read_text())
                if info["richardson_change"] is not None or not settings.richardson:
                    t, y, yd = read_record(data)
                    return ReferenceSolution(fp, t, y, yd, info["generator"], info["tau_ref"],
                                             info["richardson_change"])
            ref = _generate(problem, times, settings, tau, fp)
            write_record(data, ref.times, ref.y, ref.ydot)
            meta.write_text(json.dumps({"generator": ref.generator, "tau_ref": ref.tau_ref,
                                        "richardson_change": ref.richardson_change,
                                        "epsilon": problem.epsilon, "alpha": problem.alpha,
                                        "nonlinearity": nonlinearity_key(problem.nonlinearity),
                                        "T": problem.horizon_T}, indent=1))
            return ref
    return _generate(problem, times, settings, tau, fp)


def _generate(problem, times, settings, tau, fp) -> ReferenceSolution:
    y, yd = _run(problem, settings.generator, tau, times)
    change = None
    if settings.richardson and times.size and times.max() > 0:
        y2, _ = _run(problem, settings.generator, tau / 2, times)
        change = float(np.max(np.abs(y2 - y)))
    return ReferenceSolution(fp, times.copy(), y, yd, settings.generator, tau, change)


# ---------------------------------------------------------------------------
# independent RK4 on the rescaled equation


def _make_rk4(deco):
    @deco
    def rk4(f, eps2, k2, y, v, s_marks, h, ys, vs):
        # y'' = -k2 y - eps2 f(y); records at the rescaled times s_marks (sorted, s_marks[0] >= 0)
        s = 0.0
        for j in range(s_marks.shape[0]):
            span = s_marks[j] - s
            m = int(math.ceil(span / h - 1e-9)) if span > 0 else 0
            if m > 0:
                dt = span / m
                for _ in range(m):
                    a1 = -k2 * y - eps2 * f(y)
                    yb = y + 0.5 * dt * v
                    vb = v + 0.5 * dt * a1
                    a2 = -k2 * yb - eps2 * f(yb)
                    yc = y + 0.5 * dt * vb
                    vc = v + 0.5 * dt * a2
                    a3 = -k2 * yc - eps2 * f(yc)
                    yd = y + dt * vc
                    vd = v + dt * a3
                    a4 = -k2 * yd - eps2 * f(yd)
                    y = y + dt / 6.0 * (v + 2.0 * vb + 2.0 * vc + vd)
                    v = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            s = s_marks[j]
            ys[j] = y
            vs[j] = v
        return ys, vs

    return rk4


RK4_JIT = _make_rk4(njit)
RK4_PY = _make_rk4(lambda fn: fn)


def rk4_rescaled(problem: Problem, sample_times: Sequence[float], h: float = 1e-4):
    """(y, y') at the sample times from classical RK4 in s = t/eps^2 with step h."""
    nl = problem.nonlinearity
    g = nl.as_general() if isinstance(nl, PurePower) else nl
    eps2 = problem.epsilon**2
    times = np.asarray(sample_times, dtype=float)
    order = np.argsort(times)
    marks = times[order] / eps2
    ys = np.empty(times.size, complex)
    vs = np.empty(times.size, complex)
    (RK4_JIT if g.jit else RK4_PY)(g.f, eps2, 1.0 + problem.alpha * eps2, problem.phi1, problem.phi2 + 0j,
                                   marks, h, ys, vs)
    out_y = np.empty_like(ys)
    out_v = np.empty_like(vs)
    out_y[order] = ys
    out_v[order] = vs / eps2
    return out_y, out_v


def cross_validate(ref: ReferenceSolution, problem: Problem, rk4_step: float = 1e-4) -> CrossValidationReport:
    """Compare a reference with independent generators."""
    if problem.epsilon >= RK4_MIN_EPS:
        y, _ = rk4_rescaled(problem, ref.times, rk4_step)
        return CrossValidationReport(problem.epsilon, float(np.max(np.abs(y - ref.y))), None,
                                     ref.richardson_change, "RK4 on the rescaled equation")
    other = "mti-f" if ref.generator == "mti-fa" else "mti-fa"
    y, _ = _run(problem, other, ref.tau_ref, ref.times)
    return CrossValidationReport(problem.epsilon, None, float(np.max(np.abs(y - ref.y))),
                                 ref.richardson_change, "RK4 path skipped, Richardson only")


def linear_deviation(ref: ReferenceSolution, problem: Problem) -> float:
    """Max |y_ref - y_linear| (meaningful only when f vanishes)."""
    return max(abs(complex(y) - linear_solution(problem, float(t)).y) for t, y in zip(ref.times, ref.y))
