"""Convergence sweeps over (method, eps, tau) grids, tables and trajectory dumps.

Config file format: one ``key = value`` per line, ``#`` starts a comment,
blank lines are ignored.  Keys (all optional):

    experiment    power | sin2          preset for the remaining problem keys
    methods       comma list of method names
    epsilons      comma list; entries may be written as x, x/2^j or x/4^j
    taus          comma list, same syntax
    alpha, T      floats
    nonlinearity  power:lambda:p | sin2[:N]
    phi1, phi2    complex literals such as 1+0i
    output        csv | markdown
    jobs          worker processes (1 = serial)
    ref_tau       upper bound on the reference step
    cache_dir     reference cache directory

The ``power`` preset is alpha=2, f=|y|^2 y, phi1=phi2=1, T=4 with eps = 0.5/2^j
(j = 0..6, 8, 10, 12, 14) and tau = 0.2/4^m (m = 0..6); ``sin2`` is alpha=3,
f=sin^2(|y|^2) y, phi1=phi2=1, T=1 with eps = 1/2^j on the same j and m.
"""
from __future__ import annotations

import functools
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .integrate import METHODS, integrate, step_count
from .model import Problem, convergence_rate
from .nonlinearity import PurePower, parse_nonlinearity
from .reference import ReferenceSettings, generate_reference

TABLE_J = (0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 14)
CLASSICAL_J = (0, 1, 2, 3, 4, 6, 8)
MTI_METHODS = ("mti-fa", "mti-f")

EXPERIMENTS = {
    "power": dict(alpha=2.0, T=4.0, nonlinearity="power:1:1", phi1=1 + 0j, phi2=1 + 0j, eps0=0.5),
    "sin2": dict(alpha=3.0, T=1.0, nonlinearity="sin2", phi1=1 + 0j, phi2=1 + 0j, eps0=1.0),
}


# ---------------------------------------------------------------------------
# literals


_NUM = re.compile(r"^\s*([^/\s]+)\s*(?:/\s*(\d+)\s*\^\s*(-?\d+))?\s*$")


def parse_number(text: str) -> float:
    """'0.5', '0.5/2^3' or '0.2/4^2'."""
    m = _NUM.match(text)
    if not m:
        raise ValueError(f"cannot parse number {text!r}")
    x = float(m.group(1))
    if m.group(2) is not None:
        x /= float(m.group(2)) ** int(m.group(3))
    if not math.isfinite(x):
        raise ValueError(f"number must be finite, got {text!r}")
    return x


def parse_list(text: str) -> tuple[float, ...]:
    return tuple(parse_number(t) for t in text.split(",") if t.strip())


def parse_complex(text: str) -> complex:
    """Complex literal of the form 'a+bi' (also 'a', 'bi', 'a-bi')."""
    t = text.strip().replace(" ", "")
    if not t or re.search(r"[^0-9eE.+\-i]", t) or t.count("i") > 1 or ("i" in t and not t.endswith("i")):
        raise ValueError(f"cannot parse complex literal {text!r}; use the form a+bi")
    try:
        return complex(t[:-1] + "j" if t.endswith("i") else t)
    except ValueError:
        raise ValueError(f"cannot parse complex literal {text!r}; use the form a+bi") from None


def format_complex(z: complex) -> str:
    return f"{z.real:g}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{abs(z.imag):g}i"


def default_epsilons(eps0: float, js: Sequence[int] = TABLE_J) -> tuple[float, ...]:
    return tuple(math.ldexp(eps0, -j) for j in js)


def default_taus(tau0: float = 0.2, count: int = 7) -> tuple[float, ...]:
    return tuple(tau0 / 4.0**m for m in range(count))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple[str, ...] = ("mti-fa",)
    epsilons: tuple[float, ...] = default_epsilons(0.5)
    taus: tuple[float, ...] = default_taus()
    alpha: float = 2.0
    nonlinearity: str = "power:1:1"
    phi1: complex = 1 + 0j
    phi2: complex = 1 + 0j
    T: float = 4.0
    output: str = "markdown"
    jobs: int = 1
    rates: bool = True
    reference: ReferenceSettings = field(default_factory=lambda: ReferenceSettings(strict=False))

    @classmethod
    def experiment(cls, name: str = "power", **overrides) -> "SweepConfig":
        if name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
        e = dict(EXPERIMENTS[name])
        eps0 = e.pop("eps0")
        e["epsilons"] = default_epsilons(eps0)
        e.update(overrides)
        return cls(**e)

    def problem(self, epsilon: float) -> Problem:
        return Problem(float(epsilon), float(self.alpha), _nonlinearity(self.nonlinearity),
                       complex(self.phi1), complex(self.phi2), float(self.T))

    def validate(self) -> "SweepConfig":
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        nl = _nonlinearity(self.nonlinearity)
        if not isinstance(nl, PurePower):
            bad = [m for m in self.methods if m not in MTI_METHODS + ("ewi-f1", "ewi-f2")]
            if bad:
                raise ValueError(f"{', '.join(bad)} support pure power nonlinearities only")
        if self.output not in ("csv", "markdown"):
            raise ValueError(f"output must be csv or markdown, got {self.output!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if any(not (0.0 < e <= 1.0) for e in self.epsilons):
            raise ValueError("epsilons must lie in (0, 1]")
        if any(t <= 0.0 for t in self.taus):
            raise ValueError("taus must be positive")
        for t in self.taus:
            step_count(self.T, t)
        if self.rates:
            for a, b in zip(self.taus, self.taus[1:]):
                if abs(a / b - 4.0) > 1e-12:
                    raise ValueError("rates need a tau list decreasing by exactly a factor 4")
        return self


@functools.lru_cache(maxsize=None)
def _nonlinearity(text: str):
    return parse_nonlinearity(text)


_KEYS = {"experiment", "methods", "epsilons", "taus", "alpha", "T", "nonlinearity", "phi1", "phi2",
         "output", "jobs", "ref_tau", "cache_dir"}


def read_config_file(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in _KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {k!r}")
            out[k] = v
    return out


def config_from_mapping(values: Mapping[str, str]) -> SweepConfig:
    """Build a SweepConfig from string values (config file entries overridden by CLI flags)."""
    v = dict(values)
    cfg = SweepConfig.experiment(v.pop("experiment", "power"))
    kw = {}
    if "methods" in v:
        kw["methods"] = tuple(m.strip().lower() for m in v.pop("methods").split(",") if m.strip())
    for key in ("epsilons", "taus"):
        if key in v:
            kw[key] = parse_list(v.pop(key))
    for key in ("alpha", "T"):
        if key in v:
            kw[key] = parse_number(v.pop(key))
    for key in ("phi1", "phi2"):
        if key in v:
            kw[key] = parse_complex(v.pop(key))
    if "nonlinearity" in v:
        kw["nonlinearity"] = v.pop("nonlinearity")
    if "output" in v:
        kw["output"] = v.pop("output")
    if "jobs" in v:
        kw["jobs"] = int(v.pop("jobs"))
    ref = cfg.reference
    if "ref_tau" in v:
        ref = replace(ref, tau_ref=parse_number(v.pop("ref_tau")))
    if "cache_dir" in v:
        ref = replace(ref, cache_dir=v.pop("cache_dir") or None)
    if v:
        raise ValueError(f"unknown keys: {', '.join(sorted(v))}")
    return replace(cfg, reference=ref, **kw).validate()


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class CellResult:
    method: str
    epsilon: float
    tau: float
    error_y: float
    error_dy_scaled: float
    rate: Optional[float]
    status: str
    wall_time_s: float

    def record(self) -> tuple:
        """Everything except the wall time (the deterministic part); non-finite errors become None."""
        fin = lambda x: x if math.isfinite(x) else None
        return (self.method, self.epsilon, self.tau, fin(self.error_y), fin(self.error_dy_scaled), self.rate,
                self.status)


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    cells: tuple[CellResult, ...]
    richardson: dict = field(default_factory=dict)  # epsilon -> Richardson change of its reference

    def cell(self, method: str, epsilon: float, tau: float) -> CellResult:
        for c in self.cells:
            if c.method == method and c.epsilon == epsilon and c.tau == tau:
                return c
        raise KeyError((method, epsilon, tau))

    def grid(self, method: str) -> np.ndarray:
        """error_y as an (eps, tau) array; unstable or failed cells are inf."""
        out = np.full((len(self.config.epsilons), len(self.config.taus)), np.inf)
        for c in self.cells:
            if c.method == method and c.status == "ok":
                out[self.config.epsilons.index(c.epsilon), self.config.taus.index(c.tau)] = c.error_y
        return out

    def e_inf(self, method: str) -> np.ndarray:
        """Max over the eps grid of error_y for each tau."""
        return self.grid(method).max(axis=0)

    def e_inf_rates(self, method: str) -> list[Optional[float]]:
        e = [_quantize(x) for x in self.e_inf(method)]
        return [None] + [convergence_rate(a, b) for a, b in zip(e, e[1:])]

    def records(self) -> list[tuple]:
        return [c.record() for c in self.cells]


def _quantize(x: float) -> float:
    """Round to the 6 significant digits that the tables print."""
    return float(f"{x:.5e}") if math.isfinite(x) else x


# ---------------------------------------------------------------------------
# sweep


def _reference_task(config: SweepConfig, epsilon: float):
    ref = generate_reference(config.problem(epsilon), [config.T], config.reference)
    return complex(ref.y[-1]), complex(ref.ydot[-1]), ref.richardson_change


def _cell_task(config: SweepConfig, method: str, epsilon: float, tau: float, y_ref: complex, yd_ref: complex):
    problem = config.problem(epsilon)
    t0 = time.perf_counter()
    try:
        tr = integrate(problem, method, tau)
        status = tr.status
    except (ValueError, ArithmeticError, TypeError):
        status = "solver-failed"
    wall = time.perf_counter() - t0
    if status != "ok":
        return method, epsilon, tau, math.nan, math.nan, status, wall
    ey = abs(complex(tr.y[-1]) - y_ref)
    edy = epsilon**2 * abs(complex(tr.ydot[-1]) - yd_ref)
    if not (math.isfinite(ey) and math.isfinite(edy)):
        return method, epsilon, tau, math.nan, math.nan, "unstable", wall
    return method, epsilon, tau, ey, edy, "ok", wall


def _star(args):
    fn, a = args
    return fn(*a)


def _map(jobs: int, tasks: list):
    if jobs <= 1 or len(tasks) <= 1:
        return [_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_star, tasks))


def run_sweep(config: SweepConfig) -> SweepResult:
    """Errors at T for every (method, eps, tau) cell, in grid order."""
    config.validate()
    if not config.methods or not config.epsilons or not config.taus:
        return SweepResult(config, ())
    refs = _map(config.jobs, [(_reference_task, (config, e)) for e in config.epsilons])
    tasks = [(_cell_task, (config, m, e, t, refs[i][0], refs[i][1]))
             for m in config.methods for i, e in enumerate(config.epsilons) for t in config.taus]
    raw = _map(config.jobs, tasks)
    cells = []
    nt = len(config.taus)
    for row in range(0, len(raw), nt):
        prev = None
        for j, (m, e, t, ey, edy, st, wall) in enumerate(raw[row:row + nt]):
            rate = None
            if config.rates and j > 0 and prev is not None and st == "ok":
                rate = convergence_rate(_quantize(prev), _quantize(ey))
            cells.append(CellResult(m, e, t, ey, edy, rate, st, wall))
            prev = ey if st == "ok" else None
    return SweepResult(config, tuple(cells), {e: r[2] for e, r in zip(config.epsilons, refs)})


# ---------------------------------------------------------------------------
# emission


def _sci(x: float) -> str:
    return f"{x:.5e}"


def emit_table(result: SweepResult, format: str = "csv") -> str:
    """CSV (one row per cell) or Markdown (eps rows, tau columns, rate rows interleaved).

    Rates are computed from the printed 6-digit errors and printed with 17
    significant digits in CSV, so they can be recomputed from the file exactly.
    """
    if format == "csv":
        lines = ["method,epsilon,tau,error_y,error_dy_scaled,rate,status,wall_time_s"]
        for c in result.cells:
            if c.status == "ok":
                ey, edy = _sci(c.error_y), _sci(c.error_dy_scaled)
            else:
                ey = edy = c.status
            rate = "" if c.rate is None else repr(c.rate)
            lines.append(f"{c.method},{_sci(c.epsilon)},{_sci(c.tau)},{ey},{edy},{rate},{c.status},"
                         f"{_sci(c.wall_time_s)}")
        return "\n".join(lines) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    cfg = result.config
    out = []
    fmt_rate = lambda r: "---" if r is None else f"{r:.2f}"
    for m in cfg.methods:
        out.append(f"### {m}  (alpha={cfg.alpha:g}, f={cfg.nonlinearity}, T={cfg.T:g})")
        out.append("")
        out.append("| eps \\ tau | " + " | ".join(f"{t:.6g}" for t in cfg.taus) + " |")
        out.append("|---" * (len(cfg.taus) + 1) + "|")
        for e in cfg.epsilons:
            row = [result.cell(m, e, t) for t in cfg.taus]
            out.append(f"| {e:.6g} | " + " | ".join(_sci(c.error_y) if c.status == "ok" else c.status
                                                    for c in row) + " |")
            if cfg.rates:
                out.append("| rate | " + " | ".join(fmt_rate(c.rate) for c in row) + " |")
        einf = result.e_inf(m)
        out.append("| e_inf | " + " | ".join(_sci(x) if math.isfinite(x) else "unstable" for x in einf) + " |")
        if cfg.rates:
            out.append("| rate | " + " | ".join(fmt_rate(r) for r in result.e_inf_rates(m)) + " |")
        out.append("")
    return "\n".join(out)


def dump_trajectory(problem: Problem, method: str, tau: float, sample_stride: int = 1) -> str:
    """Rows 't,re_y,im_y' every sample_stride steps (and at T)."""
    if sample_stride < 1:
        raise ValueError("sample_stride must be at least 1")
    n = step_count(problem.horizon_T, tau)
    steps = sorted(set(range(0, n + 1, sample_stride)) | {n})
    tr = integrate(problem, method, tau, sample_steps=steps)
    lines = ["t,re_y,im_y"]
    for s, y in zip(tr.steps, tr.y):
        if not np.isfinite(y):
            break
        lines.append(f"{s * tau:.17g},{y.real:.17g},{y.imag:.17g}")
    return "\n".join(lines) + "\n"
