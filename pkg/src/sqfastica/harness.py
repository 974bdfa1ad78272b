"""
Monte Carlo harness: replicated fits, efficiency tables and contour grids.

Replicate ``i`` of a run draws all of its randomness from
``SeedSequence([master_seed, i])``, so results do not depend on execution
order and repeated runs are bitwise identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .asymptotics import are as asymptotic_are
from .asymptotics import expected_mdi_limit, moment_set
from .distributions import SourceDistribution, make_exp_power, make_gamma_std, sample
from .estimators import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    METHODS,
    deflation_fastica,
    initial_rotation,
    squared_symmetric_fastica,
    symmetric_fastica,
    whiten,
)
from .exceptions import DegenerateUpdateError, IdentifiabilityError, ParameterError
from .mdi import minimum_distance_index
from .nonlinearities import Nonlinearity, make_nonlinearity

__all__ = [
    "SimulationConfig",
    "MethodSummary",
    "SimulationResult",
    "run_simulation",
    "AreTable",
    "are_table",
    "ContourGrid",
    "contour_grid",
    "emit",
]

_FITTERS = {
    "defl": deflation_fastica,
    "sym": symmetric_fastica,
    "sym2": squared_symmetric_fastica,
}


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else format(x, ".17g")


@dataclass(frozen=True)
class SimulationConfig:
    dists: Tuple[SourceDistribution, ...]
    n: int = 1000
    M: int = 1000
    methods: Tuple[str, ...] = METHODS
    nl: Nonlinearity = field(default_factory=lambda: make_nonlinearity("tanh"))
    Omega: Optional[Tuple[Tuple[float, ...], ...]] = None
    master_seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    keep_estimates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dists", tuple(self.dists))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.Omega is not None:
            object.__setattr__(self, "Omega", tuple(map(tuple, np.asarray(self.Omega, float))))
        self.validate()

    @property
    def p(self) -> int:
        return len(self.dists)

    def omega(self) -> np.ndarray:
        return np.eye(self.p) if self.Omega is None else np.asarray(self.Omega, dtype=float)

    def validate(self) -> None:
        if self.p < 2:
            raise ParameterError("need at least two source distributions")
        if self.n <= 10 * self.p:
            raise ParameterError(f"sample size n={self.n} must exceed 10 p = {10 * self.p}")
        if self.M < 1:
            raise ParameterError("need at least one replicate")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ParameterError(f"unknown methods {sorted(bad)}")
        om = self.omega()
        if om.shape != (self.p, self.p) or np.linalg.cond(om) > 1e12:
            raise ParameterError("Omega must be a nonsingular p x p matrix")

    def to_dict(self) -> dict:
        return {
            "dists": [str(d) for d in self.dists],
            "n": self.n,
            "M": self.M,
            "methods": list(self.methods),
            "nonlinearity": self.nl.kind,
            "a": self.nl.a,
            "Omega": self.omega().tolist(),
            "master_seed": self.master_seed,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


@dataclass
class MethodSummary:
    """Aggregate of ``n (p-1) D^2`` over the converged replicates of one method."""

    method: str
    mean: float
    se: float
    n_ok: int
    n_failed: int
    limit: float
    values: np.ndarray = field(repr=False)

    @property
    def failed(self) -> bool:
        return self.n_ok == 0


@dataclass
class SimulationResult:
    config: SimulationConfig
    summaries: Dict[str, MethodSummary]
    are: Dict[Tuple[str, str], float]
    gammas: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    def header(self) -> List[str]:
        return ["method", "mean", "se", "n_ok", "n_failed", "limit"]

    def rows(self) -> List[list]:
        return [
            [s.method, s.mean, s.se, s.n_ok, s.n_failed, s.limit] for s in self.summaries.values()
        ]

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "summary": {
                m: {
                    "mean": s.mean,
                    "se": s.se,
                    "n_ok": s.n_ok,
                    "n_failed": s.n_failed,
                    "limit": s.limit,
                }
                for m, s in self.summaries.items()
            },
            "are": {f"{a},{b}": v for (a, b), v in self.are.items()},
            "seed": self.config.master_seed,
            "version": __version__,
        }


def replicate_data(cfg: SimulationConfig, i: int):
    """Observed data ``X = Omega Z`` of replicate ``i`` and the seed for its
    preliminary estimate."""
    seeds = np.random.SeedSequence([cfg.master_seed, i]).spawn(cfg.p + 1)
    Z = np.vstack([sample(d, cfg.n, s) for d, s in zip(cfg.dists, seeds)])
    return cfg.omega() @ Z, seeds[-1]


def _run_replicate(cfg: SimulationConfig, i: int):
    """Squared distance index and Gamma of every method on replicate ``i``
    (``nan`` entries for failures)."""
    X, init_seed = replicate_data(cfg, i)
    p = cfg.p
    d2 = {m: np.nan for m in cfg.methods}
    gammas = {m: np.full((p, p), np.nan) for m in cfg.methods}
    try:
        wr = whiten(X)
        U0 = initial_rotation(None, cfg.nl, init_seed, cfg.tol, cfg.max_iter, whitening=wr).U
    except (ValueError, DegenerateUpdateError):
        return d2, gammas
    for m in cfg.methods:
        try:
            est = _FITTERS[m](None, cfg.nl, U0, cfg.tol, cfg.max_iter, whitening=wr)
        except DegenerateUpdateError:
            continue
        if est.converged:
            d2[m] = minimum_distance_index(est.Gamma, cfg.omega()) ** 2
            gammas[m] = est.Gamma
    return d2, gammas


def _run_chunk(args):
    cfg, idx = args
    return [_run_replicate(cfg, i) for i in idx]


def run_simulation(cfg: SimulationConfig, n_jobs: int = 1) -> SimulationResult:
    """Run ``cfg.M`` replicates, fitting every configured method on the same data.

    Non-converged fits are excluded from the means and counted in
    ``n_failed``.  Finite-sample efficiencies ``ARE(a, b)`` are
    ``sum D_b^2 / sum D_a^2`` over replicates where both methods converged.
    """
    idx = list(range(cfg.M))
    if n_jobs > 1 and cfg.M > 1:
        chunks = [idx[k::n_jobs] for k in range(n_jobs)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
        out = [None] * cfg.M
        for c, part in zip(chunks, parts):
            for i, r in zip(c, part):
                out[i] = r
    else:
        out = [_run_replicate(cfg, i) for i in idx]

    scale = cfg.n * (cfg.p - 1)
    D2 = {m: np.array([r[0][m] for r in out]) for m in cfg.methods}
    summaries = {}
    for m in cfg.methods:
        vals = scale * D2[m]
        ok = vals[~np.isnan(vals)]
        try:
            limit = expected_mdi_limit(m, cfg.dists, cfg.nl)
        except IdentifiabilityError:
            limit = float("nan")
        if ok.size:
            mean = float(np.mean(ok))
            se = float(np.std(ok, ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else float("nan")
        else:
            mean = se = float("nan")
        summaries[m] = MethodSummary(m, mean, se, int(ok.size), int(cfg.M - ok.size), limit, vals)

    ratios = {}
    for a in cfg.methods:
        for b in cfg.methods:
            if a == b:
                continue
            both = ~np.isnan(D2[a]) & ~np.isnan(D2[b])
            sa, sb = np.sum(D2[a][both]), np.sum(D2[b][both])
            ratios[(a, b)] = float(sb / sa) if both.any() and sa > 0 else float("nan")

    gammas = None
    if cfg.keep_estimates:
        gammas = {m: np.stack([r[1][m] for r in out]) for m in cfg.methods}
    return SimulationResult(cfg, summaries, ratios, gammas)


# ---------------------------------------------------------------------------
# Efficiency tables
# ---------------------------------------------------------------------------


@dataclass
class AreTable:
    """Square table of ``ARE(methods[0], methods[1])``.

    The upper triangle (and the diagonal) uses ``nls[0]``, the lower
    triangle ``nls[1]``.  In finite-sample mode ``diag_lower`` holds the
    diagonal for ``nls[1]``.  Undefined cells are ``nan``.
    """

    labels: List[str]
    methods: Tuple[str, str]
    nls: Tuple[Nonlinearity, Nonlinearity]
    mode: str
    values: np.ndarray
    diag_lower: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)

    def header(self) -> List[str]:
        return ["row", "col", "nonlinearity", "value"]

    def rows(self) -> List[list]:
        out = []
        k = len(self.labels)
        for i in range(k):
            for j in range(k):
                nl = self.nls[0] if j >= i else self.nls[1]
                out.append([self.labels[i], self.labels[j], str(nl), self.values[i, j]])
                if i == j and self.diag_lower is not None:
                    out.append([self.labels[i], self.labels[j], str(self.nls[1]), self.diag_lower[i]])
        return out

    def format(self, digits: int = 2) -> str:
        w = max(7, digits + 5)
        lines = [" " * 8 + "".join(f"{lab:>{w}}" for lab in self.labels)]
        for i, lab in enumerate(self.labels):
            cells = []
            for j in range(len(self.labels)):
                v = self.values[i, j]
                txt = "--" if math.isnan(v) else f"{v:.{digits}f}"
                if i == j and self.diag_lower is not None and not math.isnan(self.diag_lower[i]):
                    txt += f"\\{self.diag_lower[i]:.{digits}f}"
                cells.append(f"{txt:>{w}}")
            lines.append(f"{lab:<8}" + "".join(cells))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "config": {
                "labels": self.labels,
                "methods": list(self.methods),
                "nonlinearities": [str(nl) for nl in self.nls],
                "mode": self.mode,
                **self.config,
            },
            "cells": [dict(zip(self.header(), r)) for r in self.rows()],
            "seed": self.config.get("seed"),
            "version": __version__,
        }


def _both_gaussian(d1, d2, nl) -> bool:
    return moment_set(d1, nl).gaussian_like and moment_set(d2, nl).gaussian_like


def are_table(
    dist_list: Sequence[SourceDistribution],
    nl_list: Sequence[Nonlinearity],
    n: Optional[int] = None,
    M: Optional[int] = None,
    seed: int = 0,
    methods: Tuple[str, str] = ("sym2", "sym"),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> AreTable:
    """Table of ``ARE(methods[0], methods[1])`` over all distribution pairs.

    Without ``M`` the asymptotic values are used; with ``M`` every cell is a
    simulation of ``M`` samples of size ``n`` (default 1000).
    """
    dists = list(dist_list)
    if len(dists) < 2:
        raise ParameterError("need at least two distributions")
    nls = tuple(nl_list) if len(nl_list) > 1 else (nl_list[0], nl_list[0])
    k = len(dists)
    vals = np.full((k, k), np.nan)
    finite = M is not None
    diag_lower = np.full(k, np.nan) if finite else None
    a, b = methods

    def cell(d1, d2, nl, cell_seed):
        if _both_gaussian(d1, d2, nl):
            return float("nan")
        if not finite:
            try:
                return asymptotic_are(a, b, d1, d2, nl)
            except IdentifiabilityError:
                return float("nan")
        cfg = SimulationConfig(
            (d1, d2), n or 1000, M, (a, b), nl, None, cell_seed, tol, max_iter
        )
        return run_simulation(cfg).are[(a, b)]

    for i in range(k):
        for j in range(k):
            nl = nls[0] if j >= i else nls[1]
            vals[i, j] = cell(dists[i], dists[j], nl, seed + i * k + j)
        if finite:
            diag_lower[i] = cell(dists[i], dists[i], nls[1], seed + k * k + i)
    cfg = {"n": n, "M": M, "seed": seed}
    return AreTable([str(d) for d in dists], (a, b), nls, "finite" if finite else "asymptotic",
                    vals, diag_lower, cfg)


# ---------------------------------------------------------------------------
# Contour grids
# ---------------------------------------------------------------------------


@dataclass
class ContourGrid:
    """Long-format grid over ``shape1 x shape2``.

    Asymptotic mode has one ``value`` column (the ARE); finite mode has
    ``method``, ``mean`` (average of ``n (p-1) D^2``) and its ``limit``.
    """

    family: str
    shapes: np.ndarray
    mode: str
    columns: List[str]
    records: List[list]
    config: dict = field(default_factory=dict)

    def header(self) -> List[str]:
        return list(self.columns)

    def rows(self) -> List[list]:
        return [list(r) for r in self.records]

    def matrix(self, column: str = "value", method: Optional[str] = None) -> np.ndarray:
        """Values arranged as ``len(shapes) x len(shapes)`` (row = shape1)."""
        k = len(self.shapes)
        pos = {float(s): i for i, s in enumerate(self.shapes)}
        c = self.columns.index(column)
        out = np.full((k, k), np.nan)
        for r in self.records:
            if method is not None and r[2] != method:
                continue
            out[pos[float(r[0])], pos[float(r[1])]] = r[c]
        return out

    def to_json(self) -> dict:
        return {
            "config": {"family": self.family, "shapes": list(map(float, self.shapes)),
                       "mode": self.mode, **self.config},
            "cells": [dict(zip(self.columns, r)) for r in self.records],
            "seed": self.config.get("seed"),
            "version": __version__,
        }


_FAMILIES = {"ep": make_exp_power, "gamma": make_gamma_std}


def contour_grid(
    family: str,
    shape_grid: Sequence[float],
    method_pair: Tuple[str, ...] = ("sym2", "defl"),
    nl: Optional[Nonlinearity] = None,
    mode: str = "asymptotic",
    n: int = 1000,
    M: int = 200,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ContourGrid:
    """Efficiency surface over pairs of shape parameters of one family.

    ``mode="asymptotic"``: ``ARE(method_pair[0], method_pair[1])`` per cell.
    ``mode="finite"``: for each method in ``method_pair`` the simulated mean
    of ``n (p-1) D^2`` and its limit.  Cells that are not identifiable are
    recorded as missing values.
    """
    fam = family.lower()
    if fam not in _FAMILIES:
        raise ParameterError(f"unknown family {family!r}; expected EP or Gamma")
    nl = nl if nl is not None else make_nonlinearity("tanh")
    shapes = np.asarray(shape_grid, dtype=float)
    dists = [_FAMILIES[fam](s) for s in shapes]
    records = []
    if mode == "asymptotic":
        if len(method_pair) != 2:
            raise ParameterError("asymptotic mode compares exactly two methods")
        a, b = method_pair
        for i, d1 in enumerate(dists):
            for j, d2 in enumerate(dists):
                try:
                    v = float("nan") if _both_gaussian(d1, d2, nl) else asymptotic_are(a, b, d1, d2, nl)
                except IdentifiabilityError:
                    v = float("nan")
                records.append([shapes[i], shapes[j], v])
        columns = ["shape1", "shape2", "value"]
    elif mode == "finite":
        for i, d1 in enumerate(dists):
            for j, d2 in enumerate(dists):
                if _both_gaussian(d1, d2, nl):
                    for m in method_pair:
                        records.append([shapes[i], shapes[j], m, float("nan"), float("nan")])
                    continue
                cfg = SimulationConfig((d1, d2), n, M, tuple(method_pair), nl, None,
                                       seed + i * len(dists) + j, tol, max_iter)
                res = run_simulation(cfg)
                for m in method_pair:
                    s = res.summaries[m]
                    records.append([shapes[i], shapes[j], m, s.mean, s.limit])
        columns = ["shape1", "shape2", "method", "mean", "limit"]
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    config = {"methods": list(method_pair), "nonlinearity": str(nl), "n": n, "M": M, "seed": seed}
    return ContourGrid(fam, shapes, mode, columns, records, config)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def to_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header())
    for row in result.rows():
        w.writerow([_num(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _nan_to_none(o):
    if isinstance(o, dict):
        return {k: _nan_to_none(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_nan_to_none(v) for v in o]
    if isinstance(o, (float, np.floating)) and math.isnan(o):
        return None
    return o


def to_json(result) -> str:
    return json.dumps(_nan_to_none(result.to_json()), default=_json_default, indent=2)


def emit(result, format: str, path) -> None:
    """Write a result (simulation, table or grid) as ``csv`` or ``json``.

    CSV has a header row and floats with 17 significant digits (missing
    values are empty fields); JSON has top-level keys ``config``,
    ``summary`` or ``cells``, ``seed`` and ``version``.
    """
    if format == "csv":
        text = to_csv(result)
    elif format == "json":
        text = to_json(result)
    else:
        raise ParameterError(f"unknown output format {format!r}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
