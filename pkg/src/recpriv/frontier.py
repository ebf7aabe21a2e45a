"""Derivative-free search over auxiliary channels for tradeoff frontiers.

Every channel is a row-stochastic matrix. The search is a multi-restart
pattern search: coordinate and random-direction polls, each row projected
back onto the simplex, step halved after an unsuccessful sweep. Moves that
leave the budget-feasible set are rejected once a feasible point is found,
so every reported optimum is an evaluated inner-bound point.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .probcore import Alphabet, CondPmf, JointPmf
from .regions import (
    AuxChannels,
    RegionPoint,
    SourceSpec,
    cardinality_limits,
    point_from_joint,
    reduce_encoder_privacy,
)

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
IMPROVE_TOL = 1e-13


@dataclass
class OptOptions:
    restarts: int = 64
    max_iters: int = 2000
    step_init: float = 0.25
    step_min: float = 1e-6
    seed: int = 0
    u_size: Optional[int] = None
    t_size: Optional[int] = None
    v_size: Optional[int] = None
    size_cap: int = 8
    random_polls: int = 8
    restore_tries: int = 2
    restore_iters: int = 20
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ConfigError("restarts and max_iters must be positive")
        if not (0 < self.step_min < self.step_init):
            raise ConfigError("need 0 < step_min < step_init")
        for name in ("u_size", "t_size", "v_size"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1")


@dataclass
class FrontierPoint:
    delta_target: float
    d_min: Optional[float]
    feasible: bool = True
    witness: Optional[AuxChannels] = None
    digest: str = ""
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"delta": self.delta_target, "d_min": self.d_min, "feasible": self.feasible}
        if self.digest:
            out["witness_digest"] = self.digest
        out.update(self.params)
        return out


@dataclass
class FrontierCurve:
    """Minimum distortion per equivocation target at a fixed rate."""

    fixed_rate: float
    points: list
    setting: str = "eve"
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"fixed_rate": self.fixed_rate, "setting": self.setting,
                "points": [p.as_dict() for p in self.points]}


@dataclass
class OptResult:
    """Best point found; ``value`` is Delta* or D* depending on the query."""

    value: Optional[float]
    witness: Optional[AuxChannels]
    point: Optional[RegionPoint]
    feasible: bool
    feasible_restarts: int = 0

    def __iter__(self):
        return iter((self.value, self.witness))


def project_to_simplex(vector) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(vector, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ConfigError("project_to_simplex needs a nonempty 1-D vector")
    return _project_rows(v[None, :])[0]


def _project_rows(m: np.ndarray) -> np.ndarray:
    n = m.shape[1]
    s = -np.sort(-m, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    k = np.arange(1, n + 1)
    cond = s - css / k > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(m.shape[0]), rho] / (rho + 1)
    out = np.maximum(m - theta[:, None], 0.0)
    # exact renormalization keeps rows valid for CondPmf checks
    return out / out.sum(axis=1, keepdims=True)


def channel_digest(channels: AuxChannels) -> str:
    return hashlib.sha256(np.ascontiguousarray(channels.flat()).tobytes()).hexdigest()[:16]


class _Space:
    """Parameterization of the channels searched for one setting."""

    def __init__(self, source: SourceSpec, setting: str, u_size: int, t_size: Optional[int]):
        if setting == "encoder":
            source = reduce_encoder_privacy(source)
            self.eval_setting = "eve"
            t_size = None
        elif setting in ("eve", "eve_causal", "helper"):
            self.eval_setting = setting
            if setting != "eve":
                t_size = None
        else:
            raise ConfigError(f"unknown setting {setting!r}")
        self.source = source
        self.setting = setting
        nx, ny, nh = source.x.size, source.y.size, source.xhat_alphabet.size
        self.ax_x, self.ax_y = source.x, source.y
        self.ax_u = Alphabet("U", u_size)
        self.ax_t = Alphabet("T", t_size if t_size else u_size)
        self.ax_h = source.xhat_alphabet.renamed("Xhat")
        self.shapes = [(nx, u_size), (u_size * ny, nh)]
        self.search_t = t_size is not None
        if self.search_t:
            self.shapes.append((u_size, t_size))
        self.axes = (source.x, source.y, source.z, self.ax_t, self.ax_u, self.ax_h)
        self._eye_t = np.eye(u_size)

    def random_start(self, rng) -> list:
        return [rng.dirichlet(np.ones(c), size=r) for r, c in self.shapes]

    def _ptu(self, params):
        return params[2] if self.search_t else self._eye_t

    def evaluate(self, params) -> RegionPoint:
        pux, phy = params[0], params[1].reshape(self.ax_u.size, self.ax_y.size, -1)
        w = np.einsum("xyz,xu,ut,uyh->xyztuh", self.source.pxyz.weights, pux, self._ptu(params), phy)
        return point_from_joint(self.source, JointPmf.unchecked(self.axes, w), self.eval_setting)

    def to_channels(self, params) -> AuxChannels:
        pux = CondPmf((self.ax_x,), (self.ax_u,), params[0])
        phy = CondPmf((self.ax_u, self.ax_y), (self.ax_h,),
                      params[1].reshape(self.ax_u.size, self.ax_y.size, -1))
        ptu = CondPmf((self.ax_u,), (self.ax_t,), self._ptu(params))
        return AuxChannels(p_u_given_x=pux, p_xhat_given_uy=phy, p_t_given_u=ptu)

    def from_channels(self, channels: AuxChannels) -> list:
        out = [np.array(channels.p_u_given_x.matrix), np.array(channels.p_xhat_given_uy.matrix)]
        if self.search_t:
            out.append(np.array(channels.p_t_given_u.matrix))
        if [p.shape for p in out] != self.shapes:
            raise ConfigError("warm-start channels do not match the search alphabet sizes")
        return out


@dataclass(frozen=True)
class _Goal:
    """maximize Delta s.t. R <= r, D <= d   or   minimize D s.t. R <= r, Delta >= delta."""

    kind: str
    r_budget: float
    d_budget: float = math.inf
    delta_target: float = 0.0

    def violation(self, pt: RegionPoint) -> float:
        v = max(0.0, pt.rate - self.r_budget - FEAS_TOL)
        if self.kind == "max_delta":
            v += max(0.0, pt.distortion - self.d_budget - FEAS_TOL)
        else:
            v += max(0.0, self.delta_target - pt.equivocation - FEAS_TOL)
        return v

    def score(self, pt: RegionPoint) -> float:
        return pt.equivocation if self.kind == "max_delta" else -pt.distortion


def _polls(params, step, rng, n_random):
    moves = []
    for b, m in enumerate(params):
        rows, cols = m.shape
        for r in range(rows):
            for c in range(cols):
                for sign in (1.0, -1.0):
                    moves.append((b, r, c, sign))
    order = rng.permutation(len(moves))
    for i in order:
        b, r, c, sign = moves[i]
        cand = [p for p in params]
        m = params[b].copy()
        m[r, c] += sign * step
        m[r:r + 1] = _project_rows(m[r:r + 1])
        cand[b] = m
        yield cand
    for _ in range(n_random):
        d = [rng.standard_normal(p.shape) for p in params]
        scale = max(np.abs(x).max() for x in d)
        for sign in (1.0, -1.0):
            yield [_project_rows(p + sign * step * x / scale) for p, x in zip(params, d)]


def _restore(space: _Space, goal: _Goal, x, pt, viol, rng, step, opts: OptOptions):
    """Short violation-descent from an infeasible point; returns the final iterate."""
    for _ in range(opts.restore_iters):
        if viol == 0 or step < opts.step_min:
            break
        for cand in _polls(x, step, rng, opts.random_polls):
            cpt = space.evaluate(cand)
            cviol = goal.violation(cpt)
            if cviol < viol - IMPROVE_TOL:
                x, pt, viol = cand, cpt, cviol
                break
        else:
            step *= 0.5
    return x, pt, viol


def _search(space: _Space, goal: _Goal, start, rng, opts: OptOptions):
    """One restart: restore feasibility, then climb the objective inside the feasible set.

    When no feasible poll improves the objective, the best objective-improving
    infeasible polls are pulled back to feasibility before the step shrinks.
    """
    x = [_project_rows(np.array(p, dtype=float)) for p in start]
    pt = space.evaluate(x)
    viol = goal.violation(pt)
    step = opts.step_init
    it = 0
    while it < opts.max_iters and step >= opts.step_min:
        it += 1
        improved = False
        promising = []
        for cand in _polls(x, step, rng, opts.random_polls):
            cpt = space.evaluate(cand)
            cviol = goal.violation(cpt)
            if viol > 0:
                ok = cviol < viol - IMPROVE_TOL
            else:
                ok = cviol == 0 and goal.score(cpt) > goal.score(pt) + IMPROVE_TOL
                if not ok and cviol > 0 and goal.score(cpt) > goal.score(pt) + IMPROVE_TOL:
                    promising.append((goal.score(cpt), len(promising), cand, cpt, cviol))
            if ok:
                was_infeasible = viol > 0
                x, pt, viol = cand, cpt, cviol
                improved = True
                if was_infeasible and viol == 0:
                    step = opts.step_init
                break
        if not improved and viol == 0 and promising:
            promising.sort(key=lambda e: (-e[0], e[1]))
            for _, _, cand, cpt, cviol in promising[:opts.restore_tries]:
                rx, rpt, rviol = _restore(space, goal, cand, cpt, cviol, rng, step, opts)
                if rviol == 0 and goal.score(rpt) > goal.score(pt) + IMPROVE_TOL:
                    x, pt, viol = rx, rpt, rviol
                    improved = True
                    break
        if improved:
            step = min(2.0 * step, opts.step_init)
        else:
            step *= 0.5
    return x, pt, viol


def _run_restart(args):
    space, goal, start, seed_seq, opts = args
    rng = np.random.default_rng(seed_seq)
    if start is None:
        start = space.random_start(rng)
    return _search(space, goal, start, rng, opts)


def _default_sizes(source: SourceSpec, setting: str, opts: OptOptions):
    limits = cardinality_limits(setting, source.x.size)
    u = opts.u_size
    if u is None:
        u = min(limits["u"], opts.size_cap)
        if u < limits["u"]:
            log.warning("|U| capped at %d (sufficient size is %d)", u, limits["u"])
    t = None
    if setting == "eve":
        t = opts.t_size
        if t is None:
            t = min(limits["t"], opts.size_cap)
            if t < limits["t"]:
                log.warning("|T| capped at %d (sufficient size is %d)", t, limits["t"])
    return u, t


def _optimize(source, setting, goal, opts, warm_starts=()) -> OptResult:
    u, t = _default_sizes(source, setting, opts)
    space = _Space(source, setting, u, t)
    seeds = np.random.SeedSequence(opts.seed).spawn(opts.restarts + len(warm_starts))
    starts = [space.from_channels(w) for w in warm_starts] + [None] * opts.restarts
    jobs = [(space, goal, s, q, opts) for s, q in zip(starts, seeds)]
    if opts.workers > 1:
        with ProcessPoolExecutor(opts.workers) as pool:
            results = list(pool.map(_run_restart, jobs))
    else:
        results = [_run_restart(j) for j in jobs]

    best = None
    n_feasible = 0
    for x, pt, viol in results:
        if viol > 0:
            continue
        n_feasible += 1
        key = (-goal.score(pt), tuple(np.concatenate([p.ravel() for p in x])))
        if best is None or key < best[0]:
            best = (key, x)
    if best is None:
        return OptResult(None, None, None, False, 0)
    witness = space.to_channels(best[1])
    pt = space.evaluate(best[1])
    value = pt.equivocation if goal.kind == "max_delta" else pt.distortion
    return OptResult(value, witness, pt, True, n_feasible)


def max_equivocation(source: SourceSpec, setting: str, r_budget: float, d_budget: float,
                     opts: Optional[OptOptions] = None, warm_starts: Sequence = ()) -> OptResult:
    """Largest inner-bound equivocation with rate <= r_budget and distortion <= d_budget."""
    opts = opts or OptOptions()
    if r_budget < 0 or d_budget < 0:
        return OptResult(None, None, None, False, 0)
    return _optimize(source, setting, _Goal("max_delta", r_budget, d_budget=d_budget), opts,
                     warm_starts)


def min_distortion(source: SourceSpec, setting: str, r_budget: float, delta_target: float,
                   opts: Optional[OptOptions] = None, warm_starts: Sequence = ()) -> OptResult:
    """Smallest inner-bound distortion with rate <= r_budget and equivocation >= delta_target."""
    opts = opts or OptOptions()
    if r_budget < 0 or delta_target > math.log2(source.xhat_alphabet.size) + FEAS_TOL:
        return OptResult(None, None, None, False, 0)
    goal = _Goal("min_d", r_budget, delta_target=max(0.0, delta_target))
    return _optimize(source, setting, goal, opts, warm_starts)


def trace_frontier(source: SourceSpec, setting: str, r_budget: float, delta_grid,
                   opts: Optional[OptOptions] = None) -> FrontierCurve:
    """min_distortion along an ascending grid, warm-starting from the previous witness."""
    opts = opts or OptOptions()
    grid = [float(d) for d in delta_grid]
    if not grid:
        raise ConfigError("delta_grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("delta_grid must be sorted ascending")
    t0 = time.perf_counter()
    points = []
    prev = None
    for delta in grid:
        res = min_distortion(source, setting, r_budget, delta, opts,
                             warm_starts=[prev] if prev is not None else [])
        if res.feasible:
            prev = res.witness
            points.append(FrontierPoint(delta, res.value, True, res.witness,
                                        channel_digest(res.witness)))
        else:
            points.append(FrontierPoint(delta, None, False))
    # a witness certified at a larger target is also feasible at every smaller one
    for i in range(len(points) - 2, -1, -1):
        a, b = points[i], points[i + 1]
        if b.feasible and (not a.feasible or b.d_min < a.d_min):
            points[i] = dataclasses.replace(b, delta_target=a.delta_target)
    meta = {"seed": opts.seed, "restarts": opts.restarts,
            "wall_time_s": time.perf_counter() - t0}
    return FrontierCurve(r_budget, points, setting, meta)
