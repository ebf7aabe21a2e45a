"""Closed forms for the binary erasure example.

Setting: X ~ Bern(1/2), Y is X erased with probability p_e, no eavesdropper
side information, F(X, Y) = X, Hamming distortion. The description U is X
through a BSC(p_u); the decoder outputs Y when it is not erased and a
BSC(p_2) copy of U otherwise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .frontier import FrontierCurve, FrontierPoint
from .probcore import (
    Alphabet,
    CondPmf,
    JointPmf,
    binary_entropy,
    inverse_binary_entropy,
    star,
)
from .regions import AuxChannels, RegionPoint, SourceSpec

GRID_STEP = 1e-4


@dataclass(frozen=True)
class BinaryExampleParams:
    p_u: float
    p_2: float
    p_e: float

    def __post_init__(self):
        for name, hi in (("p_u", 0.5), ("p_2", 0.5), ("p_e", 1.0)):
            v = getattr(self, name)
            if not (0.0 <= v <= hi):
                raise DomainError(f"{name}={v!r} outside [0, {hi}]")


def example_point(params: BinaryExampleParams) -> RegionPoint:
    p_u, p_2, p_e = params.p_u, params.p_2, params.p_e
    return RegionPoint(
        1.0 - binary_entropy(p_u),
        p_e * star(p_u, p_2),
        binary_entropy(p_u * (1 - p_e) + p_2 * p_e),
    )


def saturation(rate: float, p_e: float) -> tuple:
    """(Delta_sat, D_min): below Delta_sat the rate alone limits the distortion."""
    if not (0.0 < rate <= 1.0):
        raise DomainError(f"rate {rate!r} outside (0, 1]")
    if not (0.0 <= p_e <= 1.0):
        raise DomainError(f"p_e {p_e!r} outside [0, 1]")
    q = inverse_binary_entropy(1.0 - rate)
    return binary_entropy((1 - p_e) * q), p_e * q


def no_side_info_point(rate: float, delta: float) -> float:
    """Minimum distortion with Y absent: h^-1(1-R) * h^-1(Delta)."""
    if not (0.0 < rate <= 1.0):
        raise DomainError(f"rate {rate!r} outside (0, 1]")
    if not (0.0 <= delta <= 1.0):
        raise DomainError(f"delta {delta!r} outside [0, 1]")
    return star(inverse_binary_entropy(1.0 - rate), inverse_binary_entropy(delta))


def erasure_source(p_e: float) -> SourceSpec:
    """The example as a generic SourceSpec; Y symbols are 0, 1, e and Z is a singleton."""
    if not (0.0 <= p_e <= 1.0):
        raise DomainError(f"p_e {p_e!r} outside [0, 1]")
    x = Alphabet("X", 2)
    y = Alphabet("Y", 3, ("0", "1", "e"))
    z = Alphabet("Z", 1)
    w = np.zeros((2, 3, 1))
    for xi in range(2):
        w[xi, xi, 0] = 0.5 * (1 - p_e)
        w[xi, 2, 0] = 0.5 * p_e
    return SourceSpec(
        pxyz=JointPmf((x, y, z), w),
        f_alphabet=Alphabet("F", 2),
        xhat_alphabet=Alphabet("Xhat", 2),
        f_table=[[0, 0, 0], [1, 1, 1]],
        d_matrix=1.0 - np.eye(2),
    )


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def example_channels(p_u: float, p_2: float) -> AuxChannels:
    x, u, y, h = Alphabet("X", 2), Alphabet("U", 2), Alphabet("Y", 3, ("0", "1", "e")), Alphabet("Xhat", 2)
    dec = np.zeros((2, 3, 2))
    dec[:, 0, 0] = 1.0
    dec[:, 1, 1] = 1.0
    dec[:, 2, :] = bsc(p_2)
    return AuxChannels(
        p_u_given_x=CondPmf((x,), (u,), bsc(p_u)),
        p_xhat_given_uy=CondPmf((u, y), (h,), dec),
    )


def _distortion(p_u, p_2, p_e):
    return p_e * (p_u * (1 - p_2) + (1 - p_u) * p_2)


def _min_p2(p_u, q_target, p_e, deterministic):
    """Smallest p_2 in [0, 1/2] meeting p_u(1-p_e) + p_2 p_e >= q_target; nan if none."""
    p_u = np.asarray(p_u, dtype=float)
    if deterministic or p_e == 0.0:
        ok = p_u * (1 - p_e) >= q_target - 1e-15
        return np.where(ok, 0.0, np.nan)
    p_2 = np.maximum(0.0, (q_target - p_u * (1 - p_e)) / p_e)
    return np.where(p_2 <= 0.5 + 1e-15, np.minimum(p_2, 0.5), np.nan)


def _best_on_constraint(pu_min, q_target, p_e, deterministic):
    """Minimize p_e (p_u star p_2) along the equivocation constraint; returns (d, p_u, p_2)."""
    grid = np.arange(pu_min, 0.5, GRID_STEP)
    extra = [pu_min, 0.5]
    if p_e < 1.0:
        extra.append(q_target / (1 - p_e))
    grid = np.unique(np.clip(np.concatenate([grid, extra]), pu_min, 0.5))
    p_2 = _min_p2(grid, q_target, p_e, deterministic)
    d = np.where(np.isnan(p_2), np.inf, _distortion(grid, np.nan_to_num(p_2), p_e))
    k = int(np.argmin(d))
    if not np.isfinite(d[k]):
        return None
    best = (float(d[k]), float(grid[k]), float(p_2[k]))

    def f(pu):
        p2 = _min_p2(pu, q_target, p_e, deterministic)
        return np.inf if np.isnan(p2) else float(_distortion(pu, p2, p_e))

    # bisection on the sign of the local slope within the neighbouring cells
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    h = 1e-9
    for _ in range(60):
        if hi - lo < 1e-12:
            break
        mid = 0.5 * (lo + hi)
        if f(mid + h) < f(mid - h):
            lo = mid
        else:
            hi = mid
    pu = 0.5 * (lo + hi)
    d_ref = f(pu)
    if d_ref < best[0]:
        best = (d_ref, float(pu), float(_min_p2(pu, q_target, p_e, deterministic)))
    return best


def min_distortion_curve(rate: float, p_e: float, delta_grid, deterministic: bool = False) -> FrontierCurve:
    """Minimum distortion versus equivocation at fixed rate over the BSC family.

    ``deterministic=True`` restricts the decoder to p_2 = 0.
    """
    t0 = time.perf_counter()
    grid = [float(d) for d in delta_grid]
    if not grid:
        raise DomainError("delta_grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("delta_grid must be sorted ascending")
    if not (0.0 < rate <= 1.0):
        raise DomainError(f"rate {rate!r} outside (0, 1]")
    if not (0.0 <= p_e <= 1.0):
        raise DomainError(f"p_e {p_e!r} outside [0, 1]")
    pu_min = inverse_binary_entropy(1.0 - rate)
    points = []
    for delta in grid:
        if delta < 0 or delta > 1:
            points.append(FrontierPoint(delta, None, feasible=False))
            continue
        q_target = inverse_binary_entropy(delta)
        best = _best_on_constraint(pu_min, q_target, p_e, deterministic)
        if best is None:
            points.append(FrontierPoint(delta, None, feasible=False))
            continue
        d, p_u, p_2 = best
        points.append(FrontierPoint(delta, d, params={"p_u": p_u, "p_2": p_2}))
    # parameters feasible at a larger delta stay feasible at a smaller one
    for i in range(len(points) - 2, -1, -1):
        a, b = points[i], points[i + 1]
        if b.feasible and (not a.feasible or b.d_min < a.d_min):
            points[i] = FrontierPoint(a.delta_target, b.d_min, params=dict(b.params))
    meta = {"rate": rate, "p_e": p_e, "deterministic_decoder": deterministic,
            "wall_time_s": time.perf_counter() - t0}
    return FrontierCurve(fixed_rate=rate, points=points, setting="eve_causal", metadata=meta)
