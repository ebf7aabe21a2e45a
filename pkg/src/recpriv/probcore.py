"""Finite-alphabet probability tensors and Shannon functionals.

Joint pmfs are dense numpy arrays with one axis per named alphabet, stored
row-major in the declared axis order. All logarithms are base 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError

MAX_ALPHABET = 16
MAX_CELLS = 2 ** 24
MASS_TOL = 1e-12
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    name: str
    size: int
    symbols: tuple = field(default=None)

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ConfigError(f"alphabet {self.name!r}: size must be a positive integer")
        if self.size > MAX_ALPHABET:
            raise ConfigError(f"alphabet {self.name!r}: size {self.size} exceeds cap {MAX_ALPHABET}")
        symbols = self.symbols
        if symbols is None:
            symbols = tuple(str(i) for i in range(self.size))
        symbols = tuple(str(s) for s in symbols)
        if len(symbols) != self.size:
            raise ConfigError(f"alphabet {self.name!r}: {len(symbols)} labels for size {self.size}")
        if len(set(symbols)) != len(symbols):
            raise ConfigError(f"alphabet {self.name!r}: labels must be unique")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "symbols", symbols)

    def index(self, label) -> int:
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise ConfigError(f"alphabet {self.name!r} has no symbol {label!r}") from None

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.size, self.symbols)


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


def _as_names(vars) -> tuple:
    if vars is None:
        return ()
    if isinstance(vars, str):
        return (vars,)
    return tuple(vars)


@dataclass(frozen=True)
class JointPmf:
    """A pmf over the product of ``axes``; ``weights.shape`` matches the sizes."""

    axes: tuple
    weights: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate axis names {names}")
        w = _frozen(self.weights)
        shape = tuple(a.size for a in axes)
        if w.shape != shape:
            raise ConfigError(f"weights shape {w.shape} does not match axes {shape}")
        if w.size > MAX_CELLS:
            raise ConfigError(f"joint has {w.size} cells, cap is {MAX_CELLS}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ConfigError("joint pmf has negative or non-finite weights")
        if abs(w.sum() - 1.0) > MASS_TOL * max(1, w.size) ** 0.5 + MASS_TOL:
            raise ConfigError(f"joint pmf mass {w.sum()!r} is not 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unchecked(cls, axes: tuple, weights: np.ndarray) -> "JointPmf":
        """Skip validation; for inner loops whose inputs are valid by construction."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "axes", tuple(axes))
        object.__setattr__(obj, "weights", weights)
        return obj

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> Alphabet:
        return self.axes[self._pos(name)]

    def _pos(self, name: str) -> int:
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise ConfigError(f"unknown axis {name!r}; joint has {self.names}")

    def marginal(self, vars) -> np.ndarray:
        """Marginal weights over ``vars``, axes in the order given."""
        names = _as_names(vars)
        pos = [self._pos(n) for n in names]
        if len(set(pos)) != len(pos):
            raise ConfigError(f"repeated axis in {names}")
        drop = tuple(i for i in range(len(self.axes)) if i not in pos)
        m = self.weights.sum(axis=drop) if drop else self.weights
        if pos == sorted(pos):
            return m
        kept = sorted(pos)
        return np.transpose(m, [kept.index(p) for p in pos])

    def marginal_pmf(self, vars) -> "JointPmf":
        names = _as_names(vars)
        return JointPmf(tuple(self.axis(n) for n in names), self.marginal(names))


@dataclass(frozen=True)
class CondPmf:
    """Conditional pmf: ``rows[given..., target...]`` sums to 1 over the target axes."""

    given_axes: tuple
    target_axes: tuple
    rows: np.ndarray

    def __post_init__(self):
        given, target = tuple(self.given_axes), tuple(self.target_axes)
        r = _frozen(self.rows)
        shape = tuple(a.size for a in given + target)
        if r.shape != shape:
            raise ConfigError(f"conditional rows shape {r.shape} does not match axes {shape}")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ConfigError("conditional pmf has negative or non-finite entries")
        sums = r.reshape(int(np.prod([a.size for a in given], dtype=int)), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
        if bad.size:
            raise ConfigError(f"conditional pmf row {int(bad[0])} sums to {sums[bad[0]]!r}")
        object.__setattr__(self, "given_axes", given)
        object.__setattr__(self, "target_axes", target)
        object.__setattr__(self, "rows", r)

    @property
    def matrix(self) -> np.ndarray:
        """Rows flattened to a 2-D row-stochastic matrix."""
        n_given = int(np.prod([a.size for a in self.given_axes], dtype=int))
        return self.rows.reshape(n_given, -1)

    def is_deterministic(self) -> bool:
        return bool(np.all((self.rows == 0) | (self.rows == 1)))


def _h(weights: np.ndarray) -> float:
    p = weights[weights > 0]
    return float(-(p * np.log2(p)).sum())


def _check_disjoint(*groups):
    seen = set()
    for g in groups:
        for n in g:
            if n in seen:
                raise ConfigError(f"axis {n!r} appears in more than one argument")
            seen.add(n)


def entropy(joint: JointPmf, vars) -> float:
    """H(vars) in bits."""
    names = _as_names(vars)
    if not names:
        raise ConfigError("entropy needs at least one variable")
    return _h(joint.marginal(names))


def conditional_entropy(joint: JointPmf, target, given=()) -> float:
    target, given = _as_names(target), _as_names(given)
    _check_disjoint(target, given)
    if not given:
        return entropy(joint, target)
    return max(0.0, entropy(joint, target + given) - entropy(joint, given))


def mutual_information(joint: JointPmf, a, b, given=()) -> float:
    """I(a; b | given), clamped to 0 when rounding pushes it slightly negative."""
    a, b, given = _as_names(a), _as_names(b), _as_names(given)
    _check_disjoint(a, b, given)
    if not a or not b:
        raise ConfigError("mutual information needs nonempty variable sets")
    h_g = entropy(joint, given) if given else 0.0
    val = (entropy(joint, a + given) + entropy(joint, b + given)
           - entropy(joint, a + b + given) - h_g)
    if -CLAMP_TOL < val < 0:
        return 0.0
    return val


def _check_prob(p, what="argument"):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{what} {p!r} outside [0, 1]")


def binary_entropy(p: float) -> float:
    _check_prob(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def star(a: float, b: float) -> float:
    """Binary convolution a(1-b) + (1-a)b."""
    _check_prob(a)
    _check_prob(b)
    return a * (1 - b) + (1 - a) * b


def inverse_binary_entropy(v: float, tol: float = 1e-12) -> float:
    """The p in [0, 1/2] with h(p) = v, by bisection."""
    _check_prob(v, "entropy value")
    if v == 0.0:
        return 0.0
    if v == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def copy_channel(given: Alphabet, target: Alphabet) -> CondPmf:
    if given.size != target.size:
        raise ConfigError(f"copy channel needs equal sizes, got {given.size} and {target.size}")
    return CondPmf((given,), (target,), np.eye(given.size))


def deterministic_channel(given: Sequence[Alphabet], target: Alphabet, table) -> CondPmf:
    """0/1 channel whose output index is ``table[given indices]``."""
    table = np.asarray(table, dtype=int)
    shape = tuple(a.size for a in given)
    if table.shape != shape:
        raise ConfigError(f"table shape {table.shape} does not match {shape}")
    if table.size and (table.min() < 0 or table.max() >= target.size):
        raise ConfigError(f"table entries must lie in [0, {target.size})")
    rows = np.zeros(shape + (target.size,))
    np.put_along_axis(rows, table[..., None], 1.0, axis=-1)
    return CondPmf(tuple(given), (target,), rows)


def product_space_size(alphabets: Iterable[Alphabet]) -> int:
    return int(np.prod([a.size for a in alphabets], dtype=np.int64))


def compose_joint(source, channels) -> JointPmf:
    """Product-form joint over (X, Y, Z, T, U, Xhat[, V]).

    ``source`` carries ``pxyz``; ``channels`` carries ``p_u_given_x``,
    ``p_t_given_u`` and either ``p_xhat_given_uy`` or ``p_vxhat_given_uy``.
    The V axis is present only when the latter is set.
    """
    pxyz = source.pxyz
    if pxyz.names != ("X", "Y", "Z"):
        raise ConfigError(f"source pmf axes must be (X, Y, Z), got {pxyz.names}")
    ax_x, ax_y, ax_z = pxyz.axes
    pux = channels.p_u_given_x
    ptu = channels.p_t_given_u
    pvh = getattr(channels, "p_vxhat_given_uy", None)
    phy = channels.p_xhat_given_uy

    ax_u = pux.target_axes[0]
    if pux.given_axes[0].size != ax_x.size:
        raise ConfigError(f"P(U|X) expects |X|={pux.given_axes[0].size}, source has {ax_x.size}")
    if ptu.given_axes[0].size != ax_u.size:
        raise ConfigError(f"P(T|U) expects |U|={ptu.given_axes[0].size}, P(U|X) gives {ax_u.size}")
    ax_t = ptu.target_axes[0]
    dec = pvh if pvh is not None else phy
    u_in, y_in = dec.given_axes
    if u_in.size != ax_u.size or y_in.size != ax_y.size:
        raise ConfigError(
            f"decoder expects (|U|, |Y|)=({u_in.size}, {y_in.size}), have ({ax_u.size}, {ax_y.size})")

    axes = [ax_x, ax_y, ax_z, ax_t.renamed("T"), ax_u.renamed("U")]
    if pvh is None:
        ax_h = phy.target_axes[0]
        w = np.einsum("xyz,xu,ut,uyh->xyztuh", pxyz.weights, pux.rows, ptu.rows, phy.rows)
        axes.append(ax_h.renamed("Xhat"))
    else:
        ax_v, ax_h = pvh.target_axes
        w = np.einsum("xyz,xu,ut,uyvh->xyztuhv", pxyz.weights, pux.rows, ptu.rows, pvh.rows)
        axes += [ax_h.renamed("Xhat"), ax_v.renamed("V")]
    if w.size > MAX_CELLS:
        raise ConfigError(f"composed joint has {w.size} cells, cap is {MAX_CELLS}")
    return JointPmf(tuple(axes), w)
