"""Pointwise evaluation of the rate-distortion-equivocation bounds.

Each evaluator maps one choice of auxiliary channels to one (R, D, Delta)
point. The eavesdropper settings measure H(Xhat^n | W, Z^n)/n, the helper
setting H(Xhat^n | Y^n)/n. An absent side-information variable is modelled
as a singleton alphabet.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .probcore import (
    Alphabet,
    CondPmf,
    JointPmf,
    compose_joint,
    conditional_entropy,
    copy_channel,
    deterministic_channel,
    mutual_information,
)

SETTINGS = ("eve", "eve_causal", "helper", "encoder")


@dataclass(frozen=True)
class SourceSpec:
    """P(X,Y,Z), the target function F(x,y) and the distortion d(f, xhat)."""

    pxyz: JointPmf
    f_alphabet: Alphabet
    xhat_alphabet: Alphabet
    f_table: np.ndarray
    d_matrix: np.ndarray

    def __post_init__(self):
        if self.pxyz.names != ("X", "Y", "Z"):
            raise ConfigError(f"pxyz axes must be (X, Y, Z), got {self.pxyz.names}")
        ax_x, ax_y, _ = self.pxyz.axes
        f = np.array(self.f_table, dtype=int)
        if f.shape != (ax_x.size, ax_y.size):
            raise ConfigError(f"f_table shape {f.shape}, expected {(ax_x.size, ax_y.size)}")
        if f.min() < 0 or f.max() >= self.f_alphabet.size:
            raise ConfigError("f_table entries outside the F alphabet")
        d = np.array(self.d_matrix, dtype=float)
        if d.shape != (self.f_alphabet.size, self.xhat_alphabet.size):
            raise ConfigError(
                f"d_matrix shape {d.shape}, expected {(self.f_alphabet.size, self.xhat_alphabet.size)}")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ConfigError("d_matrix entries must be finite and nonnegative")
        f.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "f_table", f)
        object.__setattr__(self, "d_matrix", d)

    @property
    def x(self) -> Alphabet:
        return self.pxyz.axes[0]

    @property
    def y(self) -> Alphabet:
        return self.pxyz.axes[1]

    @property
    def z(self) -> Alphabet:
        return self.pxyz.axes[2]

    def distortion_table(self) -> np.ndarray:
        """d(F(x, y), xhat) as an array indexed [x, y, xhat]."""
        return self.d_matrix[self.f_table]


@dataclass(frozen=True)
class AuxChannels:
    """A candidate coding strategy: P(U|X), P(T|U), P(Xhat|U,Y) and optionally P(V,Xhat|U,Y).

    ``p_t_given_u`` defaults to the copy channel T = U. When ``t_of_u`` is
    given it must agree with ``p_t_given_u`` (or defines it if that is absent).
    """

    p_u_given_x: CondPmf
    p_xhat_given_uy: CondPmf
    p_t_given_u: Optional[CondPmf] = None
    p_vxhat_given_uy: Optional[CondPmf] = None
    t_of_u: Optional[np.ndarray] = None

    def __post_init__(self):
        ax_u = self.p_u_given_x.target_axes[0]
        if self.t_of_u is not None:
            t_of_u = np.array(self.t_of_u, dtype=int)
            t_of_u.setflags(write=False)
            object.__setattr__(self, "t_of_u", t_of_u)
            if self.p_t_given_u is None:
                t_size = int(t_of_u.max()) + 1 if t_of_u.size else 1
                ptu = deterministic_channel((ax_u,), Alphabet("T", t_size), t_of_u)
                object.__setattr__(self, "p_t_given_u", ptu)
            else:
                ptu = deterministic_channel((ax_u,), self.p_t_given_u.target_axes[0], t_of_u)
                if not np.array_equal(ptu.rows, self.p_t_given_u.rows):
                    raise ConfigError("t_of_u disagrees with p_t_given_u")
        elif self.p_t_given_u is None:
            object.__setattr__(self, "p_t_given_u", copy_channel(ax_u, Alphabet("T", ax_u.size)))
        if self.p_vxhat_given_uy is not None:
            marg = self.p_vxhat_given_uy.rows.sum(axis=2)
            if marg.shape != self.p_xhat_given_uy.rows.shape or not np.allclose(
                    marg, self.p_xhat_given_uy.rows, atol=1e-9):
                raise ConfigError("p_vxhat_given_uy does not marginalize to p_xhat_given_uy")

    @property
    def u_size(self) -> int:
        return self.p_u_given_x.target_axes[0].size

    @property
    def t_size(self) -> int:
        return self.p_t_given_u.target_axes[0].size

    def without_v(self) -> "AuxChannels":
        return dataclasses.replace(self, p_vxhat_given_uy=None)

    def with_v(self, p_v_given_uyxhat: np.ndarray, v_size: int) -> "AuxChannels":
        """Attach V drawn from P(V | U, Y, Xhat), given as an array [u, y, xhat, v]."""
        dec = self.p_xhat_given_uy
        rows = np.einsum("uyh,uyhv->uyvh", dec.rows, np.asarray(p_v_given_uyxhat, dtype=float))
        pvh = CondPmf(dec.given_axes, (Alphabet("V", v_size), dec.target_axes[0]), rows)
        return dataclasses.replace(self, p_vxhat_given_uy=pvh)

    def with_constant_v(self) -> "AuxChannels":
        u, y = self.p_xhat_given_uy.given_axes
        h = self.p_xhat_given_uy.target_axes[0]
        return self.with_v(np.ones((u.size, y.size, h.size, 1)), 1)

    def with_copy_v(self) -> "AuxChannels":
        """V = Xhat."""
        u, y = self.p_xhat_given_uy.given_axes
        h = self.p_xhat_given_uy.target_axes[0].size
        eye = np.broadcast_to(np.eye(h), (u.size, y.size, h, h))
        return self.with_v(eye, h)

    def flat(self) -> np.ndarray:
        """All channel entries concatenated; used for digests and tie-breaks."""
        parts = [self.p_u_given_x.rows.ravel(), self.p_t_given_u.rows.ravel(),
                 self.p_xhat_given_uy.rows.ravel()]
        if self.p_vxhat_given_uy is not None:
            parts.append(self.p_vxhat_given_uy.rows.ravel())
        return np.concatenate(parts)


@dataclass(frozen=True)
class RegionPoint:
    rate: float
    distortion: float
    equivocation: float

    def as_dict(self) -> dict:
        return {"rate": self.rate, "distortion": self.distortion,
                "equivocation": self.equivocation}


def _clamp(v: float) -> float:
    return max(0.0, float(v))


def expected_distortion(source: SourceSpec, joint: JointPmf) -> float:
    """E[d(F(X, Y), Xhat)] under ``joint``."""
    pxyh = joint.marginal(("X", "Y", "Xhat"))
    return float((pxyh * source.distortion_table()).sum())


def _joint(source, channels, with_v=False):
    if not with_v:
        channels = channels.without_v()
    return compose_joint(source, channels)


def _inner_eve(source, j):
    delta = (conditional_entropy(j, "Xhat", ("U", "Y"))
             + mutual_information(j, "Xhat", "Y", "T")
             - mutual_information(j, "Xhat", "Z", "T")
             - mutual_information(j, "U", "Z", ("T", "Y", "Xhat")))
    return RegionPoint(mutual_information(j, "X", "U", "Y"), expected_distortion(source, j),
                       _clamp(delta))


def _outer_eve(source, j):
    # I((V,T),Xhat; . | T) = I(V,Xhat; . | T), so the augmentation needs no extra axis.
    delta = (conditional_entropy(j, "Xhat", ("U", "Y"))
             + mutual_information(j, ("V", "Xhat"), "Y", "T")
             - mutual_information(j, ("V", "Xhat"), "Z", "T"))
    return RegionPoint(mutual_information(j, "X", "U", "Y"), expected_distortion(source, j),
                       _clamp(delta))


def _inner_causal(source, j):
    return RegionPoint(mutual_information(j, "X", "U"), expected_distortion(source, j),
                       _clamp(conditional_entropy(j, "Xhat", ("U", "Z"))))


def _outer_causal(source, j):
    return RegionPoint(mutual_information(j, "X", "U"), expected_distortion(source, j),
                       _clamp(conditional_entropy(j, "Xhat", ("T", "Z"))))


def _inner_helper(source, j):
    delta = conditional_entropy(j, "Xhat", ("U", "Y")) + mutual_information(j, "X", "Xhat", "Y")
    return RegionPoint(mutual_information(j, "X", "U", "Y"), expected_distortion(source, j),
                       _clamp(delta))


def _outer_helper(source, j):
    delta = (conditional_entropy(j, "Xhat", ("U", "Y"))
             + mutual_information(j, "X", ("V", "Xhat"), "Y"))
    return RegionPoint(mutual_information(j, "X", "U", "Y"), expected_distortion(source, j),
                       _clamp(delta))


_FROM_JOINT = {
    ("eve", "inner"): _inner_eve, ("eve", "outer"): _outer_eve,
    ("eve_causal", "inner"): _inner_causal, ("eve_causal", "outer"): _outer_causal,
    ("helper", "inner"): _inner_helper, ("helper", "outer"): _outer_helper,
}


def point_from_joint(source: SourceSpec, joint: JointPmf, setting: str,
                     bound: str = "inner") -> RegionPoint:
    """Evaluate a bound on an already composed joint (axes named as in compose_joint)."""
    try:
        fn = _FROM_JOINT[setting, bound]
    except KeyError:
        raise ConfigError(f"no {bound!r} bound for setting {setting!r}") from None
    return fn(source, joint)


def _require_outer_v(channels: AuxChannels):
    if channels.p_vxhat_given_uy is None:
        raise ConfigError("outer bound needs p_vxhat_given_uy (use with_constant_v for V = const)")


def _require_t_function(channels: AuxChannels):
    if channels.t_of_u is None and not channels.p_t_given_u.is_deterministic():
        raise ConfigError("outer bound needs T to be a deterministic function of U (t_of_u)")


def eval_inner_eve(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    """Non-causal side information, layered inner bound.

    Delta = H(Xhat|U,Y) + I(Xhat;Y|T) - I(Xhat;Z|T) - I(U;Z|T,Y,Xhat), clamped at 0.
    """
    return _inner_eve(source, _joint(source, channels))


def eval_outer_eve(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    """Outer bound with auxiliary V; V is augmented to (V, T) so that H(T|V) = 0."""
    _require_outer_v(channels)
    _require_t_function(channels)
    return _outer_eve(source, _joint(source, channels, with_v=True))


def eval_inner_causal(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    """Causal side information: (I(X;U), E d, H(Xhat|U,Z)). Exact for memoryless reconstruction."""
    return _inner_causal(source, _joint(source, channels))


def eval_outer_causal(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    _require_t_function(channels)
    return _outer_causal(source, _joint(source, channels))


def eval_inner_helper(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    """Privacy against the helper that supplies Y; Z plays no role."""
    return _inner_helper(source, _joint(source, channels))


def eval_outer_helper(source: SourceSpec, channels: AuxChannels) -> RegionPoint:
    _require_outer_v(channels)
    return _outer_helper(source, _joint(source, channels, with_v=True))


def reduce_encoder_privacy(source: SourceSpec) -> SourceSpec:
    """Replace Z by a copy of X: the eavesdropper becomes the encoder."""
    pxy = source.pxyz.marginal(("X", "Y"))
    nx = source.x.size
    w = pxy[:, :, None] * np.eye(nx)[:, None, :]
    z = Alphabet("Z", nx, source.x.symbols)
    pxyz = JointPmf((source.x, source.y, z), w)
    return dataclasses.replace(source, pxyz=pxyz)


def cardinality_limits(setting: str, x_size: int) -> dict:
    """Sufficient auxiliary alphabet sizes for the inner bound of ``setting``."""
    if setting in ("eve", "encoder"):
        return {"t": x_size + 5, "u": (x_size + 5) * (x_size + 4)}
    if setting in ("eve_causal", "helper"):
        return {"u": x_size + 3}
    raise ConfigError(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def check_cardinality(setting: str, channels: AuxChannels, x_size: int) -> list:
    """Warnings for auxiliary alphabets larger than needed. Never raises on size."""
    limits = cardinality_limits(setting, x_size)
    sizes = {"u": channels.u_size, "t": channels.t_size}
    formulas = {("eve", "t"): "|X|+5", ("eve", "u"): "(|X|+5)(|X|+4)",
                ("eve_causal", "u"): "|X|+3", ("helper", "u"): "|X|+3"}
    key = "eve" if setting == "encoder" else setting
    warnings = []
    for aux, limit in limits.items():
        if sizes[aux] > limit:
            warnings.append(
                f"|{aux.upper()}|={sizes[aux]} exceeds the sufficient size "
                f"{formulas[key, aux]}={limit} for setting {setting!r}; points remain valid")
    return warnings


INNER = {"eve": eval_inner_eve, "eve_causal": eval_inner_causal, "helper": eval_inner_helper}
OUTER = {"eve": eval_outer_eve, "eve_causal": eval_outer_causal, "helper": eval_outer_helper}


def evaluate(source: SourceSpec, channels: AuxChannels, setting: str,
             bound: str = "inner") -> RegionPoint:
    """Dispatch on setting name; ``encoder`` reduces to ``eve`` with Z = X and T = U."""
    if setting == "encoder":
        if bound != "inner":
            raise ConfigError("only the inner bound is available for the encoder setting")
        src = reduce_encoder_privacy(source)
        ch = dataclasses.replace(channels, p_t_given_u=None, t_of_u=None, p_vxhat_given_uy=None)
        return eval_inner_eve(src, ch)
    if bound not in ("inner", "outer"):
        raise ConfigError(f"bound must be 'inner' or 'outer', got {bound!r}")
    table = INNER if bound == "inner" else OUTER
    if setting not in table:
        raise ConfigError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    return table[setting](source, channels)

