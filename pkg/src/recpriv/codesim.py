"""Finite-blocklength simulation of the layered, binned coding scheme.

A T-layer codebook drawn i.i.d. from P_T is split into bins; for each
T-codeword a U-layer codebook drawn from P_{U|T} is split into its own bins.
The encoder sends the two bin indices of the first jointly typical pair, the
decoder picks the typical pair inside those bins using Y^n and draws each
reconstruction symbol from P(Xhat | U, Y).

``exact_equivocation`` computes H(Xhat^n | W, Z^n)/n for a fixed codebook by
enumerating every source and side-information sequence.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, SizingError
from .probcore import compose_joint, conditional_entropy, mutual_information
from .regions import AuxChannels, SourceSpec, eval_inner_eve

COUNT_GUARD = 1e-9


@dataclass(frozen=True)
class SimParams:
    n: int
    epsilon: float = 1.0
    delta: float = 0.1
    seed: int = 0
    enumeration_budget: int = 2 ** 24
    memory_cap: int = 2 ** 22

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("blocklength n must be >= 1")
        if self.epsilon < 0 or self.delta < 0:
            raise ConfigError("epsilon and delta must be nonnegative")


def layer_count(n: int, info: float, slack: float) -> int:
    """ceil(2^{n (info + slack)}), guarded against rounding just above an integer."""
    return max(1, math.ceil(2.0 ** (n * (info + slack)) - COUNT_GUARD))


@dataclass(frozen=True)
class Codebook:
    source: SourceSpec
    channels: AuxChannels
    params: SimParams
    t_codewords: np.ndarray      # (J, n)
    t_bins: np.ndarray           # (J,)
    u_codewords: np.ndarray      # (J, K, n)
    u_bins: np.ndarray           # (J, K)
    n_t_bins: int
    n_u_bins: int
    info: dict = field(default_factory=dict)
    p_xtu: np.ndarray = None     # typicality model for the encoder
    p_tuy: np.ndarray = None     # typicality model for the decoder

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def rate(self) -> float:
        return (math.log2(self.n_t_bins) + math.log2(self.n_u_bins)) / self.n


@dataclass(frozen=True)
class Encoding:
    w1: int
    w2: int
    j: int
    k: int


@dataclass(frozen=True)
class EncodeFailure:
    reason: str = "no jointly typical codeword pair"


@dataclass(frozen=True)
class DecodeInfo:
    j: int
    k: int
    n_typical: int
    ambiguous: bool
    mismatch: bool


@dataclass
class SimResult:
    trials: int
    empirical_rate: float
    empirical_distortion: Optional[float]
    distortion_stderr: Optional[float]
    encode_failure_rate: float
    decode_ambiguity_rate: float
    decode_mismatch_rate: float
    decode_error_rate: float
    exact_equivocation: Optional[float] = None
    monitors: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _assign_bins(rng, count: int, n_bins: int) -> np.ndarray:
    """Equal-sized random bins: a random permutation dealt round-robin."""
    bins = np.empty(count, dtype=np.int64)
    bins[rng.permutation(count)] = np.arange(count) % n_bins
    return bins


def build_codebook(source: SourceSpec, channels: AuxChannels, params: SimParams) -> Codebook:
    ch = channels.without_v()
    joint = compose_joint(source, ch)
    info = {
        "I(X;T)": mutual_information(joint, "X", "T"),
        "I(X;T|Y)": mutual_information(joint, "X", "T", "Y"),
        "I(X;U|T)": mutual_information(joint, "X", "U", "T"),
        "I(X;U|T,Y)": mutual_information(joint, "X", "U", ("T", "Y")),
    }
    n, d = params.n, params.delta
    n_t = layer_count(n, info["I(X;T)"], d)
    n_t_bins = layer_count(n, info["I(X;T|Y)"], 2 * d)
    n_u = layer_count(n, info["I(X;U|T)"], d)
    n_u_bins = layer_count(n, info["I(X;U|T,Y)"], 2 * d)
    symbols = n_t * n + n_t * n_u * n
    if symbols > params.memory_cap:
        raise SizingError(
            f"codebook needs {symbols} stored symbols ({n_t} T-codewords x {n_u} U-codewords, n={n}), "
            f"cap is {params.memory_cap}", required=symbols)

    rng = np.random.default_rng(params.seed)
    p_tu = joint.marginal(("T", "U"))
    p_t = p_tu.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_u_given_t = np.where(p_t[:, None] > 0, p_tu / p_t[:, None], 1.0 / p_tu.shape[1])
    t_cw = rng.choice(p_t.size, size=(n_t, n), p=p_t / p_t.sum())
    t_bins = _assign_bins(rng, n_t, n_t_bins)
    cdf = np.cumsum(p_u_given_t, axis=1)
    draws = rng.random((n_t, n_u, n))
    u_cw = np.minimum((draws[..., None] > cdf[t_cw][:, None, :, :]).sum(axis=-1), p_tu.shape[1] - 1)
    u_bins = np.stack([_assign_bins(rng, n_u, n_u_bins) for _ in range(n_t)]) if n_t else np.zeros((0, n_u), int)

    return Codebook(
        source=source, channels=ch, params=params,
        t_codewords=t_cw, t_bins=t_bins, u_codewords=u_cw, u_bins=u_bins,
        n_t_bins=n_t_bins, n_u_bins=n_u_bins, info=info,
        p_xtu=joint.marginal(("X", "T", "U")), p_tuy=joint.marginal(("T", "U", "Y")),
    )


def _typical(cells: np.ndarray, model: np.ndarray, eps: float) -> np.ndarray:
    """Robust typicality of each row of ``cells`` (flat cell indices, shape (..., n)).

    A row is typical when its empirical type pi satisfies |pi - p| <= eps * p
    in every cell; cells with p = 0 must therefore be empty.
    """
    n = cells.shape[-1]
    flat = cells.reshape(-1, n)
    m = model.size
    offs = (np.arange(flat.shape[0]) * m)[:, None]
    counts = np.bincount((flat + offs).ravel(), minlength=flat.shape[0] * m).reshape(-1, m)
    pi = counts / n
    p = model.ravel()
    ok = np.all(np.abs(pi - p) <= eps * p + 1e-12, axis=1)
    return ok.reshape(cells.shape[:-1])


def _check_seq(seq, size, n, what):
    seq = np.asarray(seq, dtype=np.int64)
    if seq.shape != (n,):
        raise ConfigError(f"{what} must have length {n}, got shape {seq.shape}")
    if seq.min() < 0 or seq.max() >= size:
        raise ConfigError(f"{what} has symbols outside [0, {size})")
    return seq


def encode(codebook: Codebook, x_seq):
    """Bin indices of the lowest-index jointly typical (t, u) pair, or EncodeFailure."""
    nx, nt, nu = codebook.p_xtu.shape
    x = _check_seq(x_seq, nx, codebook.n, "x_seq")
    t = codebook.t_codewords[:, None, :]
    cells = x * (nt * nu) + t * nu + codebook.u_codewords
    ok = _typical(cells, codebook.p_xtu, codebook.params.epsilon)
    hits = np.argwhere(ok)
    if hits.size == 0:
        return EncodeFailure()
    j, k = (int(v) for v in hits[0])
    return Encoding(int(codebook.t_bins[j]), int(codebook.u_bins[j, k]), j, k)


def _bin_members(codebook: Codebook, w1: int, w2: int) -> np.ndarray:
    if not (0 <= w1 < codebook.n_t_bins) or not (0 <= w2 < codebook.n_u_bins):
        raise ConfigError(f"bin indices ({w1}, {w2}) out of range "
                          f"[0, {codebook.n_t_bins}) x [0, {codebook.n_u_bins})")
    js = np.flatnonzero(codebook.t_bins == w1)
    pairs = [(j, k) for j in js for k in np.flatnonzero(codebook.u_bins[j] == w2)]
    if not pairs:
        raise ConfigError(f"bins ({w1}, {w2}) contain no codeword pair")
    return np.array(pairs, dtype=np.int64)


def _select(codebook: Codebook, pairs: np.ndarray, y_block: np.ndarray):
    """Decoder choice for each row of ``y_block``: (pair index, n_typical)."""
    nt, nu, ny = codebook.p_tuy.shape
    t = codebook.t_codewords[pairs[:, 0]]
    u = codebook.u_codewords[pairs[:, 0], pairs[:, 1]]
    cells = (t * (nu * ny) + u * ny)[:, None, :] + y_block[None, :, :]
    ok = _typical(cells, codebook.p_tuy, codebook.params.epsilon)   # (pairs, ys)
    n_typ = ok.sum(axis=0)
    first = np.where(n_typ > 0, np.argmax(ok, axis=0), 0)
    return first, n_typ


def decode(codebook: Codebook, w1: int, w2: int, y_seq, draw_seed: int):
    """Reconstruct Xhat^n from the bin indices and Y^n; returns (xhat_seq, DecodeInfo)."""
    ny = codebook.source.y.size
    y = _check_seq(y_seq, ny, codebook.n, "y_seq")
    pairs = _bin_members(codebook, w1, w2)
    first, n_typ = _select(codebook, pairs, y[None, :])
    j, k = (int(v) for v in pairs[first[0]])
    info = DecodeInfo(j, k, int(n_typ[0]), bool(n_typ[0] > 1), bool(n_typ[0] == 0))
    u = codebook.u_codewords[j, k]
    rows = codebook.channels.p_xhat_given_uy.rows[u, y]            # (n, |Xhat|)
    rng = np.random.default_rng(draw_seed)
    draws = rng.random(codebook.n)
    xhat = np.minimum((draws[:, None] > np.cumsum(rows, axis=1)).sum(axis=1), rows.shape[1] - 1)
    return xhat, info


def product_law(p_xhat_given_uy: np.ndarray, u_seq, y_seq) -> np.ndarray:
    """Law of Xhat^n given (u^n, y^n) over |Xhat|^n sequences, first symbol most significant."""
    rows = np.asarray(p_xhat_given_uy)[np.asarray(u_seq), np.asarray(y_seq)]
    law = np.ones(1)
    for r in rows:
        law = np.multiply.outer(law, r).ravel()
    return law


def _sequences(size: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(size), repeat=n)), dtype=np.int64).reshape(-1, n)


def _seq_pmf(p: np.ndarray, n: int) -> np.ndarray:
    """Product pmf of n i.i.d. draws of the multi-axis pmf ``p``, indexed per axis by sequence."""
    k = p.ndim
    out = np.ones(())
    for _ in range(n):
        out = np.multiply.outer(out, p)
    # axes are (a1,b1,c1,a2,b2,c2,...); regroup to (a1..an, b1..bn, ...)
    order = [i * k + a for a in range(k) for i in range(n)]
    out = out.transpose(order)
    return out.reshape([p.shape[a] ** n for a in range(k)])


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _encoder_map(codebook: Codebook, xs: np.ndarray):
    """(j, k, success) for every source sequence; failures fall back to pair (0, 0)."""
    jk = np.zeros((xs.shape[0], 2), dtype=np.int64)
    ok = np.zeros(xs.shape[0], dtype=bool)
    for i, x in enumerate(xs):
        e = encode(codebook, x)
        if isinstance(e, Encoding):
            jk[i] = (e.j, e.k)
            ok[i] = True
    return jk, ok


def _enumeration_size(codebook: Codebook) -> int:
    s = codebook.source
    base = s.x.size * s.y.size * s.z.size * s.xhat_alphabet.size
    return base ** codebook.n


def _decoded_u(codebook: Codebook, w1: int, w2: int, ys: np.ndarray) -> np.ndarray:
    pairs = _bin_members(codebook, w1, w2)
    first, _ = _select(codebook, pairs, ys)
    chosen = pairs[first]
    return codebook.u_codewords[chosen[:, 0], chosen[:, 1]]


def exact_equivocation(codebook: Codebook, with_monitors: bool = False):
    """H(Xhat^n | W1, W2, Z^n) / n for this fixed codebook, by full enumeration.

    Encode failures send the bins of pair (0, 0). With ``with_monitors`` a
    dict of intermediate quantities is returned as well.
    """
    need = _enumeration_size(codebook)
    budget = codebook.params.enumeration_budget
    if need > budget:
        raise SizingError(f"exact equivocation needs {need} joint states, budget is {budget}",
                          required=need)
    s, n = codebook.source, codebook.n
    xs = _sequences(s.x.size, n)
    ys = _sequences(s.y.size, n)
    p_seq = _seq_pmf(s.pxyz.weights, n)                       # (NX, NY, NZ)
    jk, _ = _encoder_map(codebook, xs)
    w1 = codebook.t_bins[jk[:, 0]]
    w2 = codebook.u_bins[jk[:, 0], jk[:, 1]]
    dec = codebook.channels.p_xhat_given_uy.rows
    nh = dec.shape[-1]

    h_wzx = 0.0
    h_wz = 0.0
    for key in sorted(set(zip(w1.tolist(), w2.tolist()))):
        members = (w1 == key[0]) & (w2 == key[1])
        a = p_seq[members].sum(axis=0)                         # (NY, NZ)
        if not a.any():
            continue
        u = _decoded_u(codebook, key[0], key[1], ys)           # (NY, n)
        rows = dec[u, ys]                                      # (NY, n, nh)
        law = np.ones((ys.shape[0], 1))
        for i in range(n):
            law = (law[:, :, None] * rows[:, i, None, :]).reshape(ys.shape[0], -1)
        q = a.T @ law                                          # (NZ, nh^n)
        h_wzx += _h(q)
        h_wz += _h(a.sum(axis=0))
    value = max(0.0, (h_wzx - h_wz) / n)
    value = min(value, math.log2(nh))
    if not with_monitors:
        return value
    return value, _monitors(codebook, xs, p_seq, jk)


def _monitors(codebook: Codebook, xs, p_seq, jk) -> dict:
    """Finite-n quantities reported alongside the equivocation."""
    n = codebook.n
    # H(X^n | J, K, Y^n, Z^n) = H(X^n, Y^n, Z^n) - H(J, K, Y^n, Z^n) since (J, K) = f(X^n)
    h_xyz = _h(p_seq)
    h_jkyz = 0.0
    for key in set(map(tuple, jk.tolist())):
        members = np.all(jk == key, axis=1)
        h_jkyz += _h(p_seq[members].sum(axis=0))
    joint = compose_joint(codebook.source, codebook.channels)
    return {
        "H(X^n|J,K,Y^n,Z^n)/n": (h_xyz - h_jkyz) / n,
        "H(X|T,U,Y,Z)": conditional_entropy(joint, "X", ("T", "U", "Y", "Z")),
    }


def exact_distortion(codebook: Codebook) -> Optional[float]:
    """E[d^(n) | encode success] for this codebook, by enumeration over (x^n, y^n)."""
    s, n = codebook.source, codebook.n
    xs = _sequences(s.x.size, n)
    ys = _sequences(s.y.size, n)
    p_xy = _seq_pmf(s.pxyz.marginal(("X", "Y")), n)           # (NX, NY)
    jk, ok = _encoder_map(codebook, xs)
    if not ok.any():
        return None
    # per-symbol conditional expected distortion E[d | x, y, u]
    dtab = np.einsum("xyh,uyh->xyu", s.distortion_table(), codebook.channels.p_xhat_given_uy.rows)
    w1 = codebook.t_bins[jk[:, 0]]
    w2 = codebook.u_bins[jk[:, 0], jk[:, 1]]
    total = 0.0
    mass = 0.0
    for key in sorted(set(zip(w1[ok].tolist(), w2[ok].tolist()))):
        u = _decoded_u(codebook, key[0], key[1], ys)           # (NY, n)
        for xi in np.flatnonzero(ok & (w1 == key[0]) & (w2 == key[1])):
            d = dtab[xs[xi][None, :], ys, u].mean(axis=1)      # (NY,)
            total += float(p_xy[xi] @ d)
            mass += float(p_xy[xi].sum())
    return total / mass


def simulate(codebook: Codebook, trials: int, seed: int, exact: bool = True) -> SimResult:
    """Monte-Carlo run of encode/decode; attaches the exact equivocation when within budget."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    s, n = codebook.source, codebook.n
    flat_p = s.pxyz.weights.ravel()
    shape = s.pxyz.weights.shape
    dtab = s.distortion_table()
    dists = []
    fails = ambig = mism = errs = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        idx = rng.choice(flat_p.size, size=n, p=flat_p)
        x, y, _ = np.unravel_index(idx, shape)
        e = encode(codebook, x)
        if isinstance(e, EncodeFailure):
            fails += 1
            continue
        xhat, info = decode(codebook, e.w1, e.w2, y, int(rng.integers(2 ** 63)))
        ambig += info.ambiguous
        mism += info.mismatch
        errs += (info.j, info.k) != (e.j, e.k)
        dists.append(float(dtab[x, y, xhat].mean()))
    ok = trials - fails
    mean = float(np.mean(dists)) if dists else None
    se = float(np.std(dists, ddof=1) / math.sqrt(len(dists))) if len(dists) > 1 else None
    result = SimResult(
        trials=trials,
        empirical_rate=codebook.rate,
        empirical_distortion=mean,
        distortion_stderr=se,
        encode_failure_rate=fails / trials,
        decode_ambiguity_rate=ambig / ok if ok else 0.0,
        decode_mismatch_rate=mism / ok if ok else 0.0,
        decode_error_rate=errs / ok if ok else 0.0,
    )
    result.monitors["single_letter"] = eval_inner_eve(s, codebook.channels).as_dict()
    if exact and _enumeration_size(codebook) <= codebook.params.enumeration_budget:
        value, mon = exact_equivocation(codebook, with_monitors=True)
        result.exact_equivocation = value
        result.monitors.update(mon)
    return result
