import numpy as np
import pytest

from recpriv.probcore import Alphabet, CondPmf, JointPmf
from recpriv.regions import AuxChannels, SourceSpec


def random_simplex(rng, shape, sparse=False):
    w = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
    if sparse:
        w = np.where(rng.random(w.shape) < 0.25, 0.0, w)
        w[..., 0] += 1e-3
        w /= w.sum(axis=-1, keepdims=True)
    return w


def random_instance(rng, nx=2, ny=2, nz=2, nu=2, nh=2, nt=None, t_function=False, nv=None):
    """A random source with random auxiliary channels; Y/Z sizes may be 1."""
    X, Y, Z = Alphabet("X", nx), Alphabet("Y", ny), Alphabet("Z", nz)
    F, H, U = Alphabet("F", nx), Alphabet("Xhat", nh), Alphabet("U", nu)
    pxyz = random_simplex(rng, (nx * ny * nz,)).reshape(nx, ny, nz)
    f = np.tile(np.arange(nx)[:, None], (1, ny))
    d = rng.random((nx, nh))
    source = SourceSpec(JointPmf((X, Y, Z), pxyz), F, H, f, d)
    kw = {}
    if t_function:
        kw["t_of_u"] = rng.integers(0, nt or nu, size=nu)
    elif nt is not None:
        kw["p_t_given_u"] = CondPmf((U,), (Alphabet("T", nt),), random_simplex(rng, (nu, nt)))
    ch = AuxChannels(
        p_u_given_x=CondPmf((X,), (U,), random_simplex(rng, (nx, nu))),
        p_xhat_given_uy=CondPmf((U, Y), (H,), random_simplex(rng, (nu, ny, nh))),
        **kw,
    )
    if nv is not None:
        ch = ch.with_v(random_simplex(rng, (nu, ny, nh, nv)), nv)
    return source, ch


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
