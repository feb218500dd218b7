import numpy as np
import pytest

from folkmotif.tokens import TokenizedSong


def central_difference(f, x, h=1e-5):
    """Numerical gradient of a scalar function at x, one coordinate at a time.

    Perturbs x in place (and restores it), so f may either use the argument
    it receives or close over x inside a larger parameter structure.
    """
    x = np.asarray(x)
    grad = np.zeros_like(x, dtype=np.float64)
    flat, g = x.ravel(), grad.ravel()
    if not np.shares_memory(flat, x):
        raise ValueError("x must be contiguous so it can be perturbed in place")
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
    return float(np.abs(analytic - numeric).max() / scale)


def assert_gradients_close(analytic, numeric, rtol=1e-4, what="gradient"):
    err = relative_error(analytic, numeric)
    assert err < rtol, f"{what}: relative error {err:.3e} exceeds {rtol:.0e}"


@pytest.fixture
def fixture_songs():
    """Small two-topic token corpus: p/q and r/s tokens never cross topics."""
    songs = []
    for i in range(8):
        songs.append(TokenizedSong(id=f"pq{i}", label="alpha", tokens=("p", "q") * 10))
        songs.append(TokenizedSong(id=f"rs{i}", label="beta", tokens=("r", "s") * 10))
    return songs
