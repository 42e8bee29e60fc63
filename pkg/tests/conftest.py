import numpy as np
import pytest

from tde_plankton.model import ModelParams


@pytest.fixture
def table1():
    """Default rates with the saturating growth response at l = 0.159."""
    def make(**kw):
        base = dict(delta0=0.0, l=0.159, m=0.0, n_total=1.0)
        base.update(kw)
        return ModelParams(**base)
    return make


def bisect_oracle(fn, lo, hi, tol=1e-12, max_iter=500):
    """Plain bisection, independent of the package root finders."""
    f_lo = fn(lo)
    assert f_lo * fn(hi) < 0, "oracle bracket must straddle the root"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if f_mid * f_lo < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def trapezoid(y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum(0.5 * np.diff(x) * (y[:-1] + y[1:])))
