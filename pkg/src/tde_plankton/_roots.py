"""Small bracketed root-finding helpers used by the equilibrium solvers."""

from __future__ import annotations

from typing import Callable

from .exceptions import NoSignChangeError


def expand_bracket_up(
    fn: Callable[[float], float],
    lo: float,
    hi0: float,
    *,
    factor: float = 2.0,
    max_doublings: int = 200,
) -> tuple[float, float]:
    """Grow ``hi`` geometrically from ``hi0`` until fn changes sign on (lo, hi)."""
    f_lo = fn(lo)
    hi = hi0
    for _ in range(max_doublings):
        if fn(hi) * f_lo < 0:
            return lo, hi
        hi *= factor
    raise NoSignChangeError(f"no sign change up to hi={hi:g}")


def bisect(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    width_frac: float = 1e-14,
    max_iter: int = 200,
) -> float:
    """Plain bisection to a width of width_frac times the initial bracket."""
    f_lo = fn(lo)
    if f_lo == 0.0:
        return lo
    if fn(hi) * f_lo > 0:
        raise NoSignChangeError(f"fn has the same sign at {lo:g} and {hi:g}")
    width_target = width_frac * (hi - lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= width_target or mid in (lo, hi):
            break
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if f_mid * f_lo < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def newton_polish(
    fn: Callable[[float], float],
    dfn: Callable[[float], float],
    x: float,
    lo: float,
    hi: float,
    *,
    steps: int = 5,
) -> float:
    """Up to ``steps`` Newton iterations, abandoned if the iterate leaves [lo, hi]."""
    best, best_res = x, abs(fn(x))
    for _ in range(steps):
        d = dfn(x)
        if d == 0.0:
            break
        x_new = x - fn(x) / d
        if not lo <= x_new <= hi:
            break
        x = x_new
        res = abs(fn(x))
        if res < best_res:
            best, best_res = x, res
        if res == 0.0:
            break
    return best


def bracketed_root(
    fn: Callable[[float], float],
    dfn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    width_frac: float = 1e-14,
) -> float:
    """Bisection to ``width_frac`` of the bracket, then a short Newton polish."""
    x = bisect(fn, lo, hi, width_frac=width_frac)
    return newton_polish(fn, dfn, x, lo, hi)
