"""Deterministic quadrature helpers used throughout the package."""

from __future__ import annotations

from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when adaptive integration fails to reach the requested tolerance."""


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Adaptive Simpson integration of a smooth scalar function on [a, b].

    Each subinterval is accepted when the Richardson error estimate
    |S2 - S1| / 15 meets its share of the combined absolute/relative budget.
    """
    if b == a:
        return 0.0
    fa, fb = float(f(a)), float(f(b))
    m = 0.5 * (a + b)
    fm = float(f(m))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    scale = max(abs(whole), atol / max(rtol, 1e-300))

    total = 0.0
    # stack entries: (a, fa, m, fm, b, fb, S, tol, depth)
    stack = [(a, fa, m, fm, b, fb, whole, atol + rtol * abs(scale), 0)]
    while stack:
        xa, va, xm, vm, xb, vb, s, tol, depth = stack.pop()
        lm = 0.5 * (xa + xm)
        rm = 0.5 * (xm + xb)
        vlm, vrm = float(f(lm)), float(f(rm))
        s_left = (xm - xa) / 6.0 * (va + 4.0 * vlm + vm)
        s_right = (xb - xm) / 6.0 * (vm + 4.0 * vrm + vb)
        delta = s_left + s_right - s
        if abs(delta) <= 15.0 * tol:
            total += s_left + s_right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{xa}, {xb}] "
                f"(|error estimate| ~ {abs(delta) / 15.0:.3e} > {tol:.3e})"
            )
        half = 0.5 * tol
        stack.append((xa, va, lm, vlm, xm, vm, s_left, half, depth + 1))
        stack.append((xm, vm, rm, vrm, xb, vb, s_right, half, depth + 1))
    return total


def composite_simpson(values: np.ndarray, dx: float) -> np.ndarray | float:
    """Composite Simpson rule on a uniform grid with an odd number of points.

    ``values`` may be batched with the grid along the last axis.
    """
    n = values.shape[-1]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"composite Simpson needs an odd number of points, got {n}")
    weights = np.ones(n)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return values @ weights * (dx / 3.0)


def gauss_legendre_panels(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: np.ndarray,
    order: int = 24,
) -> float:
    """Gauss-Legendre quadrature over prescribed panel edges.

    Intended for integrands with a sharp boundary layer: graded panels keep
    each panel's variation resolvable by a fixed-order rule.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    edges = np.asarray(panels, dtype=float)
    if edges[0] != a or edges[-1] != b or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must increase from a to b")
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        total += half * float(np.dot(weights, f(mid + half * nodes)))
    return total


def geometric_panels(a: float, b: float, smallest: float, ratio: float = 2.0) -> np.ndarray:
    """Panel edges geometrically graded toward ``a``."""
    if smallest <= 0 or b <= a:
        raise ValueError("need smallest > 0 and b > a")
    edges = [a]
    width = min(smallest, b - a)
    pos = a
    while pos + width < b:
        pos += width
        edges.append(pos)
        width *= ratio
    edges.append(b)
    return np.array(edges)
