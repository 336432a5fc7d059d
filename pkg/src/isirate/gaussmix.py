"""Quadrature over finite Gaussian mixtures.

Everything here works on a one-dimensional density

    p(y) = sum_j w_j * N(y; c_j, sigma^2)

with a common sigma. Integrals are computed with composite Gauss-Legendre
panels whose width is tied to sigma (the only smoothness scale of the
integrand), doubling the panel density until two successive estimates
agree. Components further than ``_WINDOW_SIGMAS`` standard deviations
from an evaluation block are skipped; their contribution is below 1e-40
of the local density.
"""

from __future__ import annotations

import numpy as np

from .errors import NonConvergent

_GL_ORDER = 16
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

_WINDOW_SIGMAS = 14.0
_TAIL_SIGMAS = 10.0
_NODE_BLOCK = 512
_EVAL_BUDGET = 2**23  # elements per kernel matrix (64 MB of float64)


def _gl_rule(order: int = _GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_nodes(lo: float, hi: float, n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi]."""
    gx, gw = _gl_rule()
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mid[:, None] + half * gx[None, :]).ravel()
    weights = np.broadcast_to(half * gw[None, :], (n_panels, gx.size)).ravel()
    return nodes, weights


def _mixture_eval(
    nodes: np.ndarray,
    means_sorted: np.ndarray,
    weights_sorted: np.ndarray,
    sigma: float,
    value_coeff: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Evaluate p(y) (and optionally sum_j v_j w_j N(y; c_j, s^2)) at nodes.

    ``nodes`` must be ascending. Means must be sorted ascending, with
    ``value_coeff`` aligned to them when given.
    """
    p = np.zeros_like(nodes)
    num = np.zeros_like(nodes) if value_coeff is not None else None
    window = _WINDOW_SIGMAS * sigma
    norm = 1.0 / (sigma * np.sqrt(2.0 * np.pi))
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    for start in range(0, nodes.size, _NODE_BLOCK):
        blk = nodes[start : start + _NODE_BLOCK]
        sl = slice(start, start + blk.size)
        j0 = np.searchsorted(means_sorted, blk[0] - window)
        j1 = np.searchsorted(means_sorted, blk[-1] + window)
        # sub-chunk the component window to bound the kernel matrix size
        comp_chunk = max(1, _EVAL_BUDGET // blk.size)
        for c0 in range(j0, j1, comp_chunk):
            c1 = min(c0 + comp_chunk, j1)
            d = blk[:, None] - means_sorted[None, c0:c1]
            kern = np.exp(-inv2s2 * d * d)
            p[sl] += norm * (kern @ weights_sorted[c0:c1])
            if num is not None:
                num[sl] += norm * (kern @ (value_coeff[c0:c1] * weights_sorted[c0:c1]))
    return p, num


def _sorted_mixture(
    means: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    means = np.asarray(means, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(means, kind="stable")
    return means[order], weights[order]


def mixture_entropy(
    means,
    weights,
    sigma: float,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-13,
    max_pps: int = 32,
) -> tuple[float, float]:
    """Differential entropy (nats) of the mixture, with an error estimate.

    Returns ``(h, err)`` where ``err`` is the last inter-refinement
    difference. Raises NonConvergent if panel doubling stalls.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    ms, ws = _sorted_mixture(means, weights)
    lo = ms[0] - _TAIL_SIGMAS * sigma
    hi = ms[-1] + _TAIL_SIGMAS * sigma
    prev = None
    pps = 1.0
    while pps <= max_pps:
        n_panels = max(4, int(np.ceil((hi - lo) / sigma * pps)))
        nodes, qw = _panel_nodes(lo, hi, n_panels)
        p, _ = _mixture_eval(nodes, ms, ws, sigma)
        mask = p > 0.0
        f = np.zeros_like(p)
        f[mask] = -p[mask] * np.log(p[mask])
        est = float(f @ qw)
        if prev is not None:
            delta = abs(est - prev)
            if delta <= max(abs_tol, rel_tol * abs(est)):
                return est, delta
        prev = est
        pps *= 2.0
    raise NonConvergent(
        f"mixture entropy did not converge (last estimate {prev!r})"
    )


def mixture_conditional_second_moment(
    values,
    weights,
    gamma: float,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-14,
    max_pps: int = 32,
) -> float:
    """E[(E[z|y])^2] for discrete z observed as y = sqrt(gamma) z + N(0,1).

    ``values``/``weights`` describe the law of z. The returned quantity
    gives the MMSE through E z^2 - E[(E[z|y])^2].
    """
    vals = np.asarray(values, dtype=float).ravel()
    wts = np.asarray(weights, dtype=float).ravel()
    if gamma == 0.0:
        return float((vals * wts).sum()) ** 2
    root = np.sqrt(gamma)
    ms, order = np.sort(root * vals), np.argsort(root * vals, kind="stable")
    ws = wts[order]
    coeff = vals[order]
    lo = ms[0] - _TAIL_SIGMAS
    hi = ms[-1] + _TAIL_SIGMAS
    prev = None
    pps = 1.0
    while pps <= max_pps:
        n_panels = max(4, int(np.ceil((hi - lo) * pps)))
        nodes, qw = _panel_nodes(lo, hi, n_panels)
        p, num = _mixture_eval(nodes, ms, ws, 1.0, value_coeff=coeff)
        mask = p > 0.0
        f = np.zeros_like(p)
        f[mask] = num[mask] * num[mask] / p[mask]
        est = float(f @ qw)
        if prev is not None:
            delta = abs(est - prev)
            if delta <= max(abs_tol, rel_tol * abs(est)):
                return est
        prev = est
        pps *= 2.0
    raise NonConvergent("conditional second moment did not converge")


def consolidate_atoms(
    values, weights, tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate atoms (within tol of each other) of a discrete law."""
    vals = np.asarray(values, dtype=float).ravel()
    wts = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(vals, kind="stable")
    vals, wts = vals[order], wts[order]
    scale = max(1.0, np.abs(vals).max(initial=0.0))
    new_group = np.ones(vals.size, dtype=bool)
    new_group[1:] = np.diff(vals) > tol * scale
    group = np.cumsum(new_group) - 1
    n = group[-1] + 1 if vals.size else 0
    merged_w = np.zeros(n)
    np.add.at(merged_w, group, wts)
    merged_v = np.zeros(n)
    np.add.at(merged_v, group, vals * wts)
    merged_v /= merged_w
    return merged_v, merged_w


def gl_integrate(
    f,
    lo: float,
    hi: float,
    rel_tol: float = 1e-12,
    abs_tol: float = 1e-14,
    min_panels: int = 8,
    max_levels: int = 12,
) -> float:
    """Adaptive-by-doubling composite Gauss-Legendre integral of f on [lo, hi]."""
    prev = None
    n_panels = min_panels
    for _ in range(max_levels):
        nodes, qw = _panel_nodes(lo, hi, n_panels)
        est = float(f(nodes) @ qw)
        if prev is not None and abs(est - prev) <= max(abs_tol, rel_tol * abs(est)):
            return est
        prev = est
        n_panels *= 2
    raise NonConvergent("gl_integrate did not converge")
