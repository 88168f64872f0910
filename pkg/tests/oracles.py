"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog


def direct_dft_periodogram(x):
    """``|T**-0.5 Σ_t x_t exp(-2πi k t / T)|**2`` for k = 0..T-1 by explicit sums."""
    x = [float(v) for v in x]
    T = len(x)
    out = []
    for k in range(T):
        re = sum(v * math.cos(2 * math.pi * k * t / T) for t, v in enumerate(x))
        im = -sum(v * math.sin(2 * math.pi * k * t / T) for t, v in enumerate(x))
        out.append((re * re + im * im) / T)
    return np.array(out)


def circular_moving_average(two_sided, m):
    n = len(two_sided)
    return np.array([sum(two_sided[(k + j) % n] for j in range(-m, m + 1)) / (2 * m + 1) for k in range(n)])


# --- persistence --------------------------------------------------------------------


def _rank_order(values):
    flat = np.asarray(values, dtype=float).ravel()
    order = sorted(range(flat.size), key=lambda i: (flat[i], i))
    rank = {c: k for k, c in enumerate(order)}
    return flat, order, rank


def _sweep_components(flat, order, rank, components_of):
    """Track components of growing sublevel sets; ``components_of(mask)`` lists cell groups.

    A component is named by its oldest cell.  When a name disappears, that
    component merged into an older one at the current value.
    """
    mask = np.zeros(flat.size, dtype=bool)
    alive = set()
    points = []
    for cell in order:
        mask[cell] = True
        names = {min(group, key=lambda c: rank[c]) for group in components_of(mask)}
        for gone in alive - names:
            points.append((flat[gone], flat[cell]))
        alive = names
    assert len(alive) == 1
    points.append((flat[order[0]], flat[order[-1]]))
    return sorted(points)


def ph0_1d_sweep(f):
    """H0 of a 1D function by recomputing the runs of each sublevel set."""
    flat, order, rank = _rank_order(f)

    def runs(mask):
        groups, cur = [], []
        for i, on in enumerate(mask):
            if on:
                cur.append(i)
            elif cur:
                groups.append(cur)
                cur = []
        if cur:
            groups.append(cur)
        return groups

    return _sweep_components(flat, order, rank, runs)


def ph0_2d_sweep(f):
    """H0 of the T-construction: 8-connected pixel components at every threshold."""
    f = np.asarray(f, dtype=float)
    flat, order, rank = _rank_order(f)
    structure = np.ones((3, 3), dtype=int)

    def groups(mask):
        labels, n = ndimage.label(mask.reshape(f.shape), structure=structure)
        lab = labels.ravel()
        return [np.flatnonzero(lab == k).tolist() for k in range(1, n + 1)]

    return _sweep_components(flat, order, rank, groups)


def betti_from_euler(mask):
    """(b0, b1) of the union of closed pixels in ``mask`` using χ = V - E + F."""
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    verts, edges = set(), set()
    for i, j in zip(rows.tolist(), cols.tolist()):
        verts.update({(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)})
        edges.update({("h", i, j), ("h", i + 1, j), ("v", i, j), ("v", i, j + 1)})
    chi = len(verts) - len(edges) + len(rows)
    _, b0 = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return b0, b0 - chi


def full_reduction_2d(f):
    """Standard column reduction over Z/2 of the whole cubical complex, no clearing.

    Built independently of the package: cells are keyed by doubled
    coordinates, so a cell at (a, b) is a vertex when both are even, an edge
    when one is odd and a square when both are odd.
    """
    f = np.asarray(f, dtype=float)
    n, m = f.shape
    cells = [(a, b) for a in range(2 * n + 1) for b in range(2 * m + 1)]

    def value(a, b):
        rs = [a // 2] if a % 2 else [a // 2 - 1, a // 2]
        cs = [b // 2] if b % 2 else [b // 2 - 1, b // 2]
        return min(f[r, c] for r in rs for c in cs if 0 <= r < n and 0 <= c < m)

    def dim(a, b):
        return (a % 2) + (b % 2)

    def faces(a, b):
        out = []
        if a % 2:
            out += [(a - 1, b), (a + 1, b)]
        if b % 2:
            out += [(a, b - 1), (a, b + 1)]
        return out

    key = {c: (value(*c), dim(*c), k) for k, c in enumerate(cells)}
    ordered = sorted(cells, key=lambda c: key[c])
    pos = {c: k for k, c in enumerate(ordered)}
    columns = [sum(1 << pos[q] for q in faces(*c)) for c in ordered]
    low_owner = {}
    pairs = []
    for j in range(len(columns)):
        col = columns[j]
        while col:
            low = col.bit_length() - 1
            if low not in low_owner:
                low_owner[low] = j
                pairs.append((low, j))
                break
            col ^= columns[low_owner[low]]
        columns[j] = col
    dgm = {0: [], 1: []}
    for low, j in pairs:
        birth_cell, death_cell = ordered[low], ordered[j]
        b, d = key[birth_cell][0], key[death_cell][0]
        if d > b:
            dgm[dim(*birth_cell)].append((b, d))
    dgm[0].append((float(f.min()), float(f.max())))
    return {k: sorted(v) for k, v in dgm.items()}


# --- matching ------------------------------------------------------------------------


def _diag(p, q):
    return ((p[1] - p[0]) / math.sqrt(2.0)) ** q


def brute_force_wasserstein(a, b, p=2.0):
    """Minimum over every partial matching of ``a`` into ``b``; the rest go to the diagonal."""
    a = [tuple(x) for x in a]
    b = [tuple(x) for x in b]
    best = math.inf
    for k in range(min(len(a), len(b)) + 1):
        for subset in itertools.combinations(range(len(a)), k):
            for image in itertools.permutations(range(len(b)), k):
                cost = sum(math.dist(a[i], b[j]) ** p for i, j in zip(subset, image))
                cost += sum(_diag(a[i], p) for i in range(len(a)) if i not in subset)
                cost += sum(_diag(b[j], p) for j in range(len(b)) if j not in image)
                best = min(best, cost)
    return best ** (1.0 / p)


def brute_force_bottleneck(a, b):
    """L-infinity bottleneck distance by enumeration (small diagrams only)."""
    a = [tuple(x) for x in a]
    b = [tuple(x) for x in b]
    half = lambda p: (p[1] - p[0]) / 2.0  # noqa: E731
    best = math.inf
    for k in range(min(len(a), len(b)) + 1):
        for subset in itertools.combinations(range(len(a)), k):
            for image in itertools.permutations(range(len(b)), k):
                cost = max([max(abs(a[i][0] - b[j][0]), abs(a[i][1] - b[j][1])) for i, j in zip(subset, image)]
                           + [half(a[i]) for i in range(len(a)) if i not in subset]
                           + [half(b[j]) for j in range(len(b)) if j not in image] + [0.0])
                best = min(best, cost)
    return best


def transport_lp(x, y, positions):
    """Optimal transport cost between two unit-mass histograms on a line, as an LP."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    cost = np.abs(np.subtract.outer(positions, positions)).ravel()
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n : (i + 1) * n] = 1.0
        a_eq[n + i, i::n] = 1.0
    res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([x, y]), bounds=(0, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0, res.message
    return float(res.fun)


# --- CUSUM -----------------------------------------------------------------------------


def cusum_by_hand(values, mu):
    out, c = [], 0.0
    for d in values:
        c = c + (d - mu)
        if c < 0:
            c = 0.0
        out.append(c)
    return out
