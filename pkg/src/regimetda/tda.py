"""Sublevel-set persistent homology of sampled 1D and 2D functions.

1D inputs are treated as path graphs (vertices carry the samples, an edge
enters at the larger of its endpoint values).  2D inputs use the cubical
T-construction: every pixel is a square carrying its value and each lower
face carries the minimum over its cofaces, so sublevel sets are unions of
closed pixels and components are 8-connected.

Ties are broken by flat (row-major) cell index.  The essential H0 class is
closed at the global maximum so every diagram point is finite.

Two routes are available for 2D inputs:

``union_find``
    H0 by an elder-rule sweep over 8-connected pixels; H1 by the dual
    sweep: a superlevel sweep over 4-connected pixels with the outside of
    the rectangle as an eternal component.  Each dual merge at value ``s``
    of a component peaking at ``M`` is a hole born at ``s`` dying at ``M``.
``reduction``
    Standard Z/2 boundary-matrix reduction of the filtered cubical complex,
    with the clearing optimization.  Zero-persistence pairs are omitted.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

ESSENTIAL_MIN_MAX = "essential H0 closed at (global min, global max)"


@dataclass(frozen=True)
class PersistenceDiagram:
    """Finite multiset of (birth, death) pairs for one homology dimension."""

    dim: int
    points: np.ndarray
    essential_convention: str = ESSENTIAL_MIN_MAX

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.dim not in (0, 1):
            raise ValueError(f"unsupported homology dimension {self.dim}")
        if np.any(pts[:, 1] < pts[:, 0]):
            raise ValueError("diagram point with death < birth")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def persistence(self) -> np.ndarray:
        return self.points[:, 1] - self.points[:, 0]

    def sorted_points(self) -> np.ndarray:
        """Points in lexicographic order, for multiset comparison."""
        if not len(self):
            return self.points
        idx = np.lexsort((self.points[:, 1], self.points[:, 0]))
        return self.points[idx]

    def map_values(self, g) -> "PersistenceDiagram":
        """Apply a value transform to every coordinate."""
        return PersistenceDiagram(self.dim, g(self.points), self.essential_convention)


def _finite_array(f, ndim):
    arr = np.asarray(f, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("function values must be finite")
    return arr


class _DisjointSets:
    """Union-find over integer ids with path halving; roots remember an anchor cell."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.anchor = list(range(n))

    def find(self, a):
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a


def _elder_sweep(values, order, neighbors, elder_key, extra_roots=None):
    """Generic elder-rule sweep returning (anchor_of_dying, merge_cell) pairs.

    ``elder_key(cell)`` must be larger for older anchors.  ``extra_roots(cell)``
    may yield additional always-present node ids adjacent to ``cell``.
    """
    n = len(values)
    sets = _DisjointSets(n + 1)
    seen = [False] * n
    pairs = []
    for cell in order:
        roots = {sets.find(q) for q in neighbors(cell) if seen[q]}
        if extra_roots is not None:
            roots.update(sets.find(q) for q in extra_roots(cell))
        seen[cell] = True
        if not roots:
            continue
        ranked = sorted(roots, key=lambda r: elder_key(sets.anchor[r]), reverse=True)
        elder = ranked[0]
        for other in ranked[1:]:
            pairs.append((sets.anchor[other], cell))
            sets.parent[other] = elder
        sets.parent[cell] = elder
    return pairs


def _total_order(flat):
    order = np.argsort(flat, kind="stable")
    rank = np.empty(len(flat), dtype=np.int64)
    rank[order] = np.arange(len(flat))
    return order.tolist(), rank.tolist()


def sublevel_ph_1d(f) -> PersistenceDiagram:
    """H0 diagram of the sublevel filtration of a sampled 1D function."""
    f = _finite_array(f, 1)
    n = f.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    vals = f.tolist()
    order, rank = _total_order(f)

    def neighbors(i):
        if i > 0:
            yield i - 1
        if i < n - 1:
            yield i + 1

    pairs = _elder_sweep(vals, order, neighbors, lambda c: -rank[c])
    points = [(vals[b], vals[d]) for b, d in pairs]
    points.append((vals[order[0]], vals[order[-1]]))
    return PersistenceDiagram(0, points)


def _h0_2d(vals, shape, order, rank):
    rows, cols = shape

    def neighbors(c):
        i, j = divmod(c, cols)
        for di in (-1, 0, 1):
            ii = i + di
            if 0 <= ii < rows:
                for dj in (-1, 0, 1):
                    jj = j + dj
                    if (di or dj) and 0 <= jj < cols:
                        yield ii * cols + jj

    pairs = _elder_sweep(vals, order, neighbors, lambda c: -rank[c])
    points = [(vals[b], vals[d]) for b, d in pairs]
    points.append((vals[order[0]], vals[order[-1]]))
    return PersistenceDiagram(0, points)


def _h1_2d(vals, shape, order, rank):
    rows, cols = shape
    outside = rows * cols

    def neighbors(c):
        i, j = divmod(c, cols)
        if i > 0:
            yield c - cols
        if i < rows - 1:
            yield c + cols
        if j > 0:
            yield c - 1
        if j < cols - 1:
            yield c + 1

    def border(c):
        i, j = divmod(c, cols)
        if i == 0 or j == 0 or i == rows - 1 or j == cols - 1:
            yield outside

    # Superlevel sweep: later in the sublevel order means older.
    key = lambda c: float("inf") if c == outside else rank[c]  # noqa: E731
    pairs = _elder_sweep(vals, order[::-1], neighbors, key, border)
    return PersistenceDiagram(1, [(vals[saddle], vals[peak]) for peak, saddle in pairs])


def sublevel_ph_2d(f, method: str = "union_find") -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """(H0, H1) diagrams of the cubical sublevel filtration of a 2D array."""
    f = _finite_array(f, 2)
    if f.shape[0] < 2 or f.shape[1] < 2:
        raise ValueError(f"2D persistence needs at least a 2x2 field, got {f.shape}")
    if method == "reduction":
        return cubical_persistence_reduction(f)
    if method != "union_find":
        raise ValueError(f"unknown method {method!r}")
    flat = f.ravel()
    vals = flat.tolist()
    order, rank = _total_order(flat)
    return _h0_2d(vals, f.shape, order, rank), _h1_2d(vals, f.shape, order, rank)


def _cubical_complex(f):
    """Cells of the T-construction: dims, filtration values and boundaries."""
    n, m = f.shape
    big = np.full((n + 2, m + 2), np.inf)
    big[1:-1, 1:-1] = f
    # vertex (a, b) touches pixels (a-1..a, b-1..b)
    vert = np.minimum.reduce([big[:-1, :-1], big[:-1, 1:], big[1:, :-1], big[1:, 1:]])
    # horizontal edge (a, b): vertices (a, b)-(a, b+1); pixels (a-1, b), (a, b)
    hedge = np.minimum(big[:-1, 1:-1], big[1:, 1:-1])
    # vertical edge (a, b): vertices (a, b)-(a+1, b); pixels (a, b-1), (a, b)
    vedge = np.minimum(big[1:-1, :-1], big[1:-1, 1:])

    nv = (n + 1) * (m + 1)
    nh = (n + 1) * m
    nve = n * (m + 1)
    vid = lambda a, b: a * (m + 1) + b  # noqa: E731
    hid = lambda a, b: nv + a * m + b  # noqa: E731
    veid = lambda a, b: nv + nh + a * (m + 1) + b  # noqa: E731
    pid = lambda a, b: nv + nh + nve + a * m + b  # noqa: E731

    values = np.concatenate([vert.ravel(), hedge.ravel(), vedge.ravel(), f.ravel()])
    dims = np.concatenate([np.zeros(nv, int), np.ones(nh + nve, int), np.full(n * m, 2)])
    boundary = [()] * nv
    boundary += [(vid(a, b), vid(a, b + 1)) for a in range(n + 1) for b in range(m)]
    boundary += [(vid(a, b), vid(a + 1, b)) for a in range(n) for b in range(m + 1)]
    boundary += [
        (hid(a, b), hid(a + 1, b), veid(a, b), veid(a, b + 1)) for a in range(n) for b in range(m)
    ]
    assert len(boundary) == len(values) and pid(n - 1, m - 1) == len(values) - 1
    return values, dims, boundary


def cubical_persistence_reduction(f) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """(H0, H1) diagrams by Z/2 column reduction with clearing."""
    f = _finite_array(f, 2)
    values, dims, boundary = _cubical_complex(f)
    # faces precede cofaces at equal value; remaining ties by cell index
    order = np.lexsort((np.arange(len(values)), dims, values))
    pos = np.empty(len(values), dtype=np.int64)
    pos[order] = np.arange(len(values))
    pos = pos.tolist()
    cells = order.tolist()

    pivot_col: dict[int, set] = {}
    low_of: dict[int, int] = {}
    cleared = set()
    for dim in (2, 1):
        for j, cell in enumerate(cells):
            if dims[cell] != dim or j in cleared:
                continue
            col = {pos[face] for face in boundary[cell]}
            while col:
                low = max(col)
                other = pivot_col.get(low)
                if other is None:
                    pivot_col[low] = col
                    low_of[j] = low
                    cleared.add(low)
                    break
                col ^= other

    pts = {0: [], 1: []}
    for j, low in low_of.items():
        birth, death = values[cells[low]], values[cells[j]]
        if death > birth:
            pts[int(dims[cells[low]])].append((birth, death))
    pts[0].append((float(f.min()), float(f.max())))
    return PersistenceDiagram(0, pts[0]), PersistenceDiagram(1, pts[1])


def filter_diagram(diagram: PersistenceDiagram, min_persistence: float) -> PersistenceDiagram:
    """Keep points whose persistence strictly exceeds ``min_persistence``."""
    if min_persistence < 0:
        raise ValueError("min_persistence must be non-negative")
    keep = diagram.persistence > min_persistence
    return PersistenceDiagram(diagram.dim, diagram.points[keep], diagram.essential_convention)


# --- CSV ---------------------------------------------------------------------------


def diagrams_to_csv(diagrams) -> str:
    buf = io.StringIO()
    buf.write("# schema=regimetda-diagram/1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "birth", "death"])
    for d in diagrams:
        for b, e in d.points:
            w.writerow([d.dim, repr(float(b)), repr(float(e))])
    return buf.getvalue()


def diagrams_from_csv(text: str) -> dict[int, PersistenceDiagram]:
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames != ["dim", "birth", "death"]:
        raise ValueError(f"unexpected diagram columns {reader.fieldnames}")
    pts: dict[int, list] = {}
    for row in reader:
        pts.setdefault(int(row["dim"]), []).append((float(row["birth"]), float(row["death"])))
    return {dim: PersistenceDiagram(dim, p) for dim, p in sorted(pts.items())}
