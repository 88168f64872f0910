"""Discrepancies between spectral estimates and between persistence diagrams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spectral import Spectrogram, Spectrum
from .tda import PersistenceDiagram

FUNCTION_KINDS = ("L1_fn", "L2_fn", "W1_fn")
_ALIASES = {"L1": "L1_fn", "L2": "L2_fn", "W1": "W1_fn", "W": "W1_fn"}


@dataclass(frozen=True)
class MetricKind:
    """Which discrepancy to compute.

    ``dim`` is the homology dimension for ``W2_diagram``.  ``mass_normalized``
    labels the earth mover's distance, which compares unit-mass spectra.
    ``filter_fraction`` is the diagram denoising threshold as a fraction of
    each field's value range.
    """

    kind: str
    dim: Optional[int] = None
    filter_fraction: float = 0.01

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS + ("W2_diagram",):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "W2_diagram":
            if self.dim not in (0, 1):
                raise ValueError("W2_diagram needs homology dimension 0 or 1")
        elif self.dim is not None:
            raise ValueError(f"{self.kind} takes no homology dimension")
        if self.filter_fraction < 0:
            raise ValueError("filter_fraction must be non-negative")

    @property
    def mass_normalized(self) -> bool:
        return self.kind == "W1_fn"

    @property
    def is_diagram(self) -> bool:
        return self.kind == "W2_diagram"

    @property
    def name(self) -> str:
        return f"W2_diagram:H{self.dim}" if self.is_diagram else self.kind

    @classmethod
    def parse(cls, text: str, filter_fraction: float = 0.01) -> "MetricKind":
        """Parse ``L1``, ``L2_fn``, ``W1_fn``, ``W2_diagram:H0`` and similar."""
        token = text.strip()
        if token.startswith("W2_diagram"):
            _, _, dim = token.partition(":")
            dim = dim.strip().upper().lstrip("H")
            if dim not in ("0", "1"):
                raise ValueError(f"bad diagram metric {text!r}; use W2_diagram:H0 or W2_diagram:H1")
            return cls("W2_diagram", int(dim), filter_fraction)
        return cls(_ALIASES.get(token, token), None, filter_fraction)

    def __str__(self) -> str:
        return self.name


def _grid_pair(a, b):
    if isinstance(a, Spectrum) and isinstance(b, Spectrum):
        if not a.same_grid(b):
            raise ValueError("spectra live on different frequency grids")
        return a.power, b.power, a.df
    if isinstance(a, Spectrogram) and isinstance(b, Spectrogram):
        if not a.same_grid(b):
            raise ValueError("spectrograms live on different grids")
        return a.power, b.power, a.dt * a.df
    raise TypeError(f"cannot compare {type(a).__name__} with {type(b).__name__}")


def fn_distance(a, b, p: int = 1) -> float:
    """``(Σ |a - b|**p Δ)**(1/p)`` with ``Δ`` the grid cell measure."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    x, y, cell = _grid_pair(a, b)
    diff = np.abs(x - y)
    if p == 1:
        return float(np.sum(diff) * cell)
    return float(math.sqrt(np.sum(diff * diff) * cell))


def emd_1d(a: Spectrum, b: Spectrum) -> float:
    """Earth mover's distance between two spectra rescaled to unit mass.

    On a line the optimal transport cost is the L1 distance between the
    cumulative distributions.
    """
    x, y, df = _grid_pair(a, b)
    if not isinstance(a, Spectrum):
        raise TypeError("emd_1d compares spectra")
    mx, my = x.sum(), y.sum()
    if not (mx > 0 and my > 0):
        raise ValueError("earth mover's distance needs spectra with positive mass")
    cdf_gap = np.cumsum(x / mx) - np.cumsum(y / my)
    return float(np.sum(np.abs(cdf_gap)) * df)


def _diagonal_cost(points, p):
    return ((points[:, 1] - points[:, 0]) / math.sqrt(2.0)) ** p


def wasserstein_diagrams(d1: PersistenceDiagram, d2: PersistenceDiagram, p: float = 2.0) -> float:
    """p-Wasserstein distance with Euclidean ground metric and diagonal matching.

    Solved exactly as an (n+m) x (n+m) assignment problem: each point is
    matched either to a point of the other diagram or to its own diagonal
    projection; diagonal slots match each other for free.
    """
    if d1.dim != d2.dim:
        raise ValueError(f"cannot compare H{d1.dim} with H{d2.dim} diagrams")
    a, b = d1.sorted_points(), d2.sorted_points()
    # canonical argument order makes the result exactly symmetric
    if (len(a), a.tobytes()) > (len(b), b.tobytes()):
        a, b = b, a
    n, m = len(a), len(b)
    if n + m == 0:
        return 0.0
    cost = np.zeros((n + m, n + m))
    if n and m:
        gap = a[:, None, :] - b[None, :, :]
        cost[:n, :m] = np.sqrt(np.sum(gap * gap, axis=2)) ** p
    cost[:n, m:] = np.inf
    cost[n:, :m] = np.inf
    if n:
        cost[np.arange(n), m + np.arange(n)] = _diagonal_cost(a, p)
    if m:
        cost[n + np.arange(m), np.arange(m)] = _diagonal_cost(b, p)
    rows, cols = linear_sum_assignment(cost)
    return math.fsum(cost[rows, cols].tolist()) ** (1.0 / p)
