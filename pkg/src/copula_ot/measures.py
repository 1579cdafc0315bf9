"""Finitely supported probability measures on the line and on R^n.

Measures are immutable: atoms are canonicalized (sorted, duplicates merged by
exact float equality, zero weights dropped) and weights are normalized to unit
mass at construction time.  Weight accumulation goes through ``math.fsum`` so
that two constructions whose real-arithmetic weights agree produce identical
floats whenever the inputs are exactly representable.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Unit-mass slack per stored atom; constructors normalize so anything larger
# than accumulated rounding indicates a bug in the caller.
MASS_TOL = 1e-12


def _as_finite_array(values, what: str, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{what}: expected a {ndim}-dimensional array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{what}: empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: values must be finite")
    return arr


def merge_weighted_rows(rows: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group exactly-equal rows, fsum their weights, drop zero-weight groups.

    Rows come back sorted lexicographically by coordinate.  Shared by measure
    and transport-plan canonicalization.
    """
    order = np.lexsort(rows.T[::-1])
    rows = rows[order]
    weights = weights[order]
    new_group = np.ones(len(rows), dtype=bool)
    new_group[1:] = np.any(rows[1:] != rows[:-1], axis=1)
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:], len(rows))
    out_rows = []
    out_weights = []
    for s, e in zip(starts, ends):
        w = float(weights[s]) if e - s == 1 else math.fsum(weights[s:e])
        if w != 0.0:
            out_rows.append(rows[s])
            out_weights.append(w)
    if not out_rows:
        raise ValueError("all weights merged to zero")
    return np.array(out_rows), np.array(out_weights)


@dataclass(frozen=True)
class DiscreteMeasure1D:
    """Probability measure with finitely many atoms on R.

    ``atoms`` is strictly increasing, every weight is positive, and the
    weights sum to one (the last cumulative weight is pinned to exactly 1.0).
    Build instances through :func:`make_measure_1d`.
    """

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    @cached_property
    def cum_weights(self) -> tuple[float, ...]:
        acc = np.cumsum(self.weights)
        acc[-1] = 1.0
        return tuple(float(v) for v in acc)

    @cached_property
    def _atoms_arr(self) -> np.ndarray:
        arr = np.array(self.atoms)
        arr.flags.writeable = False
        return arr

    @cached_property
    def _cum_arr(self) -> np.ndarray:
        arr = np.array(self.cum_weights)
        arr.flags.writeable = False
        return arr

    def __len__(self) -> int:
        return len(self.atoms)

    def cdf(self, x: float) -> float:
        """Total weight of atoms <= x (right continuous)."""
        if not math.isfinite(x):
            raise ValueError("cdf: point must be finite")
        idx = bisect.bisect_right(self.atoms, x)
        return 0.0 if idx == 0 else self.cum_weights[idx - 1]

    def quantile(self, u: float) -> float:
        """Generalized inverse: the smallest atom whose CDF reaches u.

        Defined for u in (0, 1]; nondecreasing and left continuous in u.
        """
        if not 0.0 < u <= 1.0:
            raise ValueError(f"quantile: u must lie in (0, 1], got {u!r}")
        return self.atoms[bisect.bisect_left(self.cum_weights, u)]

    def quantile_array(self, us: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`quantile` for u values already known to be in (0, 1]."""
        idx = np.searchsorted(self._cum_arr, us, side="left")
        # cum_weights ends at exactly 1.0, but guard against float dust above it
        idx = np.minimum(idx, len(self.atoms) - 1)
        return self._atoms_arr[idx]

    def to_multivariate(self) -> "MultivariateMeasure":
        return MultivariateMeasure(
            dimension=1,
            atoms=tuple((a,) for a in self.atoms),
            weights=self.weights,
        )


def make_measure_1d(atoms: Iterable[float], weights: Iterable[float]) -> DiscreteMeasure1D:
    """Canonicalize (sort, merge exact duplicates, drop zeros) and normalize."""
    a = _as_finite_array(atoms, "atoms", ndim=1)
    w = _as_finite_array(weights, "weights", ndim=1)
    if a.shape != w.shape:
        raise ValueError(f"atoms and weights differ in length: {a.shape[0]} vs {w.shape[0]}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0.0:
        raise ValueError("weights must have positive total mass")
    rows, merged = merge_weighted_rows(a.reshape(-1, 1), w)
    return DiscreteMeasure1D(
        atoms=tuple(float(x) for x in rows[:, 0]),
        weights=tuple(float(v) / total for v in merged),
    )


@dataclass(frozen=True)
class MultivariateMeasure:
    """Probability measure with finitely many atoms on R^n.

    Atom tuples are lexicographically sorted and pairwise distinct; weights are
    positive with unit total.  Coordinates are indexed 1..n in the public API.
    """

    dimension: int
    atoms: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    @cached_property
    def atom_array(self) -> np.ndarray:
        arr = np.array(self.atoms, dtype=float).reshape(len(self.atoms), self.dimension)
        arr.flags.writeable = False
        return arr

    @cached_property
    def weight_array(self) -> np.ndarray:
        arr = np.array(self.weights)
        arr.flags.writeable = False
        return arr

    def __len__(self) -> int:
        return len(self.atoms)

    def marginal(self, coord: int) -> DiscreteMeasure1D:
        """One-dimensional marginal of coordinate ``coord`` (1-based)."""
        if not 1 <= coord <= self.dimension:
            raise ValueError(f"marginal: coordinate {coord} out of range 1..{self.dimension}")
        return make_measure_1d(self.atom_array[:, coord - 1], self.weights)

    def map_coordinates(self, maps: Sequence[tuple[float, float]]) -> "MultivariateMeasure":
        """Apply x_i -> a_i * x_i + b_i per coordinate; a_i must be positive."""
        if len(maps) != self.dimension:
            raise ValueError(f"map_coordinates: expected {self.dimension} maps, got {len(maps)}")
        scale = np.array([m[0] for m in maps], dtype=float)
        shift = np.array([m[1] for m in maps], dtype=float)
        if not (np.all(np.isfinite(scale)) and np.all(np.isfinite(shift))):
            raise ValueError("map_coordinates: coefficients must be finite")
        if np.any(scale <= 0):
            raise ValueError("map_coordinates: scale factors must be positive")
        return make_measure(self.atom_array * scale + shift, self.weight_array)

    def as_1d(self) -> DiscreteMeasure1D:
        if self.dimension != 1:
            raise ValueError(f"as_1d: measure has dimension {self.dimension}")
        return DiscreteMeasure1D(
            atoms=tuple(a[0] for a in self.atoms),
            weights=self.weights,
        )


def make_measure(atoms, weights) -> MultivariateMeasure:
    """Canonicalize atom rows (exact-equality merge) and normalize weights."""
    a = np.asarray(atoms, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    a = _as_finite_array(a, "atoms", ndim=2)
    w = _as_finite_array(weights, "weights", ndim=1)
    if a.shape[0] != w.shape[0]:
        raise ValueError(f"atoms and weights differ in length: {a.shape[0]} vs {w.shape[0]}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0.0:
        raise ValueError("weights must have positive total mass")
    rows, merged = merge_weighted_rows(a, w)
    return MultivariateMeasure(
        dimension=a.shape[1],
        atoms=tuple(tuple(float(x) for x in row) for row in rows),
        weights=tuple(float(v) / total for v in merged),
    )


def measures_close(
    left: MultivariateMeasure | DiscreteMeasure1D,
    right: MultivariateMeasure | DiscreteMeasure1D,
    weight_tol: float,
) -> bool:
    """Same atom set exactly, weights within ``weight_tol`` per atom."""
    if isinstance(left, DiscreteMeasure1D):
        left = left.to_multivariate()
    if isinstance(right, DiscreteMeasure1D):
        right = right.to_multivariate()
    if left.dimension != right.dimension or left.atoms != right.atoms:
        return False
    return max(abs(a - b) for a, b in zip(left.weights, right.weights)) <= weight_tol


def measure_to_dict(measure: MultivariateMeasure | DiscreteMeasure1D) -> dict:
    """JSON-ready form: {"atoms": [[...], ...], "weights": [...]}."""
    if isinstance(measure, DiscreteMeasure1D):
        measure = measure.to_multivariate()
    return {
        "atoms": [list(a) for a in measure.atoms],
        "weights": list(measure.weights),
    }


def measure_from_dict(obj: dict) -> MultivariateMeasure:
    if not isinstance(obj, dict):
        raise ValueError("measure: expected a JSON object")
    missing = {"atoms", "weights"} - obj.keys()
    if missing:
        raise ValueError(f"measure: missing fields {sorted(missing)}")
    atoms = obj["atoms"]
    if not isinstance(atoms, list) or not atoms or not all(isinstance(row, list) for row in atoms):
        raise ValueError("measure: atoms must be a nonempty list of coordinate lists")
    widths = {len(row) for row in atoms}
    if len(widths) != 1:
        raise ValueError("measure: atom rows have inconsistent dimensions")
    return make_measure(atoms, obj["weights"])
