"""Finitely supported vector sequences and Luxemburg-type norms.

A ``VecSeq`` holds finitely many nonzero vectors of a fixed dimension at
strictly increasing positive integer indices.  Given an even map m that
is nondecreasing along rays, the modular of a sequence at scale rho is

    modular(s, rho) = sum_i m(v_i / rho)

and the Luxemburg norm is the smallest rho with modular(s, rho) <= 1.
The norm is computed by a vectorized geometric bracket (doubling and
halving, capped at 2**64 in either direction) followed by bisection in
log scale to a relative width of 1e-12; batches of sequences are solved
simultaneously.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError
from .scalarfn import OrliczFn

__all__ = [
    "VecSeq",
    "modular",
    "luxemburg_norm",
    "luxemburg_norm_batch",
    "membership_margin",
]


@dataclass(frozen=True)
class VecSeq:
    """Finitely many nonzero vectors at increasing positive indices."""

    dim: int
    indices: tuple
    vectors: np.ndarray = field(repr=False)   # (k, dim), read-only

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape != (len(self.indices), self.dim):
            raise ValueError("vectors must have shape (len(indices), dim)")
        if not np.all(np.isfinite(v)):
            raise ValueError("vector entries must be finite")
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise ValueError("indices must be positive integers")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        keep = np.any(v != 0.0, axis=1)
        idx = tuple(i for i, k in zip(idx, keep) if k)
        v = np.ascontiguousarray(v[keep])
        v.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "vectors", v)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_entries(cls, dim: int, entries) -> "VecSeq":
        """Build from (index, vector) pairs in any order."""
        pairs = sorted((int(i), np.asarray(v, dtype=float).reshape(-1))
                       for i, v in entries)
        idx = tuple(i for i, _ in pairs)
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate indices")
        vecs = (np.array([v for _, v in pairs], dtype=float)
                if pairs else np.zeros((0, dim)))
        return cls(dim=dim, indices=idx, vectors=vecs.reshape(len(idx), dim))

    @classmethod
    def from_values(cls, values, start: int = 1) -> "VecSeq":
        """Scalar convenience: values v_i at indices start, start+1, ..."""
        vals = np.asarray(values, dtype=float).reshape(-1)
        idx = tuple(range(start, start + vals.size))
        return cls(dim=1, indices=idx, vectors=vals[:, None])

    @classmethod
    def from_json(cls, text: str) -> "VecSeq":
        doc = json.loads(text)
        if not isinstance(doc, dict) or "dim" not in doc or "entries" not in doc:
            raise ValueError('sequence JSON must be {"dim": d, "entries": [...]}')
        dim = int(doc["dim"])
        entries = []
        for item in doc["entries"]:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                raise ValueError("each entry must be [index, vector]")
            i, v = item
            v = [v] if isinstance(v, (int, float)) else list(v)
            if len(v) != dim:
                raise ValueError(f"entry at index {i} has wrong dimension")
            entries.append((i, v))
        return cls.from_entries(dim, entries)

    def to_json(self) -> str:
        return json.dumps({
            "dim": self.dim,
            "entries": [[i, [float(x) for x in v]]
                        for i, v in zip(self.indices, self.vectors)],
        }, sort_keys=True)

    # -- structure ---------------------------------------------------------

    @property
    def n_terms(self) -> int:
        return len(self.indices)

    @property
    def support(self) -> tuple:
        return self.indices

    def is_zero(self) -> bool:
        return self.n_terms == 0

    def sup_row_norm(self) -> float:
        if self.is_zero():
            return 0.0
        return float(np.linalg.norm(self.vectors, axis=1).max())

    # -- linear operations -------------------------------------------------

    def scaled(self, c: float) -> "VecSeq":
        return VecSeq(self.dim, self.indices, self.vectors * float(c))

    def _merge(self, other: "VecSeq", sign: float) -> "VecSeq":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        idx = sorted(set(self.indices) | set(other.indices))
        pos = {i: r for r, i in enumerate(idx)}
        out = np.zeros((len(idx), self.dim))
        for i, v in zip(self.indices, self.vectors):
            out[pos[i]] += v
        for i, v in zip(other.indices, other.vectors):
            out[pos[i]] += sign * v
        return VecSeq(self.dim, tuple(idx), out)

    def add(self, other: "VecSeq") -> "VecSeq":
        return self._merge(other, 1.0)

    def sub(self, other: "VecSeq") -> "VecSeq":
        return self._merge(other, -1.0)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# modulars and norms


def _eval_rows(m, rows: np.ndarray) -> np.ndarray:
    """Apply the map to vectors along the trailing axis."""
    if isinstance(m, OrliczFn):
        if rows.shape[-1] != 1:
            raise ValueError("a scalar Orlicz function needs dim-1 sequences")
        return m.value(rows[..., 0])
    return m.evaluate(rows)


def _map_dim(m) -> int:
    return 1 if isinstance(m, OrliczFn) else int(m.dim)


def _check_monotone(m) -> None:
    """Norms require the modular to be nondecreasing along rays."""
    if isinstance(m, OrliczFn):
        return
    if not getattr(m, "radially_monotone", False):
        raise ValueError(
            "luxemburg norm needs a radially monotone map; "
            f"{getattr(m, 'label', type(m).__name__)!r} is not flagged as one")


def modular(m, s: VecSeq, rho: float = 1.0) -> float:
    """sum_i m(v_i / rho)."""
    if not rho > 0:
        raise ValueError("scale rho must be positive")
    if s.dim != _map_dim(m):
        raise ValueError("sequence dimension does not match the map")
    if s.is_zero():
        return 0.0
    return float(_eval_rows(m, s.vectors / rho).sum())


def membership_margin(m, s: VecSeq, rho: float = 1.0) -> float:
    """1 - modular(s, rho): positive inside the modular unit ball."""
    return 1.0 - modular(m, s, rho)


def _bracket_bisect(modular_fn, start: np.ndarray, target: float = 1.0,
                    rel_tol: float = 1e-12, max_pow: int = 64) -> np.ndarray:
    """Solve modular_fn(rho, rows) = target per row, rho in start * 2**[-64, 64].

    modular_fn(rho, rows) returns the modular of the selected rows at the
    matching scales and must be nonincreasing in rho.  Rows leave the
    active set as soon as they bracket or converge, so late iterations
    touch only the stragglers.
    """
    hi = np.array(start, dtype=float)
    all_rows = np.arange(hi.size)
    first = modular_fn(hi, all_rows)
    exact = first == target      # the guess solves the equation outright
    rows = all_rows[first > target]
    doublings = 0
    while rows.size:
        if doublings >= max_pow:
            raise BracketError(
                "no scale with modular <= 1 within 2**64 of the starting guess")
        hi[rows] *= 2.0
        doublings += 1
        rows = rows[modular_fn(hi[rows], rows) > target]
    lo = hi.copy()
    rows = all_rows[~exact]
    halvings = 0
    while True:
        rows = rows[modular_fn(lo[rows], rows) <= target]
        if rows.size == 0:
            break
        if halvings >= max_pow:
            raise BracketError(
                "no scale with modular > 1 within 2**-64 of the starting guess")
        lo[rows] /= 2.0
        halvings += 1
    # invariant: modular(lo) > target >= modular(hi); bisect in log scale
    rows = all_rows[~exact]
    while True:
        rows = rows[hi[rows] / lo[rows] - 1.0 > rel_tol]
        if rows.size == 0:
            break
        mid = np.sqrt(lo[rows] * hi[rows])
        val = modular_fn(mid, rows)
        hit = val == target
        lo[rows[hit]] = mid[hit]
        hi[rows[hit]] = mid[hit]
        above = ~hit & (val > target)
        below = ~hit & ~above
        lo[rows[above]] = mid[above]
        hi[rows[below]] = mid[below]
    return np.sqrt(lo * hi)


def luxemburg_norm_batch(m, vectors: np.ndarray) -> np.ndarray:
    """Luxemburg norms of a dense batch, shape (B, k, dim) -> (B,).

    Rows of zeros are inert padding (the map sends 0 to 0), so ragged
    collections can be padded to a common length.
    """
    _check_monotone(m)
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 3 or vectors.shape[-1] != _map_dim(m):
        raise ValueError("batch must have shape (B, k, dim) matching the map")
    out = np.zeros(vectors.shape[0])
    row_sup = (np.linalg.norm(vectors, axis=-1).max(axis=-1)
               if vectors.shape[1] else out)
    live = row_sup > 0.0
    if not live.any():
        return out
    work = vectors[live]

    def modular_fn(rho: np.ndarray, rows: np.ndarray) -> np.ndarray:
        return _eval_rows(m, work[rows] / rho[:, None, None]).sum(axis=-1)

    out[live] = _bracket_bisect(modular_fn, row_sup[live])
    return out


def luxemburg_norm(m, s: VecSeq) -> float:
    """Smallest rho > 0 with modular(s, rho) <= 1 (0 for the zero sequence)."""
    if s.dim != _map_dim(m):
        raise ValueError("sequence dimension does not match the map")
    if s.is_zero():
        return 0.0
    return float(luxemburg_norm_batch(m, s.vectors[None, :, :])[0])
