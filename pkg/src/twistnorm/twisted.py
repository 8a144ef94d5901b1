"""Twisted sums of Orlicz sequence spaces.

Given a certified Orlicz function f and a Lipschitz theta, the map

    F(y)_n = y_n * theta(log(||y||_f / |y_n|))        (0 where y_n = 0)

is quasi-linear, and pairs (x, y) of finitely supported scalar
sequences carry the quasi-norm ||(x, y)|| = ||y||_f + ||x - F(y)||_f.
This module builds the ambient ``TwistedSpace`` (the two-variable
twisted map Phi and its grid convex envelope Psi), evaluates F, the
quasi-norm and the scale family S(k), and runs the seeded empirical
certificates: the quasi-linearity constant of F, the quasi-triangle
constant of the norm, and the equivalence of the quasi-norm with the
Luxemburg norm of Psi on interleaved pairs (with automatic enlargement
of the envelope box until every sampled argument is interpolated, not
extrapolated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericSignal
from .scalarfn import DEFAULT_PLAN, OrliczFn, certify
from .seqspace import VecSeq, luxemburg_norm, luxemburg_norm_batch
from .youngmap import (EnvelopeGrid, GridMap, LipschitzTheta, YoungMap,
                       convex_envelope, identity_theta, kalton_peck_map,
                       soft_clip_theta)

__all__ = [
    "TwistedSpace",
    "build_space",
    "from_preset",
    "PairSeq",
    "kp_F",
    "twisted_norm",
    "twisted_norm_batch",
    "s_functional",
    "QuasiLinearityResult",
    "quasi_linearity_constant",
    "quasi_triangle_constant",
    "equivalence_certificate",
]


# --------------------------------------------------------------------------
# the ambient space


@dataclass(frozen=True)
class TwistedSpace:
    """A certified Orlicz function, a theta, their twisted map and envelope."""

    f: OrliczFn
    theta: LipschitzTheta
    phi_kp: YoungMap = field(repr=False)
    psi: EnvelopeGrid | None = field(default=None, repr=False)
    resolution: int = 41
    label: str = ""

    @property
    def psi_map(self) -> GridMap:
        if self.psi is None:
            raise ValueError(
                f"space {self.label!r} was built without its convex envelope")
        return self.psi.envelope_map()

    @property
    def box_halfwidth(self) -> float:
        if self.psi is None:
            raise ValueError("no envelope, no box")
        return float(self.psi.axes[0][-1])

    def with_box(self, halfwidth: float) -> "TwistedSpace":
        """Recompute the envelope on a larger box at the same resolution."""
        psi = convex_envelope(self.phi_kp, halfwidth, self.resolution)
        return replace(self, psi=psi)


def build_space(f: OrliczFn, theta: LipschitzTheta, halfwidth: float = 2.0,
                resolution: int = 41, with_envelope: bool = True,
                plan=DEFAULT_PLAN, label: str = "") -> TwistedSpace:
    """Certify f if needed, build the twisted map, optionally its envelope."""
    if f.constants is None:
        f = certify(f, f.p, plan)
    phi = kalton_peck_map(f, theta)
    psi = convex_envelope(phi, halfwidth, resolution) if with_envelope else None
    return TwistedSpace(f=f, theta=theta, phi_kp=phi, psi=psi,
                        resolution=resolution,
                        label=label or f"twisted({f.describe()}, {theta.describe()})")


def from_preset(name: str, halfwidth: float = 2.0, resolution: int = 41,
                with_envelope: bool = True, plan=DEFAULT_PLAN) -> TwistedSpace:
    """Named spaces: z2 | zp:<p> | kp-softclip:<p>,<b>."""
    from .scalarfn import power
    name = name.strip()
    if name == "z2":
        return build_space(power(2.0), identity_theta(), halfwidth,
                           resolution, with_envelope, plan, label="z2")
    if name.startswith("zp:"):
        try:
            p = float(name[3:])
        except ValueError:
            raise ValueError(f"bad preset {name!r}: zp:<p> needs a number")
        return build_space(power(p), identity_theta(), halfwidth,
                           resolution, with_envelope, plan, label=name)
    if name.startswith("kp-softclip:"):
        parts = name[len("kp-softclip:"):].split(",")
        if len(parts) != 2:
            raise ValueError(
                f"bad preset {name!r}: kp-softclip:<p>,<b> needs two numbers")
        try:
            p, b = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"bad preset {name!r}: non-numeric parameters")
        return build_space(power(p), soft_clip_theta(b), halfwidth,
                           resolution, with_envelope, plan, label=name)
    raise ValueError(f"unknown preset {name!r}; "
                     "expected z2, zp:<p> or kp-softclip:<p>,<b>")


# --------------------------------------------------------------------------
# pairs of sequences


@dataclass(frozen=True)
class PairSeq:
    """Two scalar sequences (x, y) on a shared increasing index set."""

    indices: tuple
    xv: np.ndarray = field(repr=False)   # (k,)
    yv: np.ndarray = field(repr=False)   # (k,)

    def __post_init__(self):
        x = np.asarray(self.xv, dtype=float).reshape(-1)
        y = np.asarray(self.yv, dtype=float).reshape(-1)
        idx = tuple(int(i) for i in self.indices)
        if x.size != len(idx) or y.size != len(idx):
            raise ValueError("indices, xv and yv must have equal lengths")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("entries must be finite")
        if any(i < 1 for i in idx):
            raise ValueError("indices must be positive integers")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        keep = (x != 0.0) | (y != 0.0)
        idx = tuple(i for i, k in zip(idx, keep) if k)
        x = np.ascontiguousarray(x[keep])
        y = np.ascontiguousarray(y[keep])
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "xv", x)
        object.__setattr__(self, "yv", y)

    @classmethod
    def from_xy(cls, x: VecSeq, y: VecSeq) -> "PairSeq":
        if x.dim != 1 or y.dim != 1:
            raise ValueError("pairs are built from two scalar sequences")
        idx = sorted(set(x.indices) | set(y.indices))
        pos = {i: r for r, i in enumerate(idx)}
        xv = np.zeros(len(idx))
        yv = np.zeros(len(idx))
        for i, v in zip(x.indices, x.vectors):
            xv[pos[i]] = v[0]
        for i, v in zip(y.indices, y.vectors):
            yv[pos[i]] = v[0]
        return cls(tuple(idx), xv, yv)

    @classmethod
    def from_json(cls, text: str) -> "PairSeq":
        v = VecSeq.from_json(text)
        if v.dim != 2:
            raise ValueError("a pair file is a dim-2 sequence of (x, y) entries")
        return cls(v.indices, v.vectors[:, 0].copy(), v.vectors[:, 1].copy())

    def to_json(self) -> str:
        return self.as_vec2().to_json()

    def as_vec2(self) -> VecSeq:
        return VecSeq(2, self.indices,
                      np.stack([self.xv, self.yv], axis=-1))

    @property
    def x_seq(self) -> VecSeq:
        return VecSeq(1, self.indices, np.array(self.xv)[:, None])

    @property
    def y_seq(self) -> VecSeq:
        return VecSeq(1, self.indices, np.array(self.yv)[:, None])

    @property
    def n_terms(self) -> int:
        return len(self.indices)

    def is_zero(self) -> bool:
        return self.n_terms == 0

    def scaled(self, c: float) -> "PairSeq":
        return PairSeq(self.indices, self.xv * float(c), self.yv * float(c))

    def add(self, other: "PairSeq") -> "PairSeq":
        merged = self.as_vec2().add(other.as_vec2())
        return PairSeq(merged.indices, merged.vectors[:, 0].copy(),
                       merged.vectors[:, 1].copy())

    def __add__(self, other):
        return self.add(other)

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# the quasi-linear map and the quasi-norm


def _F_dense(space: TwistedSpace, Y: np.ndarray) -> np.ndarray:
    """F applied to dense rows: (B, d) -> (B, d); zero rows stay zero."""
    out = np.zeros_like(Y)
    rho = luxemburg_norm_batch(space.f, Y[..., None])
    live = rho > 0.0
    if not live.any():
        return out
    Yl = Y[live]
    absY = np.abs(Yl)
    nz = absY > 0.0
    arg = np.zeros_like(Yl)
    arg[nz] = np.log((rho[live, None] / np.where(nz, absY, 1.0))[nz])
    vals = np.zeros_like(Yl)
    vals[nz] = Yl[nz] * space.theta.value(arg[nz])
    out[live] = vals
    return out


def kp_F(space: TwistedSpace, y: VecSeq) -> VecSeq:
    """The quasi-linear map: entries y_n * theta(log(||y|| / |y_n|))."""
    if y.dim != 1:
        raise ValueError("F acts on scalar sequences")
    if y.is_zero():
        return VecSeq.from_entries(1, [])
    vals = _F_dense(space, y.vectors[:, 0][None, :])[0]
    return VecSeq(1, y.indices, vals[:, None])


def twisted_norm(space: TwistedSpace, p: PairSeq) -> float:
    """||y|| + ||x - F(y)|| in the Luxemburg norm of the space's function."""
    if p.is_zero():
        return 0.0
    ny = luxemburg_norm(space.f, p.y_seq)
    diff = p.x_seq.sub(kp_F(space, p.y_seq))
    return ny + luxemburg_norm(space.f, diff)


def twisted_norm_batch(space: TwistedSpace, X: np.ndarray,
                       Y: np.ndarray) -> np.ndarray:
    """Quasi-norms of dense pair rows: (B, d), (B, d) -> (B,)."""
    ny = luxemburg_norm_batch(space.f, Y[..., None])
    diff = X - _F_dense(space, Y)
    return ny + luxemburg_norm_batch(space.f, diff[..., None])


def s_functional(space: TwistedSpace, p: PairSeq, k: float) -> float:
    """S(k) = sum f(y_j) + sum f(x_j - y_j * theta(log(k / |y_j|)))."""
    if not k > 0:
        raise ValueError("the scale k must be positive")
    if p.is_zero():
        return 0.0
    y = np.array(p.yv)
    x = np.array(p.xv)
    ay = np.abs(y)
    shift = np.zeros_like(y)
    nz = ay > 0.0
    shift[nz] = y[nz] * space.theta.value(np.log(k / ay[nz]))
    return float(space.f.value(y).sum() + space.f.value(x - shift).sum())


# --------------------------------------------------------------------------
# seeded random pair law


_CHUNK = 65536


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([int(seed), int(chunk)])))


def _random_rows(rng: np.random.Generator, n: int, dim: int,
                 max_support: int = 8) -> np.ndarray:
    """Dense rows with support of size <= max_support inside {1..dim}.

    Magnitudes are log-uniform in [1e-4, 1e2] with uniform signs.
    """
    k = min(max_support, dim)
    out = np.zeros((n, dim))
    sizes = rng.integers(1, k + 1, size=n)
    order = np.argsort(rng.random((n, dim)), axis=1)
    cols = order[:, :k]
    mask = np.arange(k)[None, :] < sizes[:, None]
    mags = 10.0 ** (-4.0 + 6.0 * rng.random((n, k)))
    signs = np.where(rng.random((n, k)) < 0.5, -1.0, 1.0)
    vals = np.where(mask, signs * mags, 0.0)
    np.put_along_axis(out, cols, vals, axis=1)
    return out


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class QuasiLinearityResult:
    c_hat: float
    witness: dict
    per_dim: dict
    trials: int
    seed: int


def _dims_for(dim_max: int) -> list:
    dims = sorted({d for d in (16, 64, dim_max) if d <= dim_max})
    return dims or [dim_max]


def quasi_linearity_constant(space: TwistedSpace, trials: int, dim_max: int,
                             rng_seed: int) -> QuasiLinearityResult:
    """Empirical sup of ||F(x+y) - F(x) - F(y)|| / (||x|| + ||y||).

    The trial budget is split across ambient dimensions (16, 64, dim_max
    capped at dim_max) so stability across dimension is visible in the
    per-dimension table.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    dims = _dims_for(dim_max)
    per_dim = {}
    best = 0.0
    witness = {}
    share = max(1, trials // len(dims))
    for d_pos, d in enumerate(dims):
        done = 0
        chunk = 0
        top = 0.0
        while done < share:
            n = min(_CHUNK, share - done)
            rng = _chunk_rng(rng_seed, d_pos * 1_000_003 + chunk)
            X = _random_rows(rng, n, d)
            Y = _random_rows(rng, n, d)
            dev = (_F_dense(space, X + Y) - _F_dense(space, X)
                   - _F_dense(space, Y))
            num = luxemburg_norm_batch(space.f, dev[..., None])
            den = (luxemburg_norm_batch(space.f, X[..., None])
                   + luxemburg_norm_batch(space.f, Y[..., None]))
            ok = den > 0.0
            if ok.any():
                r = num[ok] / den[ok]
                i = int(np.argmax(r))
                if r[i] > top:
                    top = float(r[i])
                    if top > best:
                        best = top
                        rows = np.flatnonzero(ok)
                        j = rows[i]
                        witness = {"dim": d,
                                   "x": X[j].tolist(), "y": Y[j].tolist(),
                                   "ratio": top}
            done += n
            chunk += 1
        per_dim[d] = top
    return QuasiLinearityResult(c_hat=best, witness=witness, per_dim=per_dim,
                                trials=trials, seed=rng_seed)


def quasi_triangle_constant(space: TwistedSpace, trials: int, dim_max: int,
                            rng_seed: int) -> dict:
    """Empirical sup of ||p+q|| / (||p|| + ||q||) for the quasi-norm."""
    if trials < 1:
        raise ValueError("trials must be positive")
    dims = _dims_for(dim_max)
    per_dim = {}
    best = 0.0
    share = max(1, trials // len(dims))
    for d_pos, d in enumerate(dims):
        done = 0
        chunk = 0
        top = 0.0
        while done < share:
            n = min(_CHUNK, share - done)
            rng = _chunk_rng(rng_seed, d_pos * 2_000_003 + chunk)
            X1 = _random_rows(rng, n, d)
            Y1 = _random_rows(rng, n, d)
            X2 = _random_rows(rng, n, d)
            Y2 = _random_rows(rng, n, d)
            num = twisted_norm_batch(space, X1 + X2, Y1 + Y2)
            den = (twisted_norm_batch(space, X1, Y1)
                   + twisted_norm_batch(space, X2, Y2))
            ok = den > 0.0
            if ok.any():
                top = max(top, float((num[ok] / den[ok]).max()))
            done += n
            chunk += 1
        per_dim[d] = top
        best = max(best, top)
    return {"Q_hat": best, "per_dim": per_dim, "trials": trials,
            "seed": rng_seed}


def equivalence_certificate(space: TwistedSpace, trials: int, dim_max: int,
                            rng_seed: int) -> dict:
    """Ratio extremes of twisted_norm / Psi-norm with a doubling check.

    Samples seeded random pairs, computes r = quasi-norm / Luxemburg norm
    of the interleaved pair in the envelope map, and reports the extremes
    after ``trials`` samples and again after doubling; each extreme must
    move by less than 5% for the certificate to be stable.  If any
    argument scaled by its Psi-norm escapes the envelope box, the box is
    doubled, the envelope recomputed, and the sampling restarted.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    space.psi_map  # fail early when the envelope is missing
    for _ in range(7):
        psi = space.psi_map
        hw = space.box_halfwidth
        lo1 = hi1 = None          # extremes after `trials`
        lo = hi = None            # running extremes
        contained = True
        done = 0
        chunk = 0
        total = 2 * trials
        while done < total:
            n = min(_CHUNK, total - done)
            rng = _chunk_rng(rng_seed, chunk)
            X = _random_rows(rng, n, dim_max)
            Y = _random_rows(rng, n, dim_max)
            tw = twisted_norm_batch(space, X, Y)
            pairs = np.stack([X, Y], axis=-1)
            pn = luxemburg_norm_batch(psi, pairs)
            live = (tw > 0.0) & (pn > 0.0)
            sup_coord = np.abs(pairs).max(axis=(1, 2))
            if np.any(sup_coord[live] > pn[live] * hw * (1.0 + 1e-12)):
                contained = False
                break
            if live.any():
                r = tw[live] / pn[live]
                lo = float(r.min()) if lo is None else min(lo, float(r.min()))
                hi = float(r.max()) if hi is None else max(hi, float(r.max()))
            done += n
            chunk += 1
            if done >= trials and lo1 is None:
                lo1, hi1 = lo, hi
        if not contained:
            space = space.with_box(2.0 * hw)
            continue
        if lo is None or lo1 is None:
            raise NumericSignal("equivalence sampling produced no usable pair")
        drift = max(abs(lo - lo1) / lo1, abs(hi - hi1) / hi1)
        return {
            "ratio": [lo, hi],
            "ratio_first_half": [lo1, hi1],
            "ratio_min": lo,
            "ratio_max": hi,
            "stability": drift,
            "stable": bool(drift < 0.05
                           and math.isfinite(lo) and math.isfinite(hi)
                           and lo > 0.0),
            "trials": trials,
            "seed": rng_seed,
            "dim_max": dim_max,
            "box_halfwidth": hw,
            "resolution": space.resolution,
        }
    raise NumericSignal(
        "envelope box kept overflowing after 6 doublings; "
        "sampled pairs are too spread for a grid certificate")
