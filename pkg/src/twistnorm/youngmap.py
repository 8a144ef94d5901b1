"""Young-type maps on R^n: construction, envelopes and certificates.

A ``YoungMap`` is an even map m: R^n -> [0, inf) with m(0) = 0, carried
around with declared structural flags (radial monotonicity, convexity,
smoothness off the origin).  The central construction is the twisted
composition

    Phi(x, y) = f(y) + f(x - y * theta(log(1/|y|)))      (y != 0)
    Phi(x, 0) = f(x)

for a certified Orlicz function f and a Lipschitz theta with
theta(0) = 0.  Phi is even and quasi-convex but not convex; this module
certifies the quasi-convexity constant empirically, computes the lower
convex envelope on a centred box by one linear program per grid node,
compares maps up to multiplicative constants, and smooths maps by
averaging over scaled balls.

Grid-backed maps evaluate by multilinear interpolation inside their box
and by positively homogeneous degree-1 ray extension outside it;
callers that need Young-type growth beyond the box are expected to
enlarge and recompute (see the twisted module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import linprog

from .errors import NumericSignal
from .scalarfn import OrliczFn, ScalarConstants

__all__ = [
    "LipschitzTheta",
    "identity_theta",
    "scale_theta",
    "soft_clip_theta",
    "YoungMap",
    "young_from_orlicz",
    "radial_power",
    "kalton_peck_map",
    "kp_theoretical_bound",
    "QuasiconvexityResult",
    "quasiconvexity_constant",
    "GridMap",
    "EnvelopeGrid",
    "convex_envelope",
    "equivalence_constant",
    "MollifyResult",
    "mollify",
]


# --------------------------------------------------------------------------
# Lipschitz reparametrizations of the log scale


@dataclass(frozen=True)
class LipschitzTheta:
    """Odd Lipschitz function with theta(0) = 0 and known constant K."""

    kind: str          # identity | scale | soft_clip
    a: float = 1.0     # scale factor, or the clip bound

    @property
    def K(self) -> float:
        if self.kind == "scale":
            return abs(self.a)
        return 1.0

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return t
        if self.kind == "scale":
            return self.a * t
        if self.kind == "soft_clip":
            return self.a * np.tanh(t / self.a)
        raise ValueError(f"unknown theta kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "identity":
            return "identity"
        return f"{self.kind}({self.a:g})"


def identity_theta() -> LipschitzTheta:
    return LipschitzTheta("identity")


def scale_theta(a: float) -> LipschitzTheta:
    if a == 0:
        raise ValueError("scale factor must be nonzero")
    return LipschitzTheta("scale", float(a))


def soft_clip_theta(b: float) -> LipschitzTheta:
    if not b > 0:
        raise ValueError("clip bound must be positive")
    return LipschitzTheta("soft_clip", float(b))


# --------------------------------------------------------------------------
# maps


def _as_points(pts, dim: int) -> np.ndarray:
    a = np.asarray(pts, dtype=float)
    if dim == 1:
        if a.ndim == 0 or a.shape[-1] != 1:
            a = a[..., None] if a.ndim > 0 else a.reshape(1, 1)
    elif a.ndim == 0 or a.shape[-1] != dim:
        raise ValueError(f"points must have trailing axis of size {dim}")
    return a


@dataclass(frozen=True)
class YoungMap:
    """An even nonnegative map on R^n with declared structure flags."""

    dim: int
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    radially_monotone: bool = False
    convex: bool = False
    smooth_off_origin: bool = False
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False)
    label: str = ""

    def evaluate(self, pts) -> np.ndarray:
        return np.asarray(self.fn(_as_points(pts, self.dim)), dtype=float)

    def __call__(self, pts):
        return self.evaluate(pts)

    def gradient(self, pts, h: float = 1e-6) -> np.ndarray:
        """Gradient, by central differences unless one was supplied."""
        pts = _as_points(pts, self.dim)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(pts), dtype=float)
        out = np.empty(pts.shape, dtype=float)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out[..., i] = (self.fn(pts + e) - self.fn(pts - e)) / (2.0 * h)
        return out


def young_from_orlicz(f: OrliczFn) -> YoungMap:
    """Lift a scalar Orlicz function to a one-dimensional YoungMap."""
    return YoungMap(
        dim=1,
        fn=lambda pts: f.value(pts[..., 0]),
        radially_monotone=True,
        convex=True,
        smooth_off_origin=True,
        label=f.describe(),
    )


def radial_power(dim: int, p: float) -> YoungMap:
    """||x||_2**p; convex for p >= 1."""
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if not p >= 1:
        raise ValueError("exponent must be >= 1")
    return YoungMap(
        dim=dim,
        fn=lambda pts: np.linalg.norm(pts, axis=-1) ** p,
        radially_monotone=True,
        convex=True,
        smooth_off_origin=True,
        label=f"radial_power({dim},{p:g})",
    )


def kalton_peck_map(f: OrliczFn, theta: LipschitzTheta) -> YoungMap:
    """The twisted two-variable map Phi built from f and theta.

    f must carry certified constants (see scalarfn.certify); the
    quasi-convexity bound downstream is computed from them.
    """
    if f.constants is None:
        raise ValueError(
            "kalton_peck_map needs a certified function; run scalarfn.certify first")

    def fn(pts: np.ndarray) -> np.ndarray:
        x = pts[..., 0]
        y = pts[..., 1]
        ay = np.abs(y)
        shift = np.zeros_like(y)
        nz = ay > 0
        if np.any(nz):
            shift[nz] = y[nz] * theta.value(-np.log(ay[nz]))
        return f.value(y) + f.value(x - shift)

    return YoungMap(
        dim=2,
        fn=fn,
        radially_monotone=False,
        convex=False,
        smooth_off_origin=False,
        label=f"kp({f.describe()}, theta={theta.describe()})",
    )


def kp_theoretical_bound(constants: ScalarConstants,
                         theta: LipschitzTheta) -> float:
    """Proof-side quasi-convexity bound from the certified constants."""
    C = constants.C
    C_K = constants.c_b(theta.K)
    return float(max(1.0 + C * C_K + C ** 3 * C_K * constants.M_prime, C ** 2))


# --------------------------------------------------------------------------
# empirical quasi-convexity constant


@dataclass(frozen=True)
class QuasiconvexityResult:
    l_hat: float
    witness: tuple[np.ndarray, np.ndarray, float]
    trials: int
    seed: int

    def witness_report(self) -> dict:
        t1, t2, lam = self.witness
        return {"t1": [float(v) for v in t1],
                "t2": [float(v) for v in t2],
                "lambda": float(lam)}


_CHUNK = 65536


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([int(seed), int(chunk)])))


def _signed_log_uniform(rng, shape, lo: float, hi: float) -> np.ndarray:
    mag = 10.0 ** (math.log10(lo)
                   + (math.log10(hi) - math.log10(lo)) * rng.random(shape))
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return sign * mag


def _ratio(m: YoungMap, t1, t2, lam) -> np.ndarray:
    mid = lam[..., None] * t1 + (1.0 - lam[..., None]) * t2
    num = m.evaluate(mid)
    den = lam * m.evaluate(t1) + (1.0 - lam) * m.evaluate(t2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den >= 1e-300, num / den, -math.inf)


def _polish_witness(m: YoungMap, t1, t2, lam, rounds: int = 60):
    """Deterministic pattern search around a witness; only improvements kept."""
    t1 = np.array(t1, dtype=float)
    t2 = np.array(t2, dtype=float)
    lam = float(lam)
    best = float(_ratio(m, t1[None], t2[None], np.array([lam]))[0])
    step = 0.25
    for _ in range(rounds):
        improved = False
        for arr, i in [(t1, i) for i in range(m.dim)] + \
                      [(t2, i) for i in range(m.dim)]:
            for d in (1.0 + step, 1.0 - step, -1.0):
                old = arr[i]
                arr[i] = old * d if d > 0 else old + step * (abs(old) + 1e-3) * d
                r = float(_ratio(m, t1[None], t2[None], np.array([lam]))[0])
                if r > best:
                    best = r
                    improved = True
                else:
                    arr[i] = old
        for d in (step, -step):
            cand = min(max(lam + d, 1e-6), 1.0 - 1e-6)
            r = float(_ratio(m, t1[None], t2[None], np.array([cand]))[0])
            if r > best:
                best, lam, improved = r, cand, True
        if not improved:
            step *= 0.5
            if step < 1e-7:
                break
    return best, (t1, t2, lam)


def quasiconvexity_constant(m: YoungMap, trials: int, rng_seed: int,
                            halfwidth: float = 2.0) -> QuasiconvexityResult:
    """Empirical sup of m(lam*t1 + (1-lam)*t2) / (lam*m(t1) + (1-lam)*m(t2)).

    Sampling mixes uniform box points, signed log-magnitude points, and
    (in dimension 2) directed pairs sharing their first coordinate with
    small second coordinates, where the log kink lives.  Identity pairs
    t1 = t2 are always included, so the result is >= 1 - 1e-12 whenever
    the map is positive somewhere.  Denominators below 1e-300 are
    skipped.  A deterministic local polish around the best witness is
    part of the search.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    best = -math.inf
    best_w = None
    done = 0
    chunk_idx = 0
    while done < trials:
        n = min(_CHUNK, trials - done)
        rng = _chunk_rng(rng_seed, chunk_idx)
        thirds = n // 3
        t1 = np.empty((n, m.dim))
        t2 = np.empty((n, m.dim))
        # uniform box
        t1[:thirds] = halfwidth * (2.0 * rng.random((thirds, m.dim)) - 1.0)
        t2[:thirds] = halfwidth * (2.0 * rng.random((thirds, m.dim)) - 1.0)
        # signed log magnitudes
        k = 2 * thirds
        t1[thirds:k] = _signed_log_uniform(rng, (thirds, m.dim), 1e-6, halfwidth)
        t2[thirds:k] = _signed_log_uniform(rng, (thirds, m.dim), 1e-6, halfwidth)
        # directed pairs: shared x, small y of mixed sign pattern
        rest = n - k
        if m.dim == 2 and rest > 0:
            x = _signed_log_uniform(rng, (rest,), 1e-3, halfwidth)
            y1 = _signed_log_uniform(rng, (rest,), 1e-6, halfwidth)
            flip = np.where(rng.random(rest) < 0.5, 1.0, -1.0)
            y2 = flip * np.sign(y1) * 10.0 ** (
                -6.0 + (math.log10(halfwidth) + 6.0) * rng.random(rest))
            t1[k:] = np.stack([x, y1], axis=-1)
            t2[k:] = np.stack([x, y2], axis=-1)
        elif rest > 0:
            t1[k:] = _signed_log_uniform(rng, (rest, m.dim), 1e-6, halfwidth)
            t2[k:] = _signed_log_uniform(rng, (rest, m.dim), 1e-6, halfwidth)
        lam = rng.random(n)
        lam[::16] = 0.5
        # exact identity pairs guarantee L_hat >= 1
        ident = min(8, n)
        t2[:ident] = t1[:ident]
        r = _ratio(m, t1, t2, lam)
        i = int(np.argmax(r))
        if r[i] > best:
            best = float(r[i])
            best_w = (t1[i].copy(), t2[i].copy(), float(lam[i]))
        done += n
        chunk_idx += 1
    if best_w is None or not np.isfinite(best):
        raise NumericSignal("quasi-convexity search found no valid denominator")
    best, best_w = _polish_witness(m, *best_w)
    return QuasiconvexityResult(l_hat=best, witness=best_w,
                                trials=trials, seed=rng_seed)


# --------------------------------------------------------------------------
# grid-backed maps


@dataclass(frozen=True)
class GridMap:
    """Values on a centred box grid, interpolated multilinearly.

    Outside the box a query is pulled back along its ray to the boundary
    and the boundary value is scaled linearly (degree-1 extension).
    """

    axes: tuple
    table: np.ndarray = field(repr=False)
    radially_monotone: bool = False
    convex: bool = False
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def halfwidth(self) -> np.ndarray:
        return np.array([ax[-1] for ax in self.axes])

    def contains(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.dim)
        hw = self.halfwidth
        return np.all(np.abs(pts) <= hw * (1.0 + 1e-12), axis=-1)

    def evaluate(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.dim)
        hw = self.halfwidth
        with np.errstate(divide="ignore", invalid="ignore"):
            stretch = np.max(np.abs(pts) / hw, axis=-1)
        stretch = np.maximum(stretch, 1.0)
        inner = pts / stretch[..., None]
        return stretch * self._interp(inner)

    def __call__(self, pts):
        return self.evaluate(pts)

    def _interp(self, pts: np.ndarray) -> np.ndarray:
        flat = pts.reshape(-1, self.dim)
        idx = []
        frac = []
        for i, ax in enumerate(self.axes):
            j = np.searchsorted(ax, flat[:, i], side="right") - 1
            j = np.clip(j, 0, ax.size - 2)
            idx.append(j)
            frac.append((flat[:, i] - ax[j]) / (ax[j + 1] - ax[j]))
        out = np.zeros(flat.shape[0])
        for corner in range(2 ** self.dim):
            w = np.ones(flat.shape[0])
            loc = []
            for i in range(self.dim):
                hi = (corner >> i) & 1
                w = w * (frac[i] if hi else (1.0 - frac[i]))
                loc.append(idx[i] + hi)
            out += w * self.table[tuple(loc)]
        return out.reshape(pts.shape[:-1])

    def as_young(self) -> YoungMap:
        return YoungMap(
            dim=self.dim,
            fn=self.evaluate,
            radially_monotone=self.radially_monotone,
            convex=self.convex,
            label=self.label or "grid map",
        )


# --------------------------------------------------------------------------
# lower convex envelopes


@dataclass(frozen=True)
class EnvelopeGrid:
    """A map and its grid lower convex envelope on a centred box."""

    axes: tuple
    nodes: np.ndarray = field(repr=False)       # (N, dim)
    values: np.ndarray = field(repr=False)      # (N,)
    envelope: np.ndarray = field(repr=False)    # (N,)
    support_max: int = 0
    ratio_max: float = 1.0
    l_hat: float | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def resolution(self) -> int:
        return self.axes[0].size

    @property
    def l_caratheodory(self) -> float | None:
        if self.l_hat is None:
            return None
        return float(self.l_hat) ** self.dim

    def with_l_hat(self, l_hat: float) -> "EnvelopeGrid":
        return replace(self, l_hat=float(l_hat))

    def envelope_map(self) -> GridMap:
        shape = tuple(ax.size for ax in self.axes)
        return GridMap(axes=self.axes,
                       table=self.envelope.reshape(shape),
                       radially_monotone=True, convex=True,
                       label=f"envelope of {self.label}")

    def values_map(self) -> GridMap:
        shape = tuple(ax.size for ax in self.axes)
        return GridMap(axes=self.axes, table=self.values.reshape(shape),
                       label=self.label)

    def to_csv(self, path) -> None:
        cols = [f"x{i + 1}" for i in range(self.dim)] + ["value", "envelope"]
        data = np.column_stack([self.nodes, self.values, self.envelope])
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _grid_axes(dim: int, halfwidth, resolution: int):
    hw = np.broadcast_to(np.asarray(halfwidth, dtype=float), (dim,)).copy()
    if np.any(hw <= 0) or not np.all(np.isfinite(hw)):
        raise ValueError("box halfwidth must be positive and finite")
    if resolution < 9:
        raise ValueError("resolution must be at least 9")
    if resolution % 2 == 0:
        raise ValueError("resolution must be odd so the box is centred at 0")
    return tuple(np.linspace(-h, h, resolution) for h in hw)


def convex_envelope(m: YoungMap, halfwidth, resolution: int,
                    l_hat: float | None = None) -> EnvelopeGrid:
    """Grid lower convex envelope by one LP per node.

    Each node value is min sum(alpha_i * v_i) over convex weights on the
    grid nodes reproducing the query point.  Basic optimal solutions of
    the dual-simplex solver put weight on at most dim+1 nodes, which the
    support counter verifies.  The result upper-bounds the true envelope
    and never exceeds the sampled values.
    """
    axes = _grid_axes(m.dim, halfwidth, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    values = m.evaluate(nodes)
    if not np.all(np.isfinite(values)):
        raise NumericSignal("map produced non-finite values on the envelope grid")
    n = nodes.shape[0]
    A_eq = np.vstack([nodes.T, np.ones((1, n))])
    env = np.empty(n)
    support_max = 0
    for i in range(n):
        b_eq = np.append(nodes[i], 1.0)
        res = linprog(values, A_eq=A_eq, b_eq=b_eq, bounds=(0.0, None),
                      method="highs-ds")
        if not res.success:
            raise NumericSignal(
                f"envelope LP failed at node {nodes[i]}: {res.message}")
        env[i] = res.fun
        support_max = max(support_max, int(np.count_nonzero(res.x > 1e-8)))
    if np.any(env > values + 1e-9):
        raise NumericSignal("envelope exceeded sampled values beyond tolerance")
    env = np.minimum(np.maximum(env, 0.0), values)
    active = env > 1e-12
    ratio_max = float((values[active] / env[active]).max()) if active.any() else 1.0
    return EnvelopeGrid(axes=axes, nodes=nodes, values=values, envelope=env,
                        support_max=support_max, ratio_max=ratio_max,
                        l_hat=l_hat, label=m.label)


def equivalence_constant(a, b, halfwidth, resolution: int) -> float:
    """Smallest M with values/M <= other <= M*values on the shared grid.

    Computed at grid nodes where both maps exceed 1e-12; returns inf when
    one map vanishes (<= 1e-12) at a node where the other does not.
    """
    ma = a.envelope_map() if isinstance(a, EnvelopeGrid) else a
    mb = b.envelope_map() if isinstance(b, EnvelopeGrid) else b
    if ma.dim != mb.dim:
        raise ValueError("maps must share a dimension")
    axes = _grid_axes(ma.dim, halfwidth, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    va = ma.evaluate(nodes)
    vb = mb.evaluate(nodes)
    pa = va > 1e-12
    pb = vb > 1e-12
    if np.any(pa != pb):
        return math.inf
    both = pa & pb
    if not both.any():
        return 1.0
    r = va[both] / vb[both]
    return float(max(r.max(), (1.0 / r).max()))


# --------------------------------------------------------------------------
# mollification by scaled-ball averages


@dataclass(frozen=True)
class MollifyResult:
    map: GridMap
    radius_fraction: float
    sandwich_ok: bool
    certified_fraction: float | None
    ratio_min: float
    ratio_max: float
    annulus: tuple[float, float]


def _ball_offsets(dim: int, n_radial: int = 16, n_angular: int = 24):
    """Unit-ball quadrature nodes and weights with uniform (volume) measure."""
    if dim == 1:
        g, w = leggauss(33)
        return g[:, None], w / w.sum()
    g, w = leggauss(n_radial)
    u = (g + 1.0) / 2.0          # uniform in volume fraction
    wu = w / w.sum()
    if dim == 2:
        r = np.sqrt(u)
        ang = 2.0 * math.pi * (np.arange(n_angular) + 0.5) / n_angular
        pts = np.stack([np.outer(r, np.cos(ang)).ravel(),
                        np.outer(r, np.sin(ang)).ravel()], axis=-1)
        wts = np.repeat(wu / n_angular, n_angular)
        return pts, wts
    # dim 3: radius from volume fraction, product rule on the sphere
    r = u ** (1.0 / 3.0)
    gc, wc = leggauss(8)
    wc = wc / wc.sum()
    ang = 2.0 * math.pi * (np.arange(12) + 0.5) / 12
    ct = gc
    st = np.sqrt(1.0 - ct ** 2)
    dirs = np.stack([np.outer(st, np.cos(ang)).ravel(),
                     np.outer(st, np.sin(ang)).ravel(),
                     np.repeat(ct, 12)], axis=-1)
    dw = np.repeat(wc / 12, 12)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    wts = (wu[:, None] * dw[None, :]).ravel()
    return pts, wts


def mollify(m: YoungMap, radius_fraction: float, halfwidth,
            resolution: int) -> MollifyResult:
    """Average m over balls B(x, c*||x||) at the grid nodes.

    Checks the two-sided sandwich m/2 <= average <= 2m on the annulus of
    nodes whose balls stay inside the box and which sit at least two grid
    steps from 0.  When the sandwich fails at the requested fraction, a
    halving search reports the largest c' < c for which it holds.
    """
    if not 0.0 <= radius_fraction < 1.0:
        raise ValueError("radius fraction must lie in [0, 1)")
    axes = _grid_axes(m.dim, halfwidth, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    base_vals = m.evaluate(nodes)
    offsets, weights = _ball_offsets(m.dim)
    step = max(float(ax[1] - ax[0]) for ax in axes)
    hw_min = min(float(ax[-1]) for ax in axes)
    norms = np.linalg.norm(nodes, axis=-1)
    shape = tuple(ax.size for ax in axes)

    def averaged(c: float) -> np.ndarray:
        if c == 0.0:
            return base_vals.copy()
        radii = c * norms
        pts = nodes[:, None, :] + radii[:, None, None] * offsets[None, :, :]
        vals = m.evaluate(pts.reshape(-1, m.dim)).reshape(len(nodes), -1)
        return vals @ weights

    def sandwich(c: float, avg: np.ndarray):
        inner = 2.0 * step
        ann = (norms >= inner) & (norms * (1.0 + c) <= hw_min) & (base_vals > 0)
        if not ann.any():
            return False, math.inf, -math.inf
        r = avg[ann] / base_vals[ann]
        return bool(r.min() >= 0.5 and r.max() <= 2.0), float(r.min()), float(r.max())

    avg = averaged(radius_fraction)
    ok, r_lo, r_hi = sandwich(radius_fraction, avg)
    certified = radius_fraction if ok else None
    if not ok:
        c = radius_fraction
        for _ in range(30):
            c = c / 2.0
            if c < 1e-9:
                break
            got, _, _ = sandwich(c, averaged(c))
            if got:
                certified = c
                break
    grid = GridMap(axes=axes, table=avg.reshape(shape),
                   radially_monotone=m.radially_monotone,
                   label=f"mollified {m.label} (c={radius_fraction:g})")
    inner = 2.0 * step
    outer = hw_min / (1.0 + radius_fraction) if radius_fraction > 0 else hw_min
    return MollifyResult(map=grid, radius_fraction=radius_fraction,
                         sandwich_ok=ok, certified_fraction=certified,
                         ratio_min=r_lo, ratio_max=r_hi,
                         annulus=(inner, outer))
