"""Scalar Orlicz functions and their certified growth constants.

The functions handled here are even, convex, nondecreasing on the
positive axis, zero exactly at zero and finite everywhere.  Three
families are provided:

* ``power(p)``      -- ``|t|**p`` for p > 1,
* ``power_log(p)``  -- ``|t|**p * (1 + log(1 + |t|))``,
* ``extend(f, p)``  -- f on [0, 1] continued by ``f(1) * t**q`` above 1,
  with ``q = max(f'(1)/f(1), p)`` using the left derivative at 1.

Growth constants (doubling, subadditivity, the type-p bound, scaling
bounds and the Matuszewska-Orlicz style indices) are certified on
explicit log-spaced grids.  Every supremum is re-sampled on denser and
wider grids; a value that keeps growing by more than ``growth_tol`` in
every round is reported as unbounded instead of being returned as a
number.  Closed forms are registered for the power family and win over
grid estimates; both members of the pair are kept in the report.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NumericSignal, UnboundedConstant

__all__ = [
    "OrliczFn",
    "ScalarConstants",
    "SamplingPlan",
    "DEFAULT_PLAN",
    "power",
    "power_log",
    "extend",
    "from_spec",
    "left_difference_quotient",
    "estimate_type_constant",
    "derive_M_prime",
    "delta2_constant",
    "subadditivity_constant",
    "scale_constant",
    "estimate_indices",
    "certify",
]


# --------------------------------------------------------------------------
# sampling plans


@dataclass(frozen=True)
class SamplingPlan:
    """Log-spaced sampling policy for supremum certification.

    ``points`` log-spaced points per axis on [lo, hi] for global sups and
    [zero_lo, 1] for behaviour at zero.  Each refinement round doubles the
    density and stretches the sampled range by ``range_stretch`` at the
    open ends; a sup that grows by more than ``growth_tol`` in every round
    is declared unbounded.
    """

    points: int = 512
    lo: float = 1e-9
    hi: float = 1e9
    zero_lo: float = 1e-12
    rounds: int = 3
    growth_tol: float = 0.10
    range_stretch: float = 1e3

    def global_axis(self, round_: int = 0) -> np.ndarray:
        stretch = self.range_stretch ** round_
        return np.geomspace(self.lo / stretch, self.hi * stretch,
                            self.points * 2 ** round_)

    def unit_axis(self, round_: int = 0) -> np.ndarray:
        # upper end pinned at 1: only the zero end stretches
        stretch = self.range_stretch ** round_
        return np.geomspace(self.zero_lo / stretch, 1.0,
                            self.points * 2 ** round_)

    def provenance(self) -> dict:
        return {
            "points": self.points,
            "lo": self.lo,
            "hi": self.hi,
            "zero_lo": self.zero_lo,
            "rounds": self.rounds,
            "growth_tol": self.growth_tol,
            "range_stretch": self.range_stretch,
        }


DEFAULT_PLAN = SamplingPlan()


def _refined_sup(per_round: Callable[[int], float], plan: SamplingPlan,
                 what: str, signal_unbounded: bool = True) -> float:
    sups = [per_round(k) for k in range(plan.rounds + 1)]
    if signal_unbounded:
        growing = all(b > a * (1.0 + plan.growth_tol)
                      for a, b in zip(sups, sups[1:]))
        if growing:
            raise UnboundedConstant(what, sups)
    return float(max(sups))


# --------------------------------------------------------------------------
# the function families


@dataclass(frozen=True)
class OrliczFn:
    """An even convex Orlicz function, optionally carrying certified constants."""

    kind: str
    p: float
    base: "OrliczFn | None" = None
    q: float | None = None
    constants: "ScalarConstants | None" = None

    # -- evaluation ---------------------------------------------------------

    def value(self, x) -> np.ndarray:
        t = np.abs(np.asarray(x, dtype=float))
        if self.kind == "power":
            return t ** self.p
        if self.kind == "power_log":
            return t ** self.p * (1.0 + np.log1p(t))
        if self.kind == "extension":
            inner = self.base.value(np.minimum(t, 1.0))
            with np.errstate(over="ignore"):
                outer = self.base.value_at_1 * t ** self.q
            return np.where(t <= 1.0, inner, outer)
        raise ValueError(f"unknown kind {self.kind!r}")

    def __call__(self, x):
        return self.value(x)

    @property
    def value_at_1(self) -> float:
        if self.kind == "power":
            return 1.0
        if self.kind == "power_log":
            return 1.0 + math.log(2.0)
        return self.base.value_at_1

    @property
    def left_derivative_at_1(self) -> float:
        if self.kind == "power":
            return self.p
        if self.kind == "power_log":
            return self.p * (1.0 + math.log(2.0)) + 0.5
        return self.base.left_derivative_at_1

    # -- provenance / serialization ------------------------------------------

    def describe(self) -> str:
        if self.kind == "extension":
            return f"extension({self.base.describe()}, p={self.p:g}, q={self.q:g})"
        return f"{self.kind}({self.p:g})"

    def to_spec(self) -> dict:
        if self.kind == "extension":
            return {"kind": "extension", "base": self.base.to_spec(), "p": self.p}
        return {"kind": self.kind, "p": self.p}

    # -- closed-form constants (None when no closed form is registered) ------

    def closed_delta2(self, domain: str) -> float | None:
        if self.kind == "power":
            return 2.0 ** self.p
        return None

    def closed_subadditivity(self) -> float | None:
        if self.kind == "power":
            return 2.0 ** (self.p - 1.0)
        return None

    def closed_type_constant(self, p_claim: float) -> float | None:
        if self.kind == "power" and p_claim <= self.p:
            return 1.0
        return None

    def closed_scale_constant(self, B: float) -> float | None:
        if self.kind == "power":
            return float(B) ** self.p
        return None


def _validate_shape(f: OrliczFn) -> None:
    """Reject degenerate inputs at construction time."""
    xs = np.geomspace(1e-8, 1e6, 57)
    vals = f.value(xs)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{f.describe()}: non-finite values on the probe grid")
    if float(f.value(0.0)) != 0.0:
        raise ValueError(f"{f.describe()}: must vanish at 0")
    if np.any(vals <= 0.0):
        raise ValueError(f"{f.describe()}: must be positive off 0")
    if not np.array_equal(f.value(-xs), vals):
        raise ValueError(f"{f.describe()}: not even")
    if np.any(np.diff(vals) < -1e-12 * vals[1:]):
        raise ValueError(f"{f.describe()}: not nondecreasing")
    # midpoint convexity on consecutive probe pairs
    mids = f.value((xs[:-1] + xs[1:]) / 2.0)
    chords = (vals[:-1] + vals[1:]) / 2.0
    if np.any(mids > chords * (1.0 + 1e-12)):
        raise ValueError(f"{f.describe()}: midpoint convexity fails on probes")


def power(p: float) -> OrliczFn:
    if not p > 1.0:
        raise ValueError("power exponent must exceed 1")
    f = OrliczFn("power", float(p))
    _validate_shape(f)
    return f


def power_log(p: float) -> OrliczFn:
    if not p > 1.0:
        raise ValueError("exponent must exceed 1")
    f = OrliczFn("power_log", float(p))
    _validate_shape(f)
    return f


def extend(f: OrliczFn, p: float, plan: SamplingPlan = DEFAULT_PLAN) -> OrliczFn:
    """Continue f above 1 by f(1)*t**q with q = max(f'(1)/f(1), p).

    Requires the doubling condition at zero; a diverging at-zero doubling
    ratio raises UnboundedConstant before anything is built.
    """
    if not p > 1.0:
        raise ValueError("extension exponent must exceed 1")
    delta2_constant(f, "at_zero", plan)  # raises when not satisfied
    q = max(f.left_derivative_at_1 / f.value_at_1, p)
    g = OrliczFn("extension", float(p), base=f, q=float(q))
    _validate_shape(g)
    return g


def from_spec(spec: dict) -> OrliczFn:
    """Build a function from its JSON dict form."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("function spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind == "power":
        return power(float(spec["p"]))
    if kind == "power_log":
        return power_log(float(spec["p"]))
    if kind == "extension":
        return extend(from_spec(spec["base"]), float(spec["p"]))
    raise ValueError(f"unknown function kind {kind!r}")


def left_difference_quotient(f: OrliczFn, h: float = 1e-7) -> float:
    """Numeric stand-in for the left derivative at 1."""
    return float((f.value(1.0) - f.value(1.0 - h)) / h)


# --------------------------------------------------------------------------
# certified constants


@dataclass(frozen=True)
class ScalarConstants:
    """Certified growth constants of an Orlicz function for exponent p.

    C, M, delta2 and delta2_at_zero are >= 1 and finite.  S and M_prime
    are finite and positive (S crosses 1 near p = e/(e-1), so no upper
    bound is imposed).  c_b maps a scale B > 0 to a bound on
    f(B*x)/f(x).
    """

    p: float
    C: float
    M: float
    S: float
    M_prime: float
    delta2: float
    delta2_at_zero: float
    indices: tuple[float, float]
    c_b: Callable[[float], float] = field(repr=False)
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("C", "M", "delta2", "delta2_at_zero"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 1.0 - 1e-12):
                raise ValueError(f"constant {name}={v} must be finite and >= 1")
        for name in ("S", "M_prime"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                raise ValueError(f"constant {name}={v} must be finite and > 0")
        if self.indices[0] > self.indices[1] + 1e-12:
            raise ValueError("lower index exceeds upper index")

    def to_report(self) -> dict:
        return {
            "p": self.p,
            "C": self.C,
            "delta2": self.delta2,
            "delta2_at_zero": self.delta2_at_zero,
            "M": self.M,
            "S": self.S,
            "M_prime": self.M_prime,
            "indices": [self.indices[0], self.indices[1]],
            "grid": dict(self.grid),
        }


def estimate_type_constant(f: OrliczFn, p: float,
                           plan: SamplingPlan = DEFAULT_PLAN) -> float:
    """Grid supremum of f(lam*s) / (lam**p * f(s)) over 0 < lam <= 1, s > 0."""
    if not p > 1.0:
        raise ValueError("type exponent must exceed 1")

    def per_round(k: int) -> float:
        lam = plan.unit_axis(k)
        s = plan.global_axis(k)
        phi_s = f.value(s)
        best = -math.inf
        for i in range(0, lam.size, 256):
            lb = lam[i:i + 256, None]
            num = f.value(lb * s[None, :])
            den = lb ** p * phi_s[None, :]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                r = np.where((den > 0.0) & np.isfinite(num), num / den, -math.inf)
            best = max(best, float(r.max()))
        return best

    return _refined_sup(per_round, plan,
                        f"type constant (p={p:g}) for {f.describe()}")


def derive_M_prime(M: float, p: float, closed_form: bool = True,
                   plan: SamplingPlan = DEFAULT_PLAN) -> float:
    """M' = M * sup_{0<lam<=1} lam**(p-1) * |log lam|**p.

    The sup has the closed form ((p/(e(p-1)))**p, attained at
    lam = exp(-p/(p-1)).  With closed_form=False the sup is taken over
    the plan's unit axis and polished by a bounded scalar minimizer.
    """
    if not p > 1.0:
        raise ValueError("p must exceed 1")
    if not (np.isfinite(M) and M > 0):
        raise ValueError("M must be finite and positive")
    if closed_form:
        S = (p / (math.e * (p - 1.0))) ** p
    else:
        lam = plan.unit_axis()
        with np.errstate(divide="ignore"):
            vals = lam ** (p - 1.0) * np.abs(np.log(lam)) ** p
        S = float(vals.max())
        res = minimize_scalar(
            lambda u: -(u ** (p - 1.0)) * abs(math.log(u)) ** p,
            bounds=(1e-12, 1.0 - 1e-12), method="bounded",
            options={"xatol": 1e-13})
        S = max(S, float(-res.fun))
    return float(M) * S


def delta2_constant(f: OrliczFn, domain: str = "global",
                    plan: SamplingPlan = DEFAULT_PLAN) -> float:
    """Grid supremum of f(2x)/f(x), globally or with x pushed toward 0."""
    if domain not in ("global", "at_zero"):
        raise ValueError("domain must be 'global' or 'at_zero'")

    def per_round(k: int) -> float:
        x = plan.global_axis(k) if domain == "global" else plan.unit_axis(k)
        num = f.value(2.0 * x)
        den = f.value(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r = np.where((den > 0.0) & np.isfinite(num), num / den, -math.inf)
        return float(r.max())

    return _refined_sup(per_round, plan,
                        f"doubling constant ({domain}) for {f.describe()}")


def subadditivity_constant(f: OrliczFn, plan: SamplingPlan = DEFAULT_PLAN,
                           delta2: float | None = None) -> float:
    """Grid supremum of f(x+y)/(f(x)+f(y)) over x, y > 0.

    Bounded whenever the doubling condition holds (C <= delta2); the
    doubling certificate is computed first when no value is supplied, so
    that this sup never has to signal on its own.
    """
    if delta2 is None:
        delta2 = delta2_constant(f, "global", plan)

    def per_round(k: int) -> float:
        x = plan.global_axis(k)
        phi_x = f.value(x)
        best = -math.inf
        for i in range(0, x.size, 256):
            xr = x[i:i + 256, None]
            num = f.value(xr + x[None, :])
            den = phi_x[i:i + 256, None] + phi_x[None, :]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                r = np.where((den > 0.0) & np.isfinite(num), num / den, -math.inf)
            best = max(best, float(r.max()))
        return best

    return _refined_sup(per_round, plan,
                        f"subadditivity constant for {f.describe()}",
                        signal_unbounded=False)


def scale_constant(f: OrliczFn, B: float,
                   plan: SamplingPlan = DEFAULT_PLAN) -> float:
    """Grid supremum of f(B*x)/f(x) for a fixed scale B > 0."""
    if not B > 0:
        raise ValueError("scale must be positive")

    def per_round(k: int) -> float:
        x = plan.global_axis(k)
        num = f.value(B * x)
        den = f.value(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r = np.where((den > 0.0) & np.isfinite(num), num / den, -math.inf)
        return float(r.max())

    return _refined_sup(per_round, plan,
                        f"scale constant (B={B:g}) for {f.describe()}")


def estimate_indices(f: OrliczFn, plan: SamplingPlan = DEFAULT_PLAN,
                     q_min: float = 1.0, q_max: float = 10.0,
                     q_step: float = 0.05, cap: float = 2.0,
                     floor: float = 0.5) -> tuple[float, float]:
    """Grid estimates of the lower and upper growth indices.

    For each exponent q on the grid the ratio f(lam*t)/(f(lam)*t**q) is
    sampled over 0 < lam, t <= 1.  The lower index estimate is the
    largest q whose supremum stays below ``cap``; the upper one is the
    smallest q whose infimum stays above ``floor``.
    """
    lam = plan.unit_axis()
    t = plan.unit_axis()
    colmax = np.full(t.size, -math.inf)
    colmin = np.full(t.size, math.inf)
    for i in range(0, lam.size, 256):
        lb = lam[i:i + 256, None]
        R = f.value(lb * t[None, :]) / f.value(lb)
        colmax = np.maximum(colmax, R.max(axis=0))
        colmin = np.minimum(colmin, R.min(axis=0))
    qs = np.arange(q_min, q_max + q_step / 2.0, q_step)
    alpha = q_min
    beta = q_max
    beta_found = False
    with np.errstate(over="ignore"):
        for q in qs:
            w = t ** (-q)
            if float((colmax * w).max()) <= cap:
                alpha = q
            if not beta_found and float((colmin * w).min()) >= floor:
                beta = q
                beta_found = True
    if beta < alpha - 1e-12:
        raise NumericSignal(
            f"index estimates inverted for {f.describe()}: "
            f"alpha={alpha:g} > beta={beta:g}")
    return float(alpha), float(beta)


def certify(f: OrliczFn, p: float,
            plan: SamplingPlan = DEFAULT_PLAN) -> OrliczFn:
    """Attach certified constants for exponent p; closed forms win.

    Raises UnboundedConstant when the doubling or type sup genuinely
    diverges under refinement (e.g. a type claim above the true growth
    exponent).
    """
    if not p > 1.0:
        raise ValueError("type exponent must exceed 1")

    grid_report: dict = plan.provenance()

    d2_zero_grid = delta2_constant(f, "at_zero", plan)
    d2_grid = delta2_constant(f, "global", plan)
    d2_zero = f.closed_delta2("at_zero") or d2_zero_grid
    d2 = f.closed_delta2("global") or d2_grid
    grid_report["delta2_grid"] = d2_grid
    grid_report["delta2_at_zero_grid"] = d2_zero_grid

    C_grid = subadditivity_constant(f, plan, delta2=d2)
    C = f.closed_subadditivity() or C_grid
    grid_report["C_grid"] = C_grid

    M_closed = f.closed_type_constant(p)
    M_grid = estimate_type_constant(f, p, plan)  # raises when unbounded
    M = M_closed if M_closed is not None else M_grid
    grid_report["M_grid"] = M_grid

    S = (p / (math.e * (p - 1.0))) ** p
    indices = estimate_indices(f, plan)

    cache: dict[float, float] = {}

    def c_b(B: float) -> float:
        closed = f.closed_scale_constant(B)
        if closed is not None:
            return closed
        key = float(B)
        if key not in cache:
            cache[key] = scale_constant(f, key, plan)
        return cache[key]

    sc = ScalarConstants(
        p=float(p), C=float(C), M=float(M), S=float(S),
        M_prime=float(M) * float(S), delta2=float(d2),
        delta2_at_zero=float(d2_zero), indices=indices,
        c_b=c_b, grid=grid_report)
    return dataclasses.replace(f, constants=sc)
