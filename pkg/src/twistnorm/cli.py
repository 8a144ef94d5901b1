"""Command-line front end: norms, envelopes, and seeded certificates.

Every command reads JSON/CSV files, prints a one-line human summary,
and (with --out) writes a JSON report of the form

    {"body": {...deterministic given the flags...},
     "meta": {"timestamp": "..."}}

so reruns with identical configuration produce byte-identical bodies.
Exit codes: 0 success, 1 a certificate ran and failed its tolerance,
2 malformed input or configuration, 3 a numeric signal (unbounded
constant, failed bracket, failed construction certificate).
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericSignal
from .renorm import (BlockSeq, build_pipeline, lambda_norm,
                     match_lambda_norm, prefix_substitution_check,
                     star_iterate, suff_criterion_check, triangle_violation)
from .scalarfn import certify, power
from .seqspace import VecSeq, luxemburg_norm
from .twisted import (PairSeq, equivalence_certificate, from_preset,
                      quasi_linearity_constant, quasi_triangle_constant,
                      twisted_norm)
from .youngmap import (convex_envelope, identity_theta, kalton_peck_map,
                       kp_theoretical_bound, quasiconvexity_constant,
                       soft_clip_theta)

__all__ = ["main", "RunConfig"]


SPACE_PRESETS = "z2, zp:<p>, kp-softclip:<p>,<b>"
PIPELINE_PRESETS = ("t2-pipeline", "t4-pipeline", "r2-pipeline")


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by the commands."""

    seed: int = 20240501
    trials: int = 10_000
    grid_resolution: int = 41
    box_halfwidth: float = 2.0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.grid_resolution < 9 or self.grid_resolution % 2 == 0:
            raise ValueError("resolution must be odd and >= 9")
        if not self.box_halfwidth > 0:
            raise ValueError("box halfwidth must be positive")
        for name, v in self.tolerances.items():
            if not v > 0:
                raise ValueError(f"tolerance {name} must be positive")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(seed=args.seed, trials=args.trials,
                   grid_resolution=args.resolution,
                   box_halfwidth=args.box, output=args.out)

    def provenance(self) -> dict:
        return {"seed": self.seed, "trials": self.trials,
                "resolution": self.grid_resolution,
                "box_halfwidth": self.box_halfwidth}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_report(out: str | None, body: dict) -> None:
    doc = {"body": _jsonable(body),
           "meta": {"timestamp":
                    datetime.datetime.now(datetime.timezone.utc).isoformat()}}
    text = json.dumps(doc, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ValueError(f"no such file: {path}")
    return p.read_text()


def _space_preset(args, with_envelope: bool):
    return from_preset(args.preset, halfwidth=args.box,
                       resolution=args.resolution,
                       with_envelope=with_envelope)


def _pipeline_preset(name: str, seed: int):
    if name not in PIPELINE_PRESETS:
        raise ValueError(f"unknown pipeline preset {name!r}; expected one of "
                         f"{', '.join(PIPELINE_PRESETS)}")
    return build_pipeline(name, rng_seed=seed)


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([int(seed), int(k)])))


def _random_blocks(rng: np.random.Generator, dim: int,
                   max_blocks: int = 4) -> BlockSeq:
    k = int(rng.integers(1, max_blocks + 1))
    mags = 10.0 ** (-2.0 + 3.0 * rng.random((k, dim)))
    signs = np.where(rng.random((k, dim)) < 0.5, -1.0, 1.0)
    return BlockSeq(dim, mags * signs)


# --------------------------------------------------------------------------
# commands


def cmd_norm(args) -> int:
    cfg = RunConfig.from_args(args)
    text = _read(args.seq)
    seq = VecSeq.from_json(text)
    if seq.dim == 1:
        f = _space_preset(args, with_envelope=False).f
        value = luxemburg_norm(f, seq)
        kind = "luxemburg"
    elif seq.dim == 2:
        space = _space_preset(args, with_envelope=False)
        value = twisted_norm(space, PairSeq.from_json(text))
        kind = "twisted"
    else:
        raise ValueError("norm expects a dim-1 sequence or a dim-2 pair file")
    print(f"{kind} norm = {value!r}")
    write_report(cfg.output, {
        "command": "norm", "kind": kind, "preset": args.preset,
        "input": args.seq, "norm": value,
    })
    return 0


def cmd_twisted_norm(args) -> int:
    cfg = RunConfig.from_args(args)
    space = _space_preset(args, with_envelope=False)
    pair = PairSeq.from_json(_read(args.pair))
    value = twisted_norm(space, pair)
    print(f"twisted norm = {value!r}")
    write_report(cfg.output, {
        "command": "twisted-norm", "preset": args.preset,
        "input": args.pair, "norm": value,
    })
    return 0


def cmd_envelope(args) -> int:
    cfg = RunConfig.from_args(args)
    space = _space_preset(args, with_envelope=False)
    grid = convex_envelope(space.phi_kp, cfg.box_halfwidth,
                           cfg.grid_resolution)
    out = args.csv or "envelope.csv"
    grid.to_csv(out)
    print(f"envelope grid ({grid.resolution}x{grid.resolution}) -> {out}")
    write_report(cfg.output, {
        "command": "envelope", "preset": args.preset,
        "csv": out, "support_max": grid.support_max,
        "ratio_max": grid.ratio_max, **cfg.provenance(),
    })
    return 0


def _certify_quasiconvex(args, cfg: RunConfig) -> tuple[bool, dict]:
    name = args.preset.strip()
    if name == "z2":
        p, theta = 2.0, identity_theta()
    elif name.startswith("zp:"):
        p, theta = float(name[3:]), identity_theta()
    elif name.startswith("kp-softclip:"):
        a, b = name[len("kp-softclip:"):].split(",")
        p, theta = float(a), soft_clip_theta(float(b))
    else:
        raise ValueError(f"unknown space preset {name!r}; expected "
                         + SPACE_PRESETS)
    claimed = args.type_p if args.type_p is not None else p
    f = certify(power(p), claimed)
    phi = kalton_peck_map(f, theta)
    res = quasiconvexity_constant(phi, cfg.trials, cfg.seed,
                                  halfwidth=cfg.box_halfwidth)
    bound = kp_theoretical_bound(f.constants, theta)
    ok = bool(1.0 < res.l_hat <= bound + 1e-9)
    return ok, {
        "kind": "quasiconvex", "preset": args.preset, "claimed_type": claimed,
        "L_hat": res.l_hat, "bound": bound, "witness": res.witness_report(),
        "constants": f.constants.to_report(), **cfg.provenance(),
    }


def _certify_equivalence(args, cfg: RunConfig) -> tuple[bool, dict]:
    space = _space_preset(args, with_envelope=True)
    rep = equivalence_certificate(space, cfg.trials, args.dim_max, cfg.seed)
    side = max(1, cfg.trials // 4)
    ql = quasi_linearity_constant(space, side, args.dim_max, cfg.seed + 1)
    qt = quasi_triangle_constant(space, side, args.dim_max, cfg.seed + 2)
    ok = bool(rep["stable"] and rep["ratio_min"] > 0
              and math.isfinite(rep["ratio_max"]))
    return ok, {
        "kind": "equivalence", "preset": args.preset,
        "c_hat": ql.c_hat, "Q_hat": qt["Q_hat"],
        "ratio": rep["ratio"], "stable": rep["stable"],
        "stability": rep["stability"], "dim_max": args.dim_max,
        "box_halfwidth": rep["box_halfwidth"],
        "constants": space.f.constants.to_report(), **cfg.provenance(),
    }


def _certify_quasilinear(args, cfg: RunConfig) -> tuple[bool, dict]:
    space = _space_preset(args, with_envelope=False)
    res = quasi_linearity_constant(space, cfg.trials, args.dim_max, cfg.seed)
    vals = list(res.per_dim.values())
    spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
    ok = bool(math.isfinite(res.c_hat) and res.c_hat > 0 and spread <= 2.0)
    return ok, {
        "kind": "quasilinear", "preset": args.preset, "c_hat": res.c_hat,
        "per_dim": res.per_dim, "dim_spread": spread,
        "witness": res.witness, "dim_max": args.dim_max, **cfg.provenance(),
    }


def _certify_triangle(args, cfg: RunConfig) -> tuple[bool, dict]:
    pipe = _pipeline_preset(args.pipeline, cfg.seed)
    worst = triangle_violation(pipe.norm, cfg.trials, cfg.seed)
    ok = bool(worst <= 1e-10)
    return ok, {
        "kind": "triangle", "pipeline": args.pipeline,
        "max_violation": worst, "alpha": pipe.g.alpha, "M": pipe.g.M,
        **cfg.provenance(),
    }


def _certify_suff(args, cfg: RunConfig) -> tuple[bool, dict]:
    pipe = _pipeline_preset(args.pipeline, cfg.seed)
    worst = math.inf
    checked = 0
    for k in range(cfg.trials):
        rng = _rng(cfg.seed, k)
        xi = _random_blocks(rng, pipe.norm.dim)
        target = float(rng.random()) or 0.5
        xi = match_lambda_norm(pipe.norm, xi, target)
        rep = suff_criterion_check(pipe.norm, pipe.phitilde, xi)
        checked += rep.checked
        if rep.checked:
            worst = min(worst, rep.min_margin)
    ok = bool(worst >= -1e-9)
    return ok, {
        "kind": "suff", "pipeline": args.pipeline, "min_margin": worst,
        "steps_checked": checked, **cfg.provenance(),
    }


def _certify_property_m(args, cfg: RunConfig) -> tuple[bool, dict]:
    pipe = _pipeline_preset(args.pipeline, cfg.seed)
    worst = 0.0
    for k in range(cfg.trials):
        rng = _rng(cfg.seed, 10_000_019 + k)
        u = _random_blocks(rng, pipe.norm.dim)
        v = _random_blocks(rng, pipe.norm.dim)
        tail = _random_blocks(rng, pipe.norm.dim)
        v = match_lambda_norm(pipe.norm, v, lambda_norm(pipe.norm, u))
        rep = prefix_substitution_check(pipe.norm, u, v, tail)
        if not rep.precondition_ok:
            raise NumericSignal(
                f"constructed triple failed its precondition: {rep.reason}")
        worst = max(worst, rep.difference)
    ok = bool(worst <= 1e-9)
    return ok, {
        "kind": "property-m", "pipeline": args.pipeline,
        "max_difference": worst, **cfg.provenance(),
    }


_CERTIFIERS = {
    "quasiconvex": _certify_quasiconvex,
    "equivalence": _certify_equivalence,
    "quasilinear": _certify_quasilinear,
    "triangle": _certify_triangle,
    "suff": _certify_suff,
    "property-m": _certify_property_m,
}


def cmd_certify(args) -> int:
    cfg = RunConfig.from_args(args)
    ok, body = _CERTIFIERS[args.kind](args, cfg)
    body["pass"] = ok
    print(f"certify {args.kind}: {'PASS' if ok else 'FAIL'}")
    write_report(cfg.output, body)
    return 0 if ok else 1


def cmd_renorm(args) -> int:
    cfg = RunConfig.from_args(args)
    pipe = _pipeline_preset(args.pipeline, cfg.seed)
    if args.action == "build":
        worst = triangle_violation(pipe.norm, cfg.trials, cfg.seed)
        body = {
            "command": "renorm build", "pipeline": args.pipeline,
            "alpha": pipe.g.alpha, "M": pipe.g.M,
            "triangle_max_violation": worst,
            "decreasing_ok": bool(pipe.report().get("decreasing_ok", False)),
            "N_unit": pipe.report().get("N_unit"),
            **cfg.provenance(),
        }
        print(f"renorm build {args.pipeline}: alpha={pipe.g.alpha:g} "
              f"M={pipe.g.M:.12g} triangle_max={worst:.3e}")
        write_report(cfg.output, body)
        return 0
    # check: iterate the supplied block file and run the step criterion
    xi = BlockSeq.from_json(_read(args.blocks))
    values = star_iterate(pipe.norm, xi)
    lam = lambda_norm(pipe.norm, xi)
    rep = suff_criterion_check(pipe.norm, pipe.phitilde, xi)
    body = {
        "command": "renorm check", "pipeline": args.pipeline,
        "input": args.blocks, "values": values, "lambda_norm": lam,
        "suff_ok": rep.ok, "steps_checked": rep.checked,
        "min_margin": (None if rep.min_margin == math.inf
                       else rep.min_margin),
        "products": rep.products, **cfg.provenance(),
    }
    print(f"renorm check: lambda_norm={lam!r} suff_ok={rep.ok}")
    write_report(cfg.output, body)
    return 0 if rep.ok else 1


def cmd_lambda_norm(args) -> int:
    cfg = RunConfig.from_args(args)
    pipe = _pipeline_preset(args.pipeline, cfg.seed)
    xi = BlockSeq.from_json(_read(args.blocks))
    lam = lambda_norm(pipe.norm, xi)
    print(f"lambda norm = {lam!r}")
    write_report(cfg.output, {
        "command": "lambda-norm", "pipeline": args.pipeline,
        "input": args.blocks, "lambda_norm": lam,
        "values": star_iterate(pipe.norm, xi), **cfg.provenance(),
    })
    return 0


# --------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=20240501)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--resolution", type=int, default=41)
    p.add_argument("--box", type=float, default=2.0)
    p.add_argument("--out", default=None, help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="twistnorm",
        description="norms, envelopes and seeded certificates for twisted "
                    "Orlicz sequence spaces")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="Luxemburg or twisted norm of a file")
    p.add_argument("--preset", default="z2", help=SPACE_PRESETS)
    p.add_argument("--seq", required=True, help="sequence JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("twisted-norm", help="twisted quasi-norm of a pair file")
    p.add_argument("--preset", default="z2", help=SPACE_PRESETS)
    p.add_argument("--pair", required=True, help="pair JSON file (dim 2)")
    _add_common(p)
    p.set_defaults(func=cmd_twisted_norm)

    p = sub.add_parser("envelope", help="grid convex envelope as CSV")
    p.add_argument("--preset", default="z2", help=SPACE_PRESETS)
    p.add_argument("--csv", default=None, help="CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("certify", help="run a seeded certificate")
    p.add_argument("kind", choices=sorted(_CERTIFIERS))
    p.add_argument("--preset", default="z2", help=SPACE_PRESETS)
    p.add_argument("--pipeline", default="t2-pipeline",
                   help=", ".join(PIPELINE_PRESETS))
    p.add_argument("--dim-max", type=int, default=64)
    p.add_argument("--type-p", type=float, default=None,
                   help="override the claimed growth exponent")
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("renorm", help="build a renorm pipeline or check blocks")
    p.add_argument("action", choices=["build", "check"])
    p.add_argument("--pipeline", default="t2-pipeline",
                   help=", ".join(PIPELINE_PRESETS))
    p.add_argument("--blocks", default=None, help="block JSON (check only)")
    _add_common(p)
    p.set_defaults(func=cmd_renorm)

    p = sub.add_parser("lambda-norm", help="iterated-norm supremum of blocks")
    p.add_argument("--pipeline", default="t2-pipeline",
                   help=", ".join(PIPELINE_PRESETS))
    p.add_argument("--blocks", required=True, help="block JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_lambda_norm)

    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "renorm" and args.action == "check" \
                and not args.blocks:
            raise ValueError("renorm check needs --blocks")
        return args.func(args)
    except NumericSignal as exc:
        print(f"numeric signal: {exc}", file=sys.stderr)
        return 3
    except (ValueError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
