"""Command-line front door.

JSON for scalar/structured outputs, CSV for grid outputs; both embed a run
manifest (command, model hash, parameters, tool version, timestamp).  Outputs
are deterministic for identical inputs; set SOURCE_DATE_EPOCH to pin the
manifest timestamp.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import RefractError
from .charroots import solve_roots
from .distribution import (
    cdf_lower,
    cdf_upper,
    occupation_transform,
    pdf,
    proposition21_cdf,
    resolvent_cdf_complex,
)
from .kernels import build_kernels
from .laplace import InversionConfig, invert
from .mc_oracle import SimConfig, estimate_killed_probability
from .model import ModelSpec, QuerySpec, load_model, model_to_dict, validate_model
from .pricing import Payoff, PricingSpec, esscher_calibrate, price_gmdb, price_gmmb
from .wiener_hopf import all_factors

_EXIT_OK = 0
_EXIT_DOMAIN = 1
_EXIT_USAGE = 2


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _model_hash(spec: ModelSpec) -> str:
    canon = json.dumps(model_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _manifest(command: str, spec: ModelSpec | None, params: dict) -> dict:
    return {
        "command": command,
        "model_hash": _model_hash(spec) if spec is not None else "",
        "parameters": {k: v for k, v in sorted(params.items()) if v is not None},
        "tool_version": __version__,
        "timestamp": _timestamp(),
    }


def _cnum(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header: list[str], rows: list[list[float]], manifest: dict,
              out: str | None) -> None:
    lines = ["# manifest: " + json.dumps(manifest, sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise ValueError
    except ValueError as exc:
        raise RefractError(f"bad grid spec {text!r}, expected a:b:n") from exc
    return np.linspace(a, b, n)


def _read_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise RefractError(f"cannot read {what} file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RefractError(f"{what} file {path!r} is not valid JSON: {exc}") from exc


def _load(args) -> ModelSpec:
    from .model import model_from_dict

    spec = model_from_dict(_read_json(args.model, "model"))
    report = validate_model(spec)
    if not report.passed:
        raise RefractError(
            "invalid model: " + "; ".join(c.name for c in report.failures())
        )
    return spec


def _positive_q(args) -> float:
    if args.q is None or args.q <= 0:
        raise RefractError("q must be positive")
    return args.q


# --- subcommands ---------------------------------------------------------------

def _cmd_roots(args) -> int:
    spec = _load(args)
    q = _positive_q(args)
    roots = solve_roots(spec, q)
    doc = {
        "manifest": _manifest("roots", spec, {"q": q}),
        "q": q,
        "beta": [_cnum(z) for z in roots.beta],
        "beta_hat": [_cnum(z) for z in roots.beta_hat],
        "gamma": [_cnum(z) for z in roots.gamma],
        "gamma_hat": [_cnum(z) for z in roots.gamma_hat],
    }
    _emit_json(doc, args.out)
    return _EXIT_OK


def _cmd_factors(args) -> int:
    spec = _load(args)
    q = _positive_q(args)
    roots = solve_roots(spec, q)
    fac = all_factors(spec, roots)
    def as_doc(f):
        return {
            "poles": [_cnum(z) for z in f.poles],
            "residues": [_cnum(z) for z in f.residues],
            "constant": _cnum(f.constant),
        }
    doc = {
        "manifest": _manifest("factors", spec, {"q": q}),
        "q": q,
        "sup_X": as_doc(fac.sup_X),
        "sup_Y": as_doc(fac.sup_Y),
        "inf_X": as_doc(fac.inf_X),
        "inf_Y": as_doc(fac.inf_Y),
    }
    _emit_json(doc, args.out)
    return _EXIT_OK


def _dist_values(spec: ModelSpec, q: float, x: float, ys: np.ndarray,
                 what: str, method: str) -> list[list[float]]:
    roots = solve_roots(spec, q)
    ks = build_kernels(spec, roots)
    rows = []
    for y in ys:
        query = QuerySpec(q=q, x=x, y=float(y))
        if what == "pdf":
            val = pdf(spec, ks, query)
        elif method == "prop21":
            val = 1.0 - proposition21_cdf(spec, roots, query)
        else:
            if y <= spec.b:
                val = cdf_lower(spec, ks, query)
            else:
                val = 1.0 - cdf_upper(spec, ks, query)
        rows.append([float(y), val])
    return rows


def _cmd_dist(args, what: str) -> int:
    spec = _load(args)
    q = _positive_q(args)
    ys = _parse_grid(args.y_grid)
    rows = _dist_values(spec, q, args.x, ys, what, args.method)
    man = _manifest(f"dist-{what}", spec,
                    {"q": q, "x": args.x, "y_grid": args.y_grid, "method": args.method})
    _emit_csv(["y", "cdf" if what == "cdf" else "pdf"], rows, man, args.out)
    return _EXIT_OK


def _cmd_occupation(args) -> int:
    spec = _load(args)
    q = _positive_q(args)
    ys = _parse_grid(args.y_grid)
    roots = solve_roots(spec, q)
    ks = build_kernels(spec, roots)
    rows = []
    for y in ys:
        val = occupation_transform(spec, ks, QuerySpec(q=q, x=args.x, y=float(y)))
        rows.append([float(y), val])
    man = _manifest("occupation", spec, {"q": q, "x": args.x, "y_grid": args.y_grid})
    _emit_csv(["y", "occupation_transform"], rows, man, args.out)
    return _EXIT_OK


def _cmd_invert(args) -> int:
    spec = _load(args)
    if args.t is None or args.t <= 0:
        raise RefractError("t must be positive")

    def transform(qq: complex) -> complex:
        roots = solve_roots(spec, qq)
        ks = build_kernels(spec, roots)
        return resolvent_cdf_complex(spec, ks, args.x, args.y) / qq

    cfg = InversionConfig()
    value = invert(transform, args.t, cfg=cfg, verify=args.verify)
    doc = {
        "manifest": _manifest("invert", spec,
                              {"t": args.t, "x": args.x, "y": args.y,
                               "verify": bool(args.verify)}),
        "t": args.t,
        "x": args.x,
        "y": args.y,
        "probability_below": value,
    }
    _emit_json(doc, args.out)
    return _EXIT_OK


def _load_pricing(path: str) -> PricingSpec:
    d = _read_json(path, "pricing")
    try:
        pd = d["payoff"]
        payoff = Payoff(
            kind=pd["type"],
            strike=pd.get("K"),
            table=tuple((float(a), float(g)) for a, g in pd.get("table", [])) or None,
        )
        return PricingSpec(
            r=float(d["r"]), F0=float(d["F0"]), B=float(d["B"]),
            fee_rate=float(d["fee_rate"]), payoff=payoff,
            mortality=tuple((float(m["w"]), float(m["q"])) for m in d.get("mortality", [])),
            T=float(d.get("T", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RefractError(f"malformed pricing document: {exc}") from exc


def _cmd_price(args) -> int:
    spec = _load(args)
    pricing = _load_pricing(args.pricing)
    tilted, c_star = esscher_calibrate(spec, pricing)
    if args.product == "gmdb":
        price = price_gmdb(tilted, pricing)
    else:
        price = price_gmmb(tilted, pricing, verify=args.verify)
    doc = {
        "manifest": _manifest(f"price {args.product}", spec,
                              {"pricing": os.path.basename(args.pricing),
                               "verify": bool(args.verify)}),
        "product": args.product,
        "price": price,
        "c_star": c_star,
        "diagnostics": {
            "b": pricing.b,
            "tilted_mu": tilted.mu,
            "tilted_lambda_plus": tilted.lambda_plus,
            "tilted_lambda_minus": tilted.lambda_minus,
        },
    }
    _emit_json(doc, args.out)
    return _EXIT_OK


def _cmd_mc_validate(args) -> int:
    spec = _load(args)
    q = _positive_q(args)
    roots = solve_roots(spec, q)
    ks = build_kernels(spec, roots)
    query = QuerySpec(q=q, x=args.x, y=args.y)
    if args.mode == "above":
        if args.y >= spec.b:
            analytic = cdf_upper(spec, ks, query)
        else:
            analytic = 1.0 - cdf_lower(spec, ks, query)
    else:
        if args.y <= spec.b:
            analytic = cdf_lower(spec, ks, query)
        else:
            analytic = 1.0 - cdf_upper(spec, ks, query)
    cfg = SimConfig(paths=args.paths, dt=args.dt, seed=args.seed,
                    threads=args.threads, horizon=args.horizon)
    est = estimate_killed_probability(spec, cfg, q, args.x, args.y, mode=args.mode)
    passed = est.agrees(analytic, n_se=3.0)
    doc = {
        "manifest": _manifest("mc validate", spec,
                              {"q": q, "x": args.x, "y": args.y, "mode": args.mode,
                               "paths": args.paths, "dt": args.dt, "seed": args.seed,
                               "threads": args.threads, "horizon": args.horizon}),
        "analytic": analytic,
        "mc_value": est.value,
        "mc_std_error": est.std_error,
        "paths": est.paths,
        "pass_3se": bool(passed),
    }
    _emit_json(doc, args.out)
    return _EXIT_OK


def _cmd_selfcheck(args) -> int:
    spec = _load(args)
    q = _positive_q(args)
    checks: list[tuple[str, bool, str]] = []

    def record(name: str, passed: bool, detail: str = ""):
        checks.append((name, bool(passed), detail))

    from .charroots import kappa
    roots = solve_roots(spec, q)
    res = max(
        max(abs(kappa(spec, u) - q) for u in np.concatenate([roots.beta, -roots.gamma])),
        max(abs(kappa(spec, u, True) - q)
            for u in np.concatenate([roots.beta_hat, -roots.gamma_hat])),
    )
    record("root-residuals", res <= 1e-10 * (1 + q), f"max residual {res:.2e}")

    fac = all_factors(spec, roots)
    worst = 0.0
    for theta in np.linspace(-10, 10, 20):
        lhs = fac.sup_X(-1j * theta) * fac.inf_X(1j * theta)
        rhs = q / (q - kappa(spec, 1j * theta))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    record("wiener-hopf-identity", worst <= 1e-9, f"max rel err {worst:.2e}")

    ks = build_kernels(spec, roots)
    record("kernel-f1-f2-at-zero",
           abs(ks.f1_at_zero - ks.f2_at_zero) <= 1e-10,
           f"|F1(0)-F2(0)| = {abs(ks.f1_at_zero - ks.f2_at_zero):.2e}")
    prod_id = abs(np.prod(roots.beta_hat) / np.prod(roots.beta)
                  - np.prod(roots.gamma) / np.prod(roots.gamma_hat))
    record("root-product-identity", prod_id <= 1e-10, f"gap {prod_id:.2e}")

    for x in (spec.b - 0.3, spec.b, spec.b + 0.4):
        query = QuerySpec(q=q, x=x, y=spec.b)
        gap = abs(cdf_upper(spec, ks, query) + cdf_lower(spec, ks, query) - 1.0)
        record(f"mass-split@x={x:.3g}", gap <= 1e-12, f"gap {gap:.2e}")

    try:
        y_probe = spec.b + 0.5
        q1 = QuerySpec(q=q, x=spec.b - 0.2, y=y_probe)
        gap = abs(cdf_upper(spec, ks, q1) - proposition21_cdf(spec, roots, q1))
        record("route-agreement", gap <= 1e-8, f"gap {gap:.2e}")
    except RefractError as exc:
        record("route-agreement", spec.delta == 0.0, f"skipped: {exc}")

    width = max(len(n) for n, _, _ in checks)
    for name, passed, detail in checks:
        print(f"[{'PASS' if passed else 'FAIL'}] {name.ljust(width)}  {detail}")
    all_pass = all(p for _, p, _ in checks)
    doc = {
        "manifest": _manifest("selfcheck", spec, {"q": q}),
        "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in checks],
        "passed": all_pass,
    }
    if args.out:
        _emit_json(doc, args.out)
    return _EXIT_OK if all_pass else _EXIT_DOMAIN


# --- parser ----------------------------------------------------------------------

def _add_common(p, model=True):
    if model:
        p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refract",
                                 description="refracted jump-diffusion toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="root families of the characteristic equation")
    _add_common(p)
    p.add_argument("--q", type=float, required=True)

    p = sub.add_parser("factors", help="Wiener-Hopf factors in pole-residue form")
    _add_common(p)
    p.add_argument("--q", type=float, required=True)

    for what in ("dist-cdf", "dist-pdf"):
        p = sub.add_parser(what, help=f"resolvent {what[5:]} on a y grid (CSV)")
        _add_common(p)
        p.add_argument("--q", type=float, required=True)
        p.add_argument("--x", type=float, default=0.0)
        p.add_argument("--y-grid", required=True, help="a:b:n linear grid")
        p.add_argument("--method", choices=["thm4", "prop21"], default="thm4")

    p = sub.add_parser("occupation", help="occupation-time double transform (CSV)")
    _add_common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y-grid", required=True)

    p = sub.add_parser("invert", help="fixed-time probability via Laplace inversion")
    _add_common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--verify", action="store_true")

    p = sub.add_parser("price", help="variable-annuity pricing")
    p.add_argument("product", choices=["gmdb", "gmmb"])
    _add_common(p)
    p.add_argument("--pricing", required=True, help="pricing JSON file")
    p.add_argument("--verify", action="store_true")

    p_mc = sub.add_parser("mc", help="Monte Carlo oracle")
    mc_sub = p_mc.add_subparsers(dest="mc_command", required=True)
    p = mc_sub.add_parser("validate", help="analytic vs MC at 3 standard errors")
    _add_common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--mode", choices=["above", "below"], default="above")
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--threads", type=int,
                   default=int(os.environ["REFRACT_THREADS"])
                   if os.environ.get("REFRACT_THREADS") else None)

    p = sub.add_parser("selfcheck", help="run the invariant battery on a model")
    _add_common(p)
    p.add_argument("--q", type=float, required=True)

    return ap


def dispatch(argv: list[str]) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "roots":
            return _cmd_roots(args)
        if args.command == "factors":
            return _cmd_factors(args)
        if args.command == "dist-cdf":
            return _cmd_dist(args, "cdf")
        if args.command == "dist-pdf":
            return _cmd_dist(args, "pdf")
        if args.command == "occupation":
            return _cmd_occupation(args)
        if args.command == "invert":
            return _cmd_invert(args)
        if args.command == "price":
            return _cmd_price(args)
        if args.command == "mc":
            return _cmd_mc_validate(args)
        if args.command == "selfcheck":
            return _cmd_selfcheck(args)
        raise RefractError(f"unknown command {args.command!r}")
    except RefractError as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return _EXIT_DOMAIN


def main(argv: list[str] | None = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
