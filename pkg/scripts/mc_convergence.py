#!/usr/bin/env python3
"""Monte Carlo vs analytic convergence study on the reference model: sweep
path counts and step sizes, print gap/SE ratios."""

import argparse
import math
import time

from refract.charroots import solve_roots
from refract.distribution import cdf_upper
from refract.kernels import build_kernels
from refract.mc_oracle import SimConfig, estimate_killed_probability
from refract.model import QuerySpec, kou_reference_model


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, default=0.1)
    ap.add_argument("--y", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--paths", type=int, nargs="+",
                    default=[5_000, 20_000, 80_000])
    ap.add_argument("--dts", type=float, nargs="+", default=[2e-3, 1e-3])
    args = ap.parse_args()

    spec = kou_reference_model()
    roots = solve_roots(spec, args.q)
    ks = build_kernels(spec, roots)
    analytic = cdf_upper(spec, ks, QuerySpec(q=args.q, x=0.0, y=args.y))
    horizon = math.log(args.q / 1e-6) / args.q
    print(f"analytic P(U_e(q) > {args.y}) = {analytic:.8f}   horizon {horizon:.1f}")
    print(f"{'paths':>8} {'dt':>8} {'estimate':>12} {'se':>10} {'gap/se':>8} {'secs':>7}")
    for dt in args.dts:
        for paths in args.paths:
            cfg = SimConfig(paths=paths, dt=dt, horizon=horizon, seed=args.seed)
            t0 = time.time()
            est = estimate_killed_probability(spec, cfg, args.q, 0.0, args.y)
            took = time.time() - t0
            ratio = abs(est.value - analytic) / est.std_error
            print(f"{paths:>8} {dt:>8g} {est.value:>12.8f} {est.std_error:>10.2e} "
                  f"{ratio:>8.2f} {took:>7.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
