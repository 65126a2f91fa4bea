"""Variable-annuity pricing under state-dependent fees.

The account follows F_t = F0 * exp(U_t) where U is the refracted process with
threshold b = ln(B/F0) and refraction drift equal to minus the fee rate (fees
are charged only while the account sits below the barrier B).  Pricing happens
under the exponential-tilt martingale measure, which keeps the model inside
the same rational-transform class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import PricingError
from .charroots import kappa, solve_roots
from .distribution import (
    DensityPiece,
    density_pieces,
    pieces_integral,
    pieces_integral_window,
)
from .kernels import build_kernels, ensure_real
from .laplace import InversionConfig, invert
from .model import JumpMixture, MixtureTerm, ModelSpec, validate_model

_STRIP_MARGIN = 1e-9


@dataclass(frozen=True)
class Payoff:
    """floor: max(F, K); call: max(F - K, 0); custom: monotone piecewise-linear
    table [(account_value, payout), ...], flat beyond the last knot."""

    kind: str
    strike: float | None = None
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind in ("floor", "call"):
            if self.strike is None or self.strike <= 0:
                raise PricingError(f"{self.kind} payoff needs a positive strike")
        elif self.kind == "custom":
            if not self.table or len(self.table) < 2:
                raise PricingError("custom payoff needs a table of >= 2 knots")
            xs = [p[0] for p in self.table]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise PricingError("custom payoff knots must be strictly increasing")
        else:
            raise PricingError(f"unknown payoff kind {self.kind!r}")

    def __call__(self, account: float) -> float:
        if self.kind == "floor":
            return max(account, self.strike)
        if self.kind == "call":
            return max(account - self.strike, 0.0)
        xs = [p[0] for p in self.table]
        gs = [p[1] for p in self.table]
        if account <= xs[0]:
            return gs[0]
        if account >= xs[-1]:
            return gs[-1]
        k = int(np.searchsorted(xs, account)) - 1
        frac = (account - xs[k]) / (xs[k + 1] - xs[k])
        return gs[k] + frac * (gs[k + 1] - gs[k])


@dataclass(frozen=True)
class PricingSpec:
    """Risk-free rate, account/barrier levels, fee rate, payoff and mortality.

    mortality is a finite exponential mixture (weight, rate) for the GMDB
    death time; T is the GMMB maturity."""

    r: float
    F0: float
    B: float
    fee_rate: float
    payoff: Payoff
    mortality: tuple[tuple[float, float], ...] = ()
    T: float = 1.0

    def __post_init__(self):
        if self.F0 <= 0 or self.B <= 0:
            raise PricingError("F0 and B must be positive")
        if self.fee_rate < 0:
            raise PricingError("fee_rate must be nonnegative")
        if self.T <= 0:
            raise PricingError("maturity must be positive")
        for w, qi in self.mortality:
            if w < 0 or qi <= 0:
                raise PricingError("mortality mixture needs w >= 0 and q > 0")
        if self.mortality:
            total = sum(w for w, _ in self.mortality)
            if abs(total - 1.0) > 1e-10:
                raise PricingError(f"mortality weights sum to {total}, expected 1")

    @property
    def b(self) -> float:
        return math.log(self.B / self.F0)


def _strip(spec: ModelSpec) -> tuple[float, float]:
    lo = -math.inf
    hi = math.inf
    if spec.lambda_plus > 0:
        hi = min(float(r.real) for r in spec.jumps_plus.rates())
    if spec.lambda_minus > 0:
        lo = -min(float(r.real) for r in spec.jumps_minus.rates())
    return lo, hi


def cumulant(spec: ModelSpec, u: float) -> float:
    """kappa(u) = ln E[e^{u X_1}] on the convergence strip."""
    lo, hi = _strip(spec)
    if not lo < u < hi:
        raise PricingError(f"cumulant divergent: u={u} outside strip ({lo}, {hi})")
    return ensure_real(kappa(spec, u), "cumulant", tol=1e-12)


def _tilt_mixture(mix: JumpMixture, lam: float, c: float, sign: float):
    """Exponentially tilt one mixture: rates shift by -sign*c, weights are
    reweighted by the transform factors, intensity scales by the normalizer."""
    if lam <= 0 or mix.is_empty:
        return mix, lam
    normalizer = 0j
    factors = []
    for rate, j, w in mix.iter_flat():
        f = (rate / (rate - sign * c)) ** j
        factors.append((rate, j, w, f))
        normalizer += w * f
    terms = {}
    for rate, j, w, f in factors:
        new_rate = rate - sign * c
        terms.setdefault(rate, {})[j] = w * f / normalizer
    new_terms = []
    for rate, by_order in terms.items():
        order = max(by_order)
        weights = tuple(by_order.get(j, 0j) for j in range(1, order + 1))
        new_terms.append(MixtureTerm(rate=rate - sign * c, order=order, weights=weights))
    new_mix = JumpMixture(terms=tuple(new_terms), side=mix.side)
    lam_new = lam * ensure_real(normalizer, "tilt normalizer", tol=1e-12)
    return new_mix, lam_new


def esscher_tilt(spec: ModelSpec, c: float) -> ModelSpec:
    """The model under the exponential tilt e^{cX}/E[e^{cX}]."""
    lo, hi = _strip(spec)
    if not lo < c < hi:
        raise PricingError(f"tilt parameter {c} outside strip ({lo}, {hi})")
    jp, lp = _tilt_mixture(spec.jumps_plus, spec.lambda_plus, c, 1.0)
    jm, lm = _tilt_mixture(spec.jumps_minus, spec.lambda_minus, c, -1.0)
    return spec.with_(mu=spec.mu + spec.sigma**2 * c,
                      lambda_plus=lp, jumps_plus=jp,
                      lambda_minus=lm, jumps_minus=jm)


def esscher_calibrate(spec: ModelSpec, pricing: PricingSpec) -> tuple[ModelSpec, float]:
    """Find c* with kappa(c*+1) - kappa(c*) = r + delta (delta = -fee_rate),
    then return the tilted model carrying the pricing refraction and threshold."""
    lo, hi = _strip(spec)
    if not hi > 1:
        raise PricingError(
            "pricing requires E[e^{X_t}] finite: smallest positive jump rate must exceed 1"
        )
    delta = -pricing.fee_rate
    target = pricing.r + delta

    def g(c: float) -> float:
        try:
            val = kappa(spec, c + 1).real - kappa(spec, c).real - target
        except (OverflowError, FloatingPointError):
            return math.inf if c > 0 else -math.inf
        return val

    def walk(limit: float, sign_wanted: float) -> float | None:
        # g is increasing in c; walk from 0 toward the strip edge until the
        # wanted sign appears
        for k in range(200):
            if math.isinf(limit):
                c = (1.0 if limit > 0 else -1.0) * 2.0 ** (k / 4.0 - 4.0)
            else:
                c = limit + (0.0 - limit) * 0.5 ** (k / 4.0)
            val = g(c)
            if math.isfinite(val) and val * sign_wanted > 0:
                return c
        return None

    c_lo_edge = lo
    c_hi_edge = hi - 1.0
    if g(0.0) == 0.0:
        a = bb = 0.0
    else:
        a = 0.0 if g(0.0) < 0 else walk(c_lo_edge, -1.0)
        bb = 0.0 if g(0.0) > 0 else walk(c_hi_edge, +1.0)
    if a is None or bb is None:
        raise PricingError("no martingale Esscher parameter in strip")
    if a == bb:
        c_star = a
    else:
        c_star = float(optimize.brentq(g, a, bb, xtol=1e-14, rtol=8.9e-16, maxiter=200))
    tilted = esscher_tilt(spec, c_star).with_(delta=delta, b=pricing.b)
    return tilted, c_star


def _payoff_integral_exact(pieces: list[DensityPiece], payoff: Payoff,
                           f0: float) -> complex:
    """Exact termwise integral of a floor/call payoff against the density."""
    y_k = math.log(payoff.strike / f0)
    if payoff.kind == "floor":
        below = payoff.strike * pieces_integral_window(pieces, -math.inf, y_k)
        above = f0 * pieces_integral_window(pieces, y_k, math.inf, weight_rate=1.0)
        return below + above
    # call
    above = f0 * pieces_integral_window(pieces, y_k, math.inf, weight_rate=1.0)
    kpart = payoff.strike * pieces_integral_window(pieces, y_k, math.inf)
    return above - kpart


def _payoff_integral_custom(pieces: list[DensityPiece], payoff: Payoff,
                            f0: float) -> complex:
    """Adaptive quadrature over the table's span plus exact flat tails; the
    density pieces may be complex when the killing rate is, so integrate the
    full complex value."""
    xs = [p[0] for p in payoff.table]
    y_lo = math.log(xs[0] / f0)
    y_hi = math.log(xs[-1] / f0)
    g_lo = payoff.table[0][1]
    g_hi = payoff.table[-1][1]
    total = (g_lo * pieces_integral_window(pieces, -math.inf, y_lo)
             + g_hi * pieces_integral_window(pieces, y_hi, math.inf))

    def integrand(y: float) -> complex:
        dens = sum(complex(p(y)) for p in pieces if p.lo <= y < p.hi)
        return payoff(f0 * math.exp(y)) * dens

    # integrate piecewise between density breakpoints and payoff knots
    knots = sorted({y_lo, y_hi, *[p.lo for p in pieces], *[p.hi for p in pieces],
                    *[math.log(x / f0) for x in xs]})
    knots = [k for k in knots if y_lo <= k <= y_hi and math.isfinite(k)]
    for a, bnd in zip(knots, knots[1:]):
        val, _ = integrate.quad(integrand, a, bnd, epsabs=1e-10, epsrel=1e-10,
                                limit=200, complex_func=True)
        total += val
    return total


def expected_payoff(tilted: ModelSpec, pricing: PricingSpec, q: complex) -> complex:
    """E[G(F_{e(q)})] under the tilted model; analytic in q so the GMMB
    transform can be inverted on the Bromwich contour."""
    qc = complex(q)
    if not qc.real > 0:
        raise PricingError(f"killing rate must have positive real part, got {q}")
    roots = solve_roots(tilted, qc if qc.imag != 0 else qc.real)
    ks = build_kernels(tilted, roots)
    pieces = density_pieces(tilted, ks)
    if pricing.payoff.kind in ("floor", "call"):
        val = _payoff_integral_exact(pieces, pricing.payoff, pricing.F0)
    else:
        val = _payoff_integral_custom(pieces, pricing.payoff, pricing.F0)
    if qc.imag == 0:
        return ensure_real(val, "expected_payoff", tol=1e-9)
    return val


def price_gmdb(tilted: ModelSpec, pricing: PricingSpec) -> float:
    """Death-benefit price: mixture of q/(r+q) discounted payoff expectations.

    Sanity note (documented, not asserted): as a mortality rate q grows large
    the summand tends to G(F0) * q/(r+q), since the killed account has no time
    to move; the limit only becomes a useful numerical check for q well above
    1e3, far outside actuarial inputs.
    """
    if not pricing.mortality:
        raise PricingError("GMDB pricing needs an exponential-mixture mortality")
    total = 0.0
    for w, qi in pricing.mortality:
        if w == 0:
            continue
        total += w * qi / (pricing.r + qi) * float(
            expected_payoff(tilted, pricing, pricing.r + qi).real
        )
    return total


def price_gmmb(tilted: ModelSpec, pricing: PricingSpec,
               cfg: InversionConfig | None = None, verify: bool = False) -> float:
    """Maturity-benefit price by Laplace inversion of the killed payoff."""

    def transform(s: complex) -> complex:
        return expected_payoff(tilted, pricing, s + pricing.r) / (s + pricing.r)

    return invert(transform, pricing.T, cfg=cfg, verify=verify)


def tilt_is_valid(tilted: ModelSpec) -> bool:
    """Esscher tilt must land back inside the model class."""
    return validate_model(tilted).passed
