"""Resolvent law of the refracted process.

Two independent evaluation routes are implemented:

* the convolution route (kernel measure plus F1/F2 corrections), valid on
  either side of the threshold, with every convolution integral evaluated by
  exact termwise integration of exponential products;
* the root-expansion route (three-branch closed form above the threshold),
  kept as a high-precision internal cross-check behind a method switch.

The module also exposes the occupation-time transform, the one-sided
exit/overshoot transforms of the driving processes, and the piecewise
exponential representation of the density used by the pricing integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, MultipleRootError
from .charroots import RootSet
from .kernels import (
    KernelSet,
    _kq_cdf_complex,
    _kq_density_complex,
    ensure_real,
)
from .model import JumpMixture, ModelSpec, QuerySpec
from .wiener_hopf import factor_inf_Y, factor_sup_X, factor_sup_Y

_BOUNDARY_EPS = 1e-12
_CLAMP_RAISE = 1e-8
_CLUSTER_TOL = 1e-9


def _int_exp(rate: complex, lo: float, hi: float) -> complex:
    """Exact integral of e^{rate*u} over [lo, hi]."""
    if rate == 0:
        return hi - lo
    return (np.exp(rate * hi) - np.exp(rate * lo)) / rate


def _int_exp_pref(pref: complex, rate: complex, lo: float, hi: float) -> complex:
    """e^pref * integral of e^{rate*u} over [lo, hi], with the prefactor folded
    into the endpoint exponentials so decaying products never hit 0 * inf."""
    if rate == 0:
        return np.exp(pref) * (hi - lo)
    return (np.exp(pref + rate * hi) - np.exp(pref + rate * lo)) / rate


def _clamp01(value: float, what: str) -> float:
    if value < -_CLAMP_RAISE or value > 1 + _CLAMP_RAISE:
        raise EvaluationError(f"{what} = {value} outside [0,1] beyond tolerance")
    return min(max(value, 0.0), 1.0)


def _convolve_upper(ks: KernelSet, coeffs: np.ndarray, w: float, a: float) -> complex:
    """sum_m coeffs[m] * int_a^w e^{-beta_hat_m (w-z)} k_q(z) dz for a <= w."""
    row = ks.kq.sum(axis=1)  # kernel weight on e^{-beta_i z}, z >= 0
    col = ks.kq.sum(axis=0)  # kernel weight on e^{gamma_hat_j z}, z < 0
    lo_n, hi_n = a, min(w, 0.0)
    lo_p, hi_p = max(a, 0.0), w
    total = 0j
    for m, bh in enumerate(ks.beta_hat):
        if coeffs[m] == 0:
            continue
        pref = -bh * w
        acc = 0j
        if hi_n > lo_n:
            for j, gh in enumerate(ks.gamma_hat):
                acc += col[j] * _int_exp_pref(pref, bh + gh, lo_n, hi_n)
        if hi_p > lo_p:
            for i, be in enumerate(ks.beta):
                acc += row[i] * _int_exp_pref(pref, bh - be, lo_p, hi_p)
        total += coeffs[m] * acc
    return total


def _convolve_lower(ks: KernelSet, coeffs: np.ndarray, w: float, a: float) -> complex:
    """sum_n coeffs[n] * int_w^a e^{gamma_n (w-z)} k_q(z) dz for w <= a."""
    row = ks.kq.sum(axis=1)
    col = ks.kq.sum(axis=0)
    lo_n, hi_n = w, min(a, 0.0)
    lo_p, hi_p = max(w, 0.0), a
    total = 0j
    for n, gn in enumerate(ks.gamma):
        if coeffs[n] == 0:
            continue
        pref = gn * w
        acc = 0j
        if hi_n > lo_n:
            for j, gh in enumerate(ks.gamma_hat):
                acc += col[j] * _int_exp_pref(pref, gh - gn, lo_n, hi_n)
        if hi_p > lo_p:
            for i, be in enumerate(ks.beta):
                acc += row[i] * _int_exp_pref(pref, -(gn + be), lo_p, hi_p)
        total += coeffs[n] * acc
    return total


# --- convolution route (analytic in q; realness enforced by public wrappers) -

def _upper_tail_complex(spec: ModelSpec, ks: KernelSet, x: float, y: float) -> complex:
    """P_x(U_{e(q)} > y) for y >= b."""
    w, a = y - x, spec.b - x
    val = 1.0 - _kq_cdf_complex(ks, w)
    if abs(y - spec.b) < _BOUNDARY_EPS:
        return val
    return val - _convolve_upper(ks, ks.f1_level_coeffs, w, a)


def _lower_tail_complex(spec: ModelSpec, ks: KernelSet, x: float, y: float) -> complex:
    """P_x(U_{e(q)} < y) for y <= b."""
    w, a = y - x, spec.b - x
    val = _kq_cdf_complex(ks, w)
    if abs(y - spec.b) < _BOUNDARY_EPS:
        return val
    return val - _convolve_lower(ks, ks.f2_level_coeffs, w, a)


def resolvent_cdf_complex(spec: ModelSpec, ks: KernelSet, x: float, y: float) -> complex:
    """P_x(U_{e(q)} <= y) as an analytic function of the (possibly complex)
    killing rate baked into the kernel set."""
    if y < spec.b:
        return _lower_tail_complex(spec, ks, x, y)
    return 1.0 - _upper_tail_complex(spec, ks, x, y)


def cdf_upper(spec: ModelSpec, ks: KernelSet, query: QuerySpec) -> float:
    """P_x(U_{e(q)} > y) for y >= b via the convolution route."""
    if query.y < spec.b - _BOUNDARY_EPS:
        raise EvaluationError("y below threshold: use cdf_lower")
    val = ensure_real(_upper_tail_complex(spec, ks, query.x, query.y), "cdf_upper")
    return _clamp01(val, "cdf_upper")


def cdf_lower(spec: ModelSpec, ks: KernelSet, query: QuerySpec) -> float:
    """P_x(U_{e(q)} < y) for y <= b via the convolution route."""
    if query.y > spec.b + _BOUNDARY_EPS:
        raise EvaluationError("y above threshold: use cdf_upper")
    val = ensure_real(_lower_tail_complex(spec, ks, query.x, query.y), "cdf_lower")
    return _clamp01(val, "cdf_lower")


def _pdf_complex(spec: ModelSpec, ks: KernelSet, x: float, y: float) -> complex:
    w, a = y - x, spec.b - x
    if abs(y - spec.b) < _BOUNDARY_EPS:
        return (1.0 + ks.f1_at_zero) * _kq_density_complex(ks, w)
    if y > spec.b:
        val = (1.0 + ks.f1_at_zero) * _kq_density_complex(ks, w)
        return val + _convolve_upper(ks, ks.f1_coeffs, w, a)
    val = (1.0 + ks.f2_at_zero) * _kq_density_complex(ks, w)
    return val - _convolve_lower(ks, ks.f2_coeffs, w, a)


def pdf(spec: ModelSpec, ks: KernelSet, query: QuerySpec) -> float:
    """Resolvent density f_q(y) of the refracted process started at x."""
    val = ensure_real(_pdf_complex(spec, ks, query.x, query.y), "pdf")
    if val < -1e-10:
        raise EvaluationError(f"pdf negative beyond tolerance: {val:.3e}")
    return max(val, 0.0)


def occupation_transform(spec: ModelSpec, ks: KernelSet, query: QuerySpec) -> float:
    """Double transform of the occupation time below y:
    int_0^inf e^{-qt} E_x[ int_0^t 1{U_s < y} ds ] dt = P_x(U_{e(q)} < y) / q^2."""
    if query.y <= spec.b:
        p_below = cdf_lower(spec, ks, query)
    else:
        p_below = 1.0 - cdf_upper(spec, ks, query)
    q = complex(ks.q).real
    return p_below / q**2


# --- root-expansion route -----------------------------------------------------

@dataclass(frozen=True)
class PropositionCoefficients:
    """Branch coefficients of the three-region closed form of the upper tail."""

    y: float
    J: np.ndarray
    H_hat: np.ndarray
    Q_hat: np.ndarray
    P_hat: np.ndarray
    P_hat_star: np.ndarray


def _jump_poly(x: complex, mix: JumpMixture, sign: float, active: bool) -> complex:
    """prod (x - sign*rate)^order over the mixture terms."""
    val = 1.0 + 0j
    if active:
        for t in mix.terms:
            val *= (x - sign * t.rate) ** t.order
    return val


def _check_clusters(a: np.ndarray, b: np.ndarray, what: str) -> None:
    for u in a:
        for v in b:
            if abs(u - v) < _CLUSTER_TOL * (1 + abs(u)):
                raise MultipleRootError(
                    f"residue extraction refused: clustered poles {u} ~ {v} in {what}"
                )


def build_proposition_coefficients(spec: ModelSpec, roots: RootSet,
                                   y: float) -> PropositionCoefficients:
    """Assemble the closed-form branch coefficients for level y > b."""
    if y <= spec.b:
        raise EvaluationError("root-expansion route requires y > b")
    b = spec.b
    beta, beta_hat, gamma_hat = roots.beta, roots.beta_hat, roots.gamma_hat
    _check_clusters(beta, beta_hat, "beta vs beta_hat")

    c_hat = factor_sup_Y(spec, roots).residues
    d_hat = factor_inf_Y(spec, roots).residues

    h_hat = np.array([
        c_hat[k] / beta_hat[k] * np.sum(d_hat / (beta_hat[k] + gamma_hat))
        for k in range(len(beta_hat))
    ])
    q_hat = np.array([
        d_hat[k] * np.sum(c_hat / (beta_hat * (beta_hat + gamma_hat[k])))
        - d_hat[k] / gamma_hat[k]
        for k in range(len(gamma_hat))
    ])
    decay = np.exp(beta_hat * (b - y))
    p_hat_star = np.array([
        -np.sum(c_hat / beta_hat * d_hat[k] / (beta_hat + gamma_hat[k]) * decay)
        for k in range(len(gamma_hat))
    ])

    has_plus = spec.lambda_plus > 0
    has_minus = spec.lambda_minus > 0
    w_k = np.empty(len(beta_hat), dtype=complex)
    for k, bh in enumerate(beta_hat):
        num = np.prod(bh - beta) * np.prod(bh + gamma_hat)
        den = (_jump_poly(bh, spec.jumps_plus, 1.0, has_plus)
               * _jump_poly(bh, spec.jumps_minus, -1.0, has_minus))
        w_k[k] = num / den

    def weighted_sum(x: complex) -> complex:
        return np.sum(w_k * (-h_hat) * decay / (x - beta_hat))

    j = np.empty(len(beta), dtype=complex)
    for i, be in enumerate(beta):
        num = (_jump_poly(be, spec.jumps_plus, 1.0, has_plus)
               * _jump_poly(be, spec.jumps_minus, -1.0, has_minus))
        den = np.prod(be - np.delete(beta, i)) * np.prod(be + gamma_hat)
        j[i] = num / den * weighted_sum(be)

    p_hat = np.empty(len(gamma_hat), dtype=complex)
    for k, gh in enumerate(gamma_hat):
        x0 = -gh
        num = (_jump_poly(x0, spec.jumps_plus, 1.0, has_plus)
               * _jump_poly(x0, spec.jumps_minus, -1.0, has_minus))
        den = np.prod(x0 - beta) * np.prod(np.delete(gamma_hat, k) - gh)
        p_hat[k] = -num / den * weighted_sum(x0)

    return PropositionCoefficients(
        y=y, J=j, H_hat=h_hat, Q_hat=q_hat, P_hat=p_hat, P_hat_star=p_hat_star
    )


def proposition21_cdf(spec: ModelSpec, roots: RootSet, query: QuerySpec) -> float:
    """P_x(U_{e(q)} > y) for y > b via the three-branch root expansion."""
    coefs = build_proposition_coefficients(spec, roots, query.y)
    x, y, b = query.x, coefs.y, spec.b
    if x <= b:
        val = np.sum(coefs.J * np.exp(roots.beta * (x - b)))
    elif x <= y:
        val = (np.sum(coefs.H_hat * np.exp(roots.beta_hat * (x - y)))
               + np.sum(coefs.P_hat * np.exp(roots.gamma_hat * (b - x))))
    else:
        val = (1.0 + np.sum(coefs.Q_hat * np.exp(roots.gamma_hat * (y - x)))
               + np.sum(coefs.P_hat * np.exp(roots.gamma_hat * (b - x))))
    return _clamp01(ensure_real(val, "proposition21_cdf"), "proposition21_cdf")


# --- one-sided exit / overshoot transforms ------------------------------------

@dataclass(frozen=True)
class FirstPassageTransform:
    """Coefficients of E[e^{-q tau} ; overshoot in dy]: an atom at zero overshoot
    plus mixed-Erlang overshoot terms in the original jump basis."""

    level: float
    creeping: complex                       # weight of the zero-overshoot atom
    rates: tuple[complex, ...]              # jump rate per overshoot term
    orders: tuple[int, ...]                 # Erlang order per overshoot term
    coeffs: tuple[complex, ...]

    def total(self) -> complex:
        """E[e^{-q tau}] -- the transform with the overshoot integrated out."""
        return self.creeping + sum(self.coeffs)


def _poly_shift(coeffs: np.ndarray, s0: complex) -> np.ndarray:
    """Taylor coefficients of P(s0 + eps) given ascending coefficients of P."""
    n = len(coeffs)
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        ci = coeffs[i]
        if ci == 0:
            continue
        # (s0 + eps)^i expanded binomially
        for k in range(i + 1):
            out[k] += ci * math.comb(i, k) * s0 ** (i - k)
    return out


def _series_reciprocal_power(a: complex, m: int, length: int) -> np.ndarray:
    """Series of (a + eps)^(-m) around eps=0, up to eps^(length-1)."""
    out = np.empty(length, dtype=complex)
    for l in range(length):
        out[l] = (-1) ** l * math.comb(m + l - 1, l) * a ** (-(m + l))
    return out


def _series_mul(a: np.ndarray, b: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=complex)
    for i in range(min(len(a), length)):
        if a[i] == 0:
            continue
        top = min(len(b), length - i)
        out[i:i + top] += a[i] * b[:top]
    return out


def _overshoot_expansion(family: np.ndarray, residues: np.ndarray,
                         mix: JumpMixture, depth: float):
    """Shared rational expansion of the exit transform.

    family/residues: roots and residues of the relevant one-sided factor;
    mix: jump mixture whose rates are the transform poles;
    depth: distance from the start point to the barrier (>= 0).
    """
    if depth < 0:
        raise EvaluationError("exit transform needs a nonnegative barrier distance")
    rates = mix.rates() if not mix.is_empty else np.array([], dtype=complex)
    orders = mix.orders() if not mix.is_empty else np.array([], dtype=int)
    for rt in rates:
        for be in family:
            if abs(rt - be) < _CLUSTER_TOL * (1 + abs(rt)):
                raise MultipleRootError(
                    f"overshoot expansion refused: jump rate {rt} clusters with root {be}"
                )

    weights = residues * np.exp(-family * depth)
    scale = np.prod(rates ** orders) / np.prod(family)
    creeping = scale * np.sum(weights)

    # numerator N(s) = sum_k weights_k * prod_{i != k} (s + family_i), ascending
    n_coeffs = np.zeros(len(family), dtype=complex)
    for k in range(len(family)):
        poly = np.array([1.0 + 0j])
        for i in range(len(family)):
            if i != k:
                poly = np.convolve(poly, np.array([family[i], 1.0 + 0j]))
        n_coeffs[: len(poly)] += weights[k] * poly

    out_rates, out_orders, out_coeffs = [], [], []
    for k, (rate_k, m_k) in enumerate(zip(rates, orders)):
        s0 = -rate_k
        series = _poly_shift(n_coeffs, s0)[: m_k]
        if len(series) < m_k:
            series = np.pad(series, (0, m_k - len(series)))
        for k2, (rate_2, m_2) in enumerate(zip(rates, orders)):
            if k2 == k:
                continue
            series = _series_mul(series, _series_reciprocal_power(rate_2 + s0, m_2, m_k), m_k)
        # residue of order (m_k - l) at the pole is series[l]
        for j in range(1, m_k + 1):
            out_rates.append(rate_k)
            out_orders.append(j)
            out_coeffs.append(scale * series[m_k - j] / rate_k**j)
    return creeping, out_rates, out_orders, out_coeffs


def first_passage_up(spec: ModelSpec, roots: RootSet, x: float) -> FirstPassageTransform:
    """Transform of the first passage of X above level x >= 0 with overshoot."""
    factor = factor_sup_X(spec, roots)
    creeping, rates, orders, coeffs = _overshoot_expansion(
        roots.beta, factor.residues, spec.jumps_plus, x
    )
    return FirstPassageTransform(
        level=x, creeping=creeping,
        rates=tuple(rates), orders=tuple(orders), coeffs=tuple(coeffs),
    )


def first_passage_down(spec: ModelSpec, roots: RootSet, x: float) -> FirstPassageTransform:
    """Transform of the first passage of the fully refracted process below
    level x <= 0 with (negative) overshoot."""
    factor = factor_inf_Y(spec, roots)
    creeping, rates, orders, coeffs = _overshoot_expansion(
        roots.gamma_hat, factor.residues, spec.jumps_minus, -x
    )
    return FirstPassageTransform(
        level=x, creeping=creeping,
        rates=tuple(rates), orders=tuple(orders), coeffs=tuple(coeffs),
    )


# --- piecewise exponential density (start value x = 0) ------------------------

@dataclass(frozen=True)
class DensityPiece:
    lo: float
    hi: float
    rates: np.ndarray
    coeffs: np.ndarray

    def __call__(self, y: float) -> complex:
        return np.sum(self.coeffs * np.exp(self.rates * y))


def density_pieces(spec: ModelSpec, ks: KernelSet) -> list[DensityPiece]:
    """The resolvent density started at 0 as explicit exponential sums on the
    regions cut by the threshold and the kernel kink at the origin."""
    b = spec.b
    row = ks.kq.sum(axis=1)
    col = ks.kq.sum(axis=0)
    beta, beta_hat = ks.beta, ks.beta_hat
    gamma, gamma_hat = ks.gamma, ks.gamma_hat
    f1, f2 = ks.f1_coeffs, ks.f2_coeffs
    one_f1 = 1.0 + ks.f1_at_zero
    one_f2 = 1.0 + ks.f2_at_zero

    def new_bucket():
        return {}

    def add(bucket, rate, coef):
        if coef == 0:
            return
        key = complex(rate)
        bucket[key] = bucket.get(key, 0j) + coef

    def finish(bucket, lo, hi):
        rates = np.array(list(bucket.keys()), dtype=complex)
        coeffs = np.array([bucket[k] for k in bucket], dtype=complex)
        return DensityPiece(lo=lo, hi=hi, rates=rates, coeffs=coeffs)

    pieces = []
    if b >= 0:
        # region (b, inf): upper branch, kernel support entirely on z >= 0
        up = new_bucket()
        for i, be in enumerate(beta):
            add(up, -be, one_f1 * row[i])
        for m, bh in enumerate(beta_hat):
            if f1[m] == 0:
                continue
            for i, be in enumerate(beta):
                c = f1[m] * row[i] / (bh - be)
                add(up, -be, c)
                add(up, -bh, -c * np.exp((bh - be) * b))
        pieces.append(finish(up, b, math.inf))

        # region (0, b): lower branch, kernel on z in (y, b), all >= 0
        if b > 0:
            mid = new_bucket()
            for i, be in enumerate(beta):
                add(mid, -be, one_f2 * row[i])
            for n, gn in enumerate(gamma):
                if f2[n] == 0:
                    continue
                for i, be in enumerate(beta):
                    c = f2[n] * row[i] / (gn + be)
                    add(mid, -be, -c)
                    add(mid, gn, c * np.exp(-(gn + be) * b))
            pieces.append(finish(mid, 0.0, b))

        # region (-inf, 0): lower branch, kernel split at the origin
        low = new_bucket()
        for jj, gh in enumerate(gamma_hat):
            add(low, gh, one_f2 * col[jj])
        for n, gn in enumerate(gamma):
            if f2[n] == 0:
                continue
            for jj, gh in enumerate(gamma_hat):
                c = f2[n] * col[jj] / (gh - gn)
                add(low, gh, c)
                add(low, gn, -c)
            for i, be in enumerate(beta):
                c = f2[n] * row[i] * (1.0 - np.exp(-(gn + be) * b)) / (gn + be)
                add(low, gn, -c)
        pieces.append(finish(low, -math.inf, 0.0))
    else:
        # region (-inf, b): lower branch, kernel entirely on z < 0
        low = new_bucket()
        for jj, gh in enumerate(gamma_hat):
            add(low, gh, one_f2 * col[jj])
        for n, gn in enumerate(gamma):
            if f2[n] == 0:
                continue
            for jj, gh in enumerate(gamma_hat):
                c = f2[n] * col[jj] / (gh - gn)
                add(low, gn, -c * np.exp((gh - gn) * b))
                add(low, gh, c)
        pieces.append(finish(low, -math.inf, b))

        # region (b, 0): upper branch, kernel on z in (b, y), all < 0
        mid = new_bucket()
        for jj, gh in enumerate(gamma_hat):
            add(mid, gh, one_f1 * col[jj])
        for m, bh in enumerate(beta_hat):
            if f1[m] == 0:
                continue
            for jj, gh in enumerate(gamma_hat):
                c = f1[m] * col[jj] / (bh + gh)
                add(mid, gh, c)
                add(mid, -bh, -c * np.exp((bh + gh) * b))
        pieces.append(finish(mid, b, 0.0))

        # region (0, inf): upper branch, kernel split at the origin
        up = new_bucket()
        for i, be in enumerate(beta):
            add(up, -be, one_f1 * row[i])
        for m, bh in enumerate(beta_hat):
            if f1[m] == 0:
                continue
            for jj, gh in enumerate(gamma_hat):
                c = f1[m] * col[jj] * (1.0 - np.exp((bh + gh) * b)) / (bh + gh)
                add(up, -bh, c)
            for i, be in enumerate(beta):
                c = f1[m] * row[i] / (bh - be)
                add(up, -be, c)
                add(up, -bh, -c)
        pieces.append(finish(up, 0.0, math.inf))
    return pieces


def pieces_integral(pieces: list[DensityPiece], weight_rate: complex = 0.0) -> complex:
    """Exact integral of e^{weight_rate * y} against the piecewise density."""
    total = 0j
    for p in pieces:
        for rate, coef in zip(p.rates, p.coeffs):
            r = rate + weight_rate
            if math.isinf(p.hi):
                if r.real >= 0:
                    raise EvaluationError("payoff transform divergent (right tail)")
                total += -coef * np.exp(r * p.lo) / r
            elif math.isinf(p.lo):
                if r.real <= 0:
                    raise EvaluationError("payoff transform divergent (left tail)")
                total += coef * np.exp(r * p.hi) / r
            else:
                total += coef * _int_exp(r, p.lo, p.hi)
    return total


def pieces_integral_window(pieces: list[DensityPiece], lo: float, hi: float,
                           weight_rate: complex = 0.0) -> complex:
    """Exact integral of e^{weight_rate*y} against the density over [lo, hi]."""
    total = 0j
    for p in pieces:
        a, c = max(p.lo, lo), min(p.hi, hi)
        if not a < c:
            continue
        for rate, coef in zip(p.rates, p.coeffs):
            r = rate + weight_rate
            if math.isinf(c):
                if r.real >= 0:
                    raise EvaluationError("payoff transform divergent (right tail)")
                total += -coef * np.exp(r * a) / r
            elif math.isinf(a):
                if r.real <= 0:
                    raise EvaluationError("payoff transform divergent (left tail)")
                total += coef * np.exp(r * c) / r
            else:
                total += coef * _int_exp(r, a, c)
    return total
