"""Characteristic exponents and the root structure of psi(z) = q.

All root arithmetic happens after the change of variable z = -i*u, so the two
root families live in the right and left half of the u-plane.  The cumulant
kappa(u) = psi(-i*u) is the primitive everything else is written in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import CountMismatchError, ModelError, MultipleRootError, PoleError
from .model import ModelSpec

RESIDUAL_TOL = 1e-10
SIMPLICITY_TOL = 1e-6
_POLE_TOL = 1e-13
_NEWTON_TARGET = 1e-13


def kappa(spec: ModelSpec, u: complex, refracted: bool = False) -> complex:
    """Cumulant log E[e^{u X_1}] (or of Y = X - delta*t when refracted)."""
    drift = spec.mu - (spec.delta if refracted else 0.0)
    val = 0.5 * spec.sigma**2 * u * u + drift * u
    if spec.lambda_plus > 0:
        val += spec.lambda_plus * (spec.jumps_plus.mgf(u) - 1.0)
    if spec.lambda_minus > 0:
        val += spec.lambda_minus * (spec.jumps_minus.mgf(-u) - 1.0)
    return val


def kappa_prime(spec: ModelSpec, u: complex, refracted: bool = False) -> complex:
    drift = spec.mu - (spec.delta if refracted else 0.0)
    val = spec.sigma**2 * u + drift
    if spec.lambda_plus > 0:
        for rate, j, w in spec.jumps_plus.iter_flat():
            val += spec.lambda_plus * w * j * rate**j / (rate - u) ** (j + 1)
    if spec.lambda_minus > 0:
        for rate, j, w in spec.jumps_minus.iter_flat():
            val -= spec.lambda_minus * w * j * rate**j / (rate + u) ** (j + 1)
    return val


def _check_pole(spec: ModelSpec, u: complex) -> None:
    for mix in (spec.jumps_plus, spec.jumps_minus):
        sign = 1.0 if mix.side == "positive" else -1.0
        for t in mix.terms:
            if abs(sign * t.rate - u) < _POLE_TOL * (1 + abs(t.rate)):
                raise PoleError(f"exponent pole at u={u}")


def psi(spec: ModelSpec, z: complex) -> complex:
    """Characteristic exponent ln E[e^{i z X_1}] for real z, analytically
    continued; poles of the jump transforms are rejected."""
    u = 1j * z
    _check_pole(spec, u)
    return kappa(spec, u)


def psi_hat(spec: ModelSpec, z: complex) -> complex:
    """Exponent of the fully refracted process Y: psi(z) - i*delta*z."""
    u = 1j * z
    _check_pole(spec, u)
    return kappa(spec, u, refracted=True)


def characteristic_polynomial(spec: ModelSpec, q: complex, refracted: bool) -> np.ndarray:
    """Coefficients (ascending in u) of the cleared-denominator numerator of
    kappa(u) - q.  Its roots are exactly {beta_k} union {-gamma_k} (hatted
    families when refracted); degree 2 + sum(m_k) + sum(n_k)."""
    drift = spec.mu - (spec.delta if refracted else 0.0)
    lam_p = spec.lambda_plus if spec.lambda_plus > 0 else 0.0
    lam_m = spec.lambda_minus if spec.lambda_minus > 0 else 0.0

    plus_terms = list(spec.jumps_plus.iter_flat()) if lam_p > 0 else []
    minus_terms = list(spec.jumps_minus.iter_flat()) if lam_m > 0 else []
    plus_rates = [(t.rate, t.order) for t in spec.jumps_plus.terms] if lam_p > 0 else []
    minus_rates = [(t.rate, t.order) for t in spec.jumps_minus.terms] if lam_m > 0 else []

    def prod_poly(factors):
        # factors: iterable of (linear poly ascending, power)
        out = np.array([1.0 + 0j])
        for lin, power in factors:
            for _ in range(power):
                out = npoly.polymul(out, lin)
        return out

    # (eta - u)^m factors and (theta + u)^n factors
    d_plus_full = prod_poly([(np.array([r, -1.0 + 0j]), m) for r, m in plus_rates])
    d_minus_full = prod_poly([(np.array([r, 1.0 + 0j]), m) for r, m in minus_rates])

    base = np.array([-lam_p - lam_m - q, drift, 0.5 * spec.sigma**2], dtype=complex)
    poly = npoly.polymul(npoly.polymul(base, d_plus_full), d_minus_full)

    for rate, j, w in plus_terms:
        partial = prod_poly(
            [(np.array([r, -1.0 + 0j]), m if r != rate else m - j)
             for r, m in plus_rates]
        )
        term = lam_p * w * rate**j * npoly.polymul(partial, d_minus_full)
        poly = npoly.polyadd(poly, term)
    for rate, j, w in minus_terms:
        partial = prod_poly(
            [(np.array([r, 1.0 + 0j]), m if r != rate else m - j)
             for r, m in minus_rates]
        )
        term = lam_m * w * rate**j * npoly.polymul(partial, d_plus_full)
        poly = npoly.polyadd(poly, term)
    return poly


@dataclass(frozen=True)
class RootSet:
    """The four root families of kappa(u) = q, each stored with positive real
    part and sorted by (Re, Im)."""

    q: complex
    beta: np.ndarray
    beta_hat: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray

    @property
    def m_plus(self) -> int:
        return len(self.beta)

    @property
    def n_minus(self) -> int:
        return len(self.gamma)


def _sort_key(arr: np.ndarray) -> np.ndarray:
    order = np.lexsort((arr.imag, arr.real))
    return arr[order]


def _polish(spec: ModelSpec, u: complex, q: complex, refracted: bool) -> complex:
    best, best_res = u, abs(kappa(spec, u, refracted) - q)
    for _ in range(50):
        g = kappa(spec, u, refracted) - q
        gp = kappa_prime(spec, u, refracted)
        if gp == 0:
            break
        u = u - g / gp
        res = abs(kappa(spec, u, refracted) - q)
        if res < best_res:
            best, best_res = u, res
        if res <= _NEWTON_TARGET * (1 + abs(q)):
            break
    return best


def _solve_family(spec: ModelSpec, q: complex, refracted: bool) -> tuple[np.ndarray, np.ndarray]:
    coeffs = characteristic_polynomial(spec, q, refracted)
    raw = npoly.polyroots(coeffs)
    polished = np.array([_polish(spec, u, q, refracted) for u in raw])

    # residual floor: a float64 root next to a jump-rate pole cannot evaluate
    # below |kappa'| * ulp(root) however well it was polished
    for u in polished:
        resid = abs(kappa(spec, u, refracted) - q)
        floor = 64 * np.finfo(float).eps * abs(kappa_prime(spec, u, refracted)) * (1 + abs(u))
        tol = max(RESIDUAL_TOL * (1 + abs(q)), floor)
        if resid > tol:
            raise CountMismatchError(
                f"root residual {resid:.3e} exceeds {tol:.3e} at q={q}"
            )

    pos = _sort_key(polished[polished.real > 0])
    neg = _sort_key(-polished[polished.real < 0])
    on_axis = polished[polished.real == 0]
    if len(on_axis):
        raise CountMismatchError(f"root on the imaginary axis at q={q}")

    want_pos = 1 + spec.m_total
    want_neg = 1 + spec.n_total
    if len(pos) != want_pos or len(neg) != want_neg:
        raise CountMismatchError(
            f"count mismatch at q={q}: {len(pos)} roots with Re>0 "
            f"(expected {want_pos}), {len(neg)} with Re<0 (expected {want_neg})"
        )
    _check_simple(pos, q)
    _check_simple(neg, q)
    if (isinstance(q, complex) and q.imag == 0) or not isinstance(q, complex):
        _check_leading_real(pos, q)
        _check_leading_real(neg, q)
    return pos, neg


def _check_simple(family: np.ndarray, q: complex) -> None:
    for i in range(len(family)):
        for k in range(i + 1, len(family)):
            if abs(family[i] - family[k]) < SIMPLICITY_TOL * (1 + abs(family[i])):
                raise MultipleRootError(
                    f"multiple root near q={q}: |{family[i]} - {family[k]}| below "
                    f"simplicity tolerance; perturb q"
                )


def _check_leading_real(family: np.ndarray, q: complex) -> None:
    lead = family[0]
    if abs(lead.imag) > 1e-9 * (1 + abs(lead)):
        raise CountMismatchError(
            f"leading root {lead} is not real at q={q}"
        )
    if len(family) > 1 and not np.all(family[1:].real > lead.real):
        raise CountMismatchError(
            f"leading root {lead} does not strictly dominate at q={q}"
        )


def solve_roots(spec: ModelSpec, q: complex) -> RootSet:
    """Solve kappa(u) = q and kappa_hat(u) = q via companion-matrix eigenvalues
    plus Newton polish.  q may be complex with positive real part (needed by
    Bromwich-contour Laplace inversion); classification is by sign of Re(u)."""
    qc = complex(q)
    if not qc.real > 0:
        raise ModelError(f"q must have positive real part, got {q}")
    q_in = qc if qc.imag != 0 else qc.real
    beta, gamma = _solve_family(spec, q_in, refracted=False)
    beta_hat, gamma_hat = _solve_family(spec, q_in, refracted=True)
    return RootSet(q=q_in, beta=beta, beta_hat=beta_hat, gamma=gamma, gamma_hat=gamma_hat)
