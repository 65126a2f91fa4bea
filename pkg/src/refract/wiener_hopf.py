"""Wiener-Hopf factors of the process and its fully refracted twin, in
pole-residue form.

factor_sup_X(s) = E[exp(-s sup X_{e(q)})]     poles -beta_k,      residues C_k
factor_sup_Y(s) = E[exp(-s sup Y_{e(q)})]     poles -beta_hat_k,  residues C_hat_k
factor_inf_X(s) = E[exp(+s inf X_{e(q)})]     poles -gamma_k,     residues D_k
factor_inf_Y(s) = E[exp(+s inf Y_{e(q)})]     poles -gamma_hat_k, residues D_hat_k

Residues come from the closed product formulas, not from generic partial
fractions, for reproducibility and stability when jump rates sit close to
roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError
from .charroots import RootSet
from .model import JumpMixture, ModelSpec

_UNIT_TOL = 1e-12
_IMAG_TOL = 1e-12
_NEG_TOL = -1e-10


@dataclass(frozen=True)
class PoleResidueForm:
    """Rational function constant + sum residues[k] / (s - poles[k])."""

    poles: np.ndarray
    residues: np.ndarray
    constant: complex = 0j

    def __call__(self, s: complex) -> complex:
        return self.constant + np.sum(self.residues / (s - self.poles))

    def eval_many(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return self.constant + np.sum(
            self.residues[None, :] / (s[:, None] - self.poles[None, :]), axis=1
        )


def _residues(roots: np.ndarray, mix: JumpMixture, active: bool) -> np.ndarray:
    """Product-formula residues: res_i = root_i * prod_k ((rate_k - root_i)/rate_k)^m_k
    * prod_{k != i} root_k / (root_k - root_i)."""
    n = len(roots)
    res = np.empty(n, dtype=complex)
    for i in range(n):
        val = roots[i] + 0j
        if active:
            for t in mix.terms:
                val *= ((t.rate - roots[i]) / t.rate) ** t.order
        for k in range(n):
            if k != i:
                val *= roots[k] / (roots[k] - roots[i])
        res[i] = val
    return res


def _build(roots: np.ndarray, mix: JumpMixture, active: bool) -> PoleResidueForm:
    res = _residues(roots, mix, active)
    form = PoleResidueForm(poles=-roots, residues=res)
    at_zero = form(0.0)
    if abs(at_zero - 1.0) > _UNIT_TOL * len(roots) * 10:
        raise EvaluationError(
            f"Wiener-Hopf factor does not evaluate to 1 at s=0: got {at_zero}"
        )
    return form


def factor_sup_X(spec: ModelSpec, roots: RootSet) -> PoleResidueForm:
    """Transform of the running supremum of X at the killing time."""
    return _build(roots.beta, spec.jumps_plus, spec.lambda_plus > 0)


def factor_sup_Y(spec: ModelSpec, roots: RootSet) -> PoleResidueForm:
    """Transform of the running supremum of the fully refracted process."""
    return _build(roots.beta_hat, spec.jumps_plus, spec.lambda_plus > 0)


def factor_inf_X(spec: ModelSpec, roots: RootSet) -> PoleResidueForm:
    """Transform of the running infimum of X (argument +s, infimum <= 0)."""
    return _build(roots.gamma, spec.jumps_minus, spec.lambda_minus > 0)


def factor_inf_Y(spec: ModelSpec, roots: RootSet) -> PoleResidueForm:
    return _build(roots.gamma_hat, spec.jumps_minus, spec.lambda_minus > 0)


@dataclass(frozen=True)
class WienerHopfFactors:
    sup_X: PoleResidueForm
    sup_Y: PoleResidueForm
    inf_X: PoleResidueForm
    inf_Y: PoleResidueForm


def all_factors(spec: ModelSpec, roots: RootSet) -> WienerHopfFactors:
    return WienerHopfFactors(
        sup_X=factor_sup_X(spec, roots),
        sup_Y=factor_sup_Y(spec, roots),
        inf_X=factor_inf_X(spec, roots),
        inf_Y=factor_inf_Y(spec, roots),
    )


def extreme_density(factor: PoleResidueForm, side: str, v: float) -> float:
    """Density of the killed extreme: sum res_k e^{-rate_k v} on v >= 0 for the
    supremum, sum res_k e^{rate_k v} on v <= 0 for the infimum."""
    if side == "sup":
        if v < 0:
            raise EvaluationError("supremum density needs v >= 0")
        acc = np.sum(factor.residues * np.exp(factor.poles * v))
    elif side == "inf":
        if v > 0:
            raise EvaluationError("infimum density needs v <= 0")
        acc = np.sum(factor.residues * np.exp(-factor.poles * v))
    else:
        raise EvaluationError(f"side must be sup or inf, got {side!r}")
    if abs(acc.imag) > _IMAG_TOL * max(1.0, abs(acc.real)):
        raise EvaluationError(f"extreme density has imaginary residue {acc.imag:.3e}")
    val = float(acc.real)
    if val < _NEG_TOL:
        raise EvaluationError(f"extreme density negative beyond tolerance: {val:.3e}")
    return max(val, 0.0)
