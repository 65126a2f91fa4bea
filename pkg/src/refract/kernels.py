"""Scalar kernels of the resolvent distribution.

F1 corrects the law above the threshold, F2 below it, and K_q is the
convolution of the killed infimum of the refracted drift process with the
killed supremum of the original one.  All three are finite exponential sums,
so every downstream integral is evaluated in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError
from .charroots import RootSet
from .model import ModelSpec
from .wiener_hopf import WienerHopfFactors, all_factors

_IMAG_TOL = 1e-10


def ensure_real(value: complex, what: str, tol: float = _IMAG_TOL) -> float:
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise EvaluationError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


@dataclass(frozen=True)
class KernelSet:
    """Closed-form coefficients of F1, F2 and K_q for one (model, q) pair.

    f1_rates/f1_coeffs   exponents beta_hat_i and derivative coefficients F1_i,
                         so F1'(x) = sum F1_i e^{-beta_hat_i x} on x > 0.
    f2_rates/f2_coeffs   exponents gamma_i and F2_i, F2'(x) = sum F2_i e^{gamma_i x}
                         on x < 0.
    kq                   matrix K_{i,j} over (beta_i, gamma_hat_j).
    """

    q: complex
    beta: np.ndarray
    beta_hat: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray
    f1_rates: np.ndarray
    f1_coeffs: np.ndarray
    f2_rates: np.ndarray
    f2_coeffs: np.ndarray
    f1_at_zero: complex
    f2_at_zero: complex
    kq: np.ndarray

    @property
    def f1_level_coeffs(self) -> np.ndarray:
        """Coefficients A_m with F1(x) = sum A_m e^{-beta_hat_m x}."""
        return -self.f1_coeffs / self.f1_rates

    @property
    def f2_level_coeffs(self) -> np.ndarray:
        """Coefficients B_n with F2(x) = sum B_n e^{gamma_n x}."""
        return self.f2_coeffs / self.f2_rates


def build_kernels(spec: ModelSpec, roots: RootSet,
                  factors: WienerHopfFactors | None = None) -> KernelSet:
    """Assemble all kernel coefficients from the root families."""
    if factors is None:
        factors = all_factors(spec, roots)
    beta, beta_hat = roots.beta, roots.beta_hat
    gamma, gamma_hat = roots.gamma, roots.gamma_hat

    m_hat = len(beta_hat)
    f1 = np.empty(m_hat, dtype=complex)
    for i in range(m_hat):
        val = -beta_hat[i]
        for bk in beta:
            val *= (beta_hat[i] - bk) / bk
        for k in range(m_hat):
            if k != i:
                val *= beta_hat[k] / (beta_hat[i] - beta_hat[k])
        f1[i] = val

    n_minus = len(gamma)
    f2 = np.empty(n_minus, dtype=complex)
    for i in range(n_minus):
        val = -gamma[i]
        for gh in gamma_hat:
            val *= (gh - gamma[i]) / gh
        for k in range(n_minus):
            if k != i:
                val *= gamma[k] / (gamma[k] - gamma[i])
        f2[i] = val

    # K_{i,j} = C_i * D_hat_j / (beta_i + gamma_hat_j), the residue form of the
    # closed product expression.
    c = factors.sup_X.residues
    d_hat = factors.inf_Y.residues
    kq = c[:, None] * d_hat[None, :] / (beta[:, None] + gamma_hat[None, :])

    f1_at_zero = np.prod(beta_hat) / np.prod(beta) - 1.0
    f2_at_zero = np.prod(gamma) / np.prod(gamma_hat) - 1.0

    return KernelSet(
        q=roots.q, beta=beta, beta_hat=beta_hat, gamma=gamma, gamma_hat=gamma_hat,
        f1_rates=beta_hat, f1_coeffs=f1, f2_rates=gamma, f2_coeffs=f2,
        f1_at_zero=f1_at_zero, f2_at_zero=f2_at_zero, kq=kq,
    )


def F1(ks: KernelSet, x: float) -> float:
    """Upper correction kernel on x >= 0, vanishing at infinity."""
    if x < 0:
        raise EvaluationError("F1 is defined on x >= 0")
    val = np.sum(ks.f1_level_coeffs * np.exp(-ks.f1_rates * x))
    return ensure_real(val, "F1", tol=1e-12)


def F2(ks: KernelSet, x: float) -> float:
    """Lower correction kernel on x <= 0, vanishing at -infinity."""
    if x > 0:
        raise EvaluationError("F2 is defined on x <= 0")
    val = np.sum(ks.f2_level_coeffs * np.exp(ks.f2_rates * x))
    return ensure_real(val, "F2", tol=1e-12)


def f1_transform(ks: KernelSet, s: complex) -> complex:
    """Termwise-exact Laplace transform int_0^inf e^{-sx} F1(x) dx."""
    return np.sum(ks.f1_level_coeffs / (s + ks.f1_rates))


def f2_transform(ks: KernelSet, s: complex) -> complex:
    """Termwise-exact transform int_{-inf}^0 e^{sx} F2(x) dx."""
    return np.sum(ks.f2_level_coeffs / (s + ks.f2_rates))


def _kq_density_complex(ks: KernelSet, x: float) -> complex:
    if x >= 0:
        return np.sum(ks.kq * np.exp(-ks.beta[:, None] * x))
    return np.sum(ks.kq * np.exp(ks.gamma_hat[None, :] * x))


def _kq_cdf_complex(ks: KernelSet, x: float) -> complex:
    if x <= 0:
        return np.sum(ks.kq / ks.gamma_hat[None, :] * np.exp(ks.gamma_hat[None, :] * x))
    at_zero = np.sum(ks.kq / ks.gamma_hat[None, :])
    pos = np.sum(ks.kq / ks.beta[:, None] * (1.0 - np.exp(-ks.beta[:, None] * x)))
    return at_zero + pos


def Kq_density(ks: KernelSet, roots: RootSet, x: float) -> float:
    """Density of the backbone convolution measure at x."""
    return ensure_real(_kq_density_complex(ks, x), "K_q density")


def Kq_cdf(ks: KernelSet, roots: RootSet, x: float) -> float:
    """Distribution function of the backbone measure; exact termwise integral."""
    val = ensure_real(_kq_cdf_complex(ks, x), "K_q cdf")
    if val < -1e-10 or val > 1 + 1e-10:
        raise EvaluationError(f"K_q cdf out of [0,1] beyond tolerance: {val}")
    return min(max(val, 0.0), 1.0)
