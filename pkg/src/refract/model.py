"""Jump-diffusion model specification and validation.

The driving process is a Brownian motion with drift plus two independent
compound Poisson streams whose jump sizes have mixed-Erlang densities with
possibly complex rates (rational Laplace transforms).  A refraction drift
``delta`` is subtracted whenever the refracted path sits above the threshold
``b``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import ModelError

WEIGHT_SUM_TOL = 1e-12
DENSITY_NEG_TOL = -1e-10
DENSITY_IMAG_TOL = 1e-12
_GRID_POINTS = 1000


@dataclass(frozen=True)
class MixtureTerm:
    """One mixed-Erlang component: weights[j-1] multiplies the order-j density
    rate^j z^{j-1} e^{-rate z} / (j-1)!."""

    rate: complex
    order: int
    weights: tuple[complex, ...]

    def __post_init__(self):
        if self.order < 1:
            raise ModelError(f"term order must be >= 1, got {self.order}")
        if len(self.weights) != self.order:
            raise ModelError(
                f"term with order {self.order} needs {self.order} weights, "
                f"got {len(self.weights)}"
            )


@dataclass(frozen=True)
class JumpMixture:
    """Finite mixture of (possibly complex-rate) Erlang terms on (0, inf)."""

    terms: tuple[MixtureTerm, ...] = ()
    side: str = "positive"

    def __post_init__(self):
        if self.side not in ("positive", "negative"):
            raise ModelError(f"mixture side must be positive/negative, got {self.side!r}")

    @property
    def is_empty(self) -> bool:
        return len(self.terms) == 0

    @property
    def total_order(self) -> int:
        """Sum of Erlang orders; the number of roots this side contributes."""
        return sum(t.order for t in self.terms)

    def rates(self) -> np.ndarray:
        return np.array([t.rate for t in self.terms], dtype=complex)

    def orders(self) -> np.ndarray:
        return np.array([t.order for t in self.terms], dtype=int)

    def iter_flat(self) -> Iterator[tuple[complex, int, complex]]:
        """Yield (rate, erlang_order_j, weight) triples, j = 1..order."""
        for t in self.terms:
            for j, w in enumerate(t.weights, start=1):
                yield t.rate, j, w

    def weight_sum(self) -> complex:
        return sum(w for _, _, w in self.iter_flat())

    def density(self, z: float) -> float:
        """Mixture density at z >= 0; complex accumulation, real output."""
        if self.is_empty:
            raise ModelError(f"no {self.side} jumps")
        if z < 0:
            raise ModelError("mixture density defined on z >= 0")
        acc = 0j
        for rate, j, w in self.iter_flat():
            acc += w * rate**j * z ** (j - 1) * cmath.exp(-rate * z) / math.factorial(j - 1)
        if abs(acc.imag) > DENSITY_IMAG_TOL * max(1.0, abs(acc.real)):
            raise ModelError(
                f"mixture density has imaginary residue {acc.imag:.3e} at z={z}"
            )
        return acc.real

    def mgf(self, u: complex) -> complex:
        """E[e^{u Z}] = sum w * (rate / (rate - u))^j for the mixture variable Z."""
        acc = 0j
        for rate, j, w in self.iter_flat():
            acc += w * (rate / (rate - u)) ** j
        return acc


@dataclass(frozen=True)
class ModelSpec:
    """Full parameterization of the driving process and the refraction.

    mu, sigma      Brownian drift and volatility (sigma > 0 is required).
    lambda_plus    intensity of upward jumps, jumps_plus their size mixture.
    lambda_minus   intensity of downward jumps, jumps_minus their size mixture.
    delta          refraction drift subtracted while the path is above b.
    b              refraction threshold (log scale in the pricing application).
    """

    mu: float
    sigma: float
    lambda_plus: float = 0.0
    lambda_minus: float = 0.0
    jumps_plus: JumpMixture = field(default_factory=lambda: JumpMixture(side="positive"))
    jumps_minus: JumpMixture = field(default_factory=lambda: JumpMixture(side="negative"))
    delta: float = 0.0
    b: float = 0.0

    def with_(self, **kw) -> "ModelSpec":
        return replace(self, **kw)

    @property
    def m_total(self) -> int:
        """Number of beta-family roots beyond the Brownian one."""
        return self.jumps_plus.total_order if self.lambda_plus > 0 else 0

    @property
    def n_total(self) -> int:
        return self.jumps_minus.total_order if self.lambda_minus > 0 else 0


@dataclass(frozen=True)
class QuerySpec:
    """Killing rate q > 0, start value x and evaluation level y."""

    q: float
    x: float
    y: float

    def __post_init__(self):
        if not (self.q.real if isinstance(self.q, complex) else self.q) > 0:
            raise ModelError(f"q must have positive real part, got {self.q}")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def _check_mixture(mix: JumpMixture, lam: float, label: str) -> list[CheckResult]:
    checks = []
    if lam < 0:
        checks.append(CheckResult(f"{label}.intensity", False, f"lambda={lam} < 0"))
        return checks
    if lam == 0 or mix.is_empty:
        ok = lam == 0 and mix.is_empty
        checks.append(
            CheckResult(
                f"{label}.empty-iff-zero-intensity",
                ok,
                "" if ok else f"lambda={lam} with {len(mix.terms)} mixture terms",
            )
        )
        return checks

    rates = mix.rates()
    checks.append(
        CheckResult(
            f"{label}.rates-positive-real-part",
            bool(np.all(rates.real > 0)),
            f"rates={rates}",
        )
    )
    distinct = True
    for i in range(len(rates)):
        for k in range(i + 1, len(rates)):
            if abs(rates[i] - rates[k]) <= 1e-12 * (1 + abs(rates[i])):
                distinct = False
    checks.append(CheckResult(f"{label}.rates-distinct", distinct))

    conjugate_ok = True
    flat = list(mix.iter_flat())
    for rate, j, w in flat:
        if abs(rate.imag) <= 1e-14:
            continue
        partner = [w2 for r2, j2, w2 in flat
                   if j2 == j and abs(r2 - rate.conjugate()) <= 1e-12 * (1 + abs(rate))]
        if len(partner) != 1 or abs(partner[0] - w.conjugate()) > 1e-12 * (1 + abs(w)):
            conjugate_ok = False
    checks.append(CheckResult(f"{label}.conjugate-pairs", conjugate_ok))

    wsum = mix.weight_sum()
    checks.append(
        CheckResult(
            f"{label}.normalization",
            abs(wsum - 1) <= WEIGHT_SUM_TOL,
            f"sum of weights = {wsum}",
        )
    )

    grid_ok = False
    if conjugate_ok and distinct and np.all(rates.real > 0):
        zmax = 50.0 / float(np.min(rates.real))
        grid = np.logspace(math.log10(zmax) - 6, math.log10(zmax), _GRID_POINTS)
        try:
            vals = np.array([mix.density(z) for z in grid])
            grid_ok = bool(np.all(vals >= DENSITY_NEG_TOL))
            detail = f"min density on grid = {vals.min():.3e}"
        except ModelError as exc:
            detail = str(exc)
        checks.append(CheckResult(f"{label}.density-nonnegative", grid_ok, detail))
    else:
        checks.append(
            CheckResult(f"{label}.density-nonnegative", False, "skipped: structure invalid")
        )
    return checks


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Run every structural invariant; failures are reported, never raised."""
    checks = [
        CheckResult("sigma-positive", spec.sigma > 0, f"sigma={spec.sigma}"),
    ]
    checks += _check_mixture(spec.jumps_plus, spec.lambda_plus, "jumps_plus")
    checks += _check_mixture(spec.jumps_minus, spec.lambda_minus, "jumps_minus")
    return ValidationReport(tuple(checks))


def require_valid(spec: ModelSpec) -> ModelSpec:
    report = validate_model(spec)
    if not report.passed:
        raise ModelError(
            "invalid model: " + "; ".join(c.name for c in report.failures())
        )
    return spec


def density_plus(spec: ModelSpec, z: float) -> float:
    """Density of the upward jump size at z > 0."""
    return spec.jumps_plus.density(z)


def density_minus(spec: ModelSpec, z: float) -> float:
    """Density of the downward jump size at z > 0."""
    return spec.jumps_minus.density(z)


# --- JSON wire format -------------------------------------------------------
#
# Complex numbers are always serialized as [re, im].

def _c2j(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _j2c(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ModelError(f"cannot parse complex value from {v!r}")


def _mixture_to_json(mix: JumpMixture) -> list[dict]:
    return [
        {"rate": _c2j(t.rate), "order": t.order, "weights": [_c2j(w) for w in t.weights]}
        for t in mix.terms
    ]


def _mixture_from_json(items, side: str) -> JumpMixture:
    terms = tuple(
        MixtureTerm(
            rate=_j2c(item["rate"]),
            order=int(item["order"]),
            weights=tuple(_j2c(w) for w in item["weights"]),
        )
        for item in items
    )
    return JumpMixture(terms=terms, side=side)


def model_to_dict(spec: ModelSpec) -> dict:
    return {
        "mu": spec.mu,
        "sigma": spec.sigma,
        "lambda_plus": spec.lambda_plus,
        "jumps_plus": _mixture_to_json(spec.jumps_plus),
        "lambda_minus": spec.lambda_minus,
        "jumps_minus": _mixture_to_json(spec.jumps_minus),
        "delta": spec.delta,
        "b": spec.b,
    }


def model_from_dict(d: dict) -> ModelSpec:
    try:
        return ModelSpec(
            mu=float(d["mu"]),
            sigma=float(d["sigma"]),
            lambda_plus=float(d.get("lambda_plus", 0.0)),
            lambda_minus=float(d.get("lambda_minus", 0.0)),
            jumps_plus=_mixture_from_json(d.get("jumps_plus", []), "positive"),
            jumps_minus=_mixture_from_json(d.get("jumps_minus", []), "negative"),
            delta=float(d.get("delta", 0.0)),
            b=float(d.get("b", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model document: {exc}") from exc


def save_model(spec: ModelSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(spec), fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> ModelSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path!r} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


# --- convenience constructors ----------------------------------------------

def exponential_mixture(rate: float, side: str = "positive") -> JumpMixture:
    """Single exponential jump law, the canonical hyper-exponential case."""
    return JumpMixture(terms=(MixtureTerm(rate=rate, order=1, weights=(1.0,)),), side=side)


def hyperexponential_mixture(rates: Sequence[float], weights: Sequence[float],
                             side: str = "positive") -> JumpMixture:
    terms = tuple(MixtureTerm(rate=r, order=1, weights=(w,)) for r, w in zip(rates, weights))
    return JumpMixture(terms=terms, side=side)


def kou_reference_model() -> ModelSpec:
    """Two-sided exponential reference model used throughout the test battery."""
    return ModelSpec(
        mu=0.05, sigma=0.2,
        lambda_plus=1.0, jumps_plus=exponential_mixture(3.0, "positive"),
        lambda_minus=0.5, jumps_minus=exponential_mixture(2.0, "negative"),
        delta=0.03, b=0.0,
    )


def brownian_model(mu: float = 0.0, sigma: float = 1.0, delta: float = 0.5,
                   b: float = 0.0) -> ModelSpec:
    return ModelSpec(mu=mu, sigma=sigma, delta=delta, b=b)
