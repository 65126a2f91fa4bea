import numpy as np
import pytest

from refract.charroots import solve_roots
from refract.kernels import build_kernels
from refract.model import (
    JumpMixture,
    MixtureTerm,
    ModelSpec,
    brownian_model,
    kou_reference_model,
)

GOLDEN = (1 + np.sqrt(5)) / 2


@pytest.fixture(scope="session")
def kou():
    return kou_reference_model()


@pytest.fixture(scope="session")
def kou_roots(kou):
    return solve_roots(kou, 0.1)


@pytest.fixture(scope="session")
def kou_kernels(kou, kou_roots):
    return build_kernels(kou, kou_roots)


@pytest.fixture(scope="session")
def brownian():
    # mu=0, sigma=1, delta=0.5, b=0; q=0.5 gives the golden-ratio root family
    return brownian_model()


@pytest.fixture(scope="session")
def brownian_roots(brownian):
    return solve_roots(brownian, 0.5)


@pytest.fixture(scope="session")
def brownian_kernels(brownian, brownian_roots):
    return build_kernels(brownian, brownian_roots)


def random_model(rng: np.random.Generator, max_order: int = 3,
                 allow_empty_side: bool = True) -> ModelSpec:
    """Draw a valid mixed hyper-exponential/Erlang model with real parameters."""

    def random_mixture(side: str) -> JumpMixture:
        n_terms = int(rng.integers(1, 3))
        rates = 0.8 + 7.0 * rng.random(n_terms)
        while np.min(np.abs(np.subtract.outer(rates, rates))
                     + 10 * np.eye(n_terms)) < 0.8:
            rates = 0.8 + 7.0 * rng.random(n_terms)
        raw = []
        for r in rates:
            order = int(rng.integers(1, max_order + 1))
            w = rng.random(order) + 0.05
            raw.append((r, order, w))
        total = sum(w.sum() for _, _, w in raw)
        terms = tuple(
            MixtureTerm(rate=float(r), order=o, weights=tuple(float(x) / total for x in w))
            for r, o, w in raw
        )
        return JumpMixture(terms=terms, side=side)

    lam_p = float(rng.uniform(0.2, 2.0))
    lam_m = float(rng.uniform(0.2, 2.0))
    if allow_empty_side and rng.random() < 0.15:
        lam_p = 0.0
    if allow_empty_side and rng.random() < 0.15:
        lam_m = 0.0
    return ModelSpec(
        mu=float(rng.uniform(-0.5, 0.5)),
        sigma=float(rng.uniform(0.15, 1.0)),
        lambda_plus=lam_p,
        jumps_plus=random_mixture("positive") if lam_p > 0 else JumpMixture(side="positive"),
        lambda_minus=lam_m,
        jumps_minus=random_mixture("negative") if lam_m > 0 else JumpMixture(side="negative"),
        delta=float(rng.uniform(-0.5, 0.5)),
        b=float(rng.uniform(-1.0, 1.0)),
    )


def model_battery(n: int = 50, seed: int = 20240811) -> list[ModelSpec]:
    rng = np.random.default_rng(seed)
    return [random_model(rng) for _ in range(n)]
