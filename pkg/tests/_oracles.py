"""Independent numerical oracles used to freeze or cross-check expected values.

Nothing in here touches the package's pole-residue machinery: quadrature works
on raw density callables, the resolvent density comes from Fourier inversion
of the characteristic function, and the cumulant sampler draws increments of
the driving process directly.
"""

import numpy as np
from scipy import integrate

from refract.charroots import psi


def quad_unit_mass(fn, lo, hi):
    """Adaptive quadrature of a density over (lo, hi)."""
    val, _ = integrate.quad(fn, lo, hi, limit=400)
    return val


def levy_resolvent_density(spec, q, x):
    """Density of X_{e(q)} by oscillatory Fourier inversion of q/(q - psi)."""
    def g_re(theta):
        val = q / (q - psi(spec, theta))
        return val.real

    def g_im(theta):
        val = q / (q - psi(spec, theta))
        return val.imag

    cos_part, _ = integrate.quad(g_re, 0, np.inf, weight="cos", wvar=x, limit=400)
    sin_part, _ = integrate.quad(g_im, 0, np.inf, weight="sin", wvar=x, limit=400)
    return (cos_part + sin_part) / np.pi


def sample_X1(spec, n, rng):
    """Direct draws of X_1 (exact in distribution, no Euler error)."""
    vals = spec.mu + spec.sigma * rng.standard_normal(n)
    for lam, mix, sign in ((spec.lambda_plus, spec.jumps_plus, 1.0),
                           (spec.lambda_minus, spec.jumps_minus, -1.0)):
        if lam <= 0:
            continue
        counts = rng.poisson(lam, size=n)
        total = int(counts.sum())
        flat = list(mix.iter_flat())
        weights = np.array([float(np.real(w)) for _, _, w in flat])
        weights = weights / weights.sum()
        idx = rng.choice(len(flat), size=total, p=weights)
        sizes = np.empty(total)
        for k, (rate, order, _) in enumerate(flat):
            mask = idx == k
            m = int(mask.sum())
            if m:
                sizes[mask] = rng.gamma(shape=order, scale=1.0 / float(np.real(rate)), size=m)
        jump_sums = np.zeros(n)
        np.add.at(jump_sums, np.repeat(np.arange(n), counts), sizes)
        vals = vals + sign * jump_sums
    return vals
