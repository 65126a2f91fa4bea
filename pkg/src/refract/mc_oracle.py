"""Monte Carlo oracle for the refracted process and its driving components.

Simulation scheme: exact exponential epochs for both compound Poisson streams,
mixed-Erlang jump sizes by categorical-then-gamma sampling, and Euler steps of
size at most dt for the diffusive part with the refraction indicator evaluated
at the step's left endpoint.  Threshold crossings inside a step are not
refined.

Randomness is counter-based: every path owns a splitmix64 stream keyed by
(seed, path index), so results do not depend on the thread count, and
reductions run in fixed chunk order.  Identical configurations reproduce
bit-for-bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import McUnsupportedError
from .model import JumpMixture, ModelSpec

_CHUNK = 4096
_U64 = np.uint64
_TAIL_BUDGET = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """Path count, step size, optional horizon override, seed and threads."""

    paths: int
    dt: float = 1e-3
    horizon: float | None = None
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise McUnsupportedError("paths must be >= 1")
        if not self.dt > 0:
            raise McUnsupportedError("dt must be positive")

    def resolve_threads(self) -> int:
        import numba

        n = self.threads
        if n is None:
            n = int(os.environ.get("REFRACT_THREADS", numba.config.NUMBA_NUM_THREADS))
        return max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    paths: int

    def agrees(self, reference: float, n_se: float = 3.0) -> bool:
        return abs(self.value - reference) <= n_se * self.std_error


def default_horizon(q: float) -> float:
    """Truncation horizon of the killed path integral (design default 40/q)."""
    return 40.0 / q


# --- counter-based RNG primitives (splitmix64) --------------------------------

_GAMMA = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = _U64(30), _U64(27), _U64(31), _U64(11)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _path_key(seed, path):
    return _mix64(_U64(seed) ^ _mix64(_U64(path) + _GAMMA))


@njit(cache=True, inline="always")
def _next_unit(state):
    state = state + _GAMMA
    z = _mix64(state)
    return state, (z >> _S11) * 1.1102230246251565e-16 + 5.551115123125783e-17


@njit(cache=True, inline="always")
def _next_normal(state):
    # Marsaglia polar method, trig-free; the rejected twin is discarded to keep
    # the stream layout simple.
    while True:
        state, u1 = _next_unit(state)
        state, u2 = _next_unit(state)
        v1 = 2.0 * u1 - 1.0
        v2 = 2.0 * u2 - 1.0
        s = v1 * v1 + v2 * v2
        if 0.0 < s < 1.0:
            return state, v1 * math.sqrt(-2.0 * math.log(s) / s)


@njit(cache=True, inline="always")
def _next_exp(state):
    state, u = _next_unit(state)
    return state, -math.log(u)


@njit(cache=True, inline="always")
def _sample_jump(state, cumw, rates, orders):
    state, u = _next_unit(state)
    idx = 0
    while idx < cumw.shape[0] - 1 and u > cumw[idx]:
        idx += 1
    acc = 0.0
    for _ in range(orders[idx]):
        state, e = _next_exp(state)
        acc += e
    return state, acc / rates[idx]


# --- kernels -------------------------------------------------------------------

@njit(cache=True, parallel=True, fastmath=True)
def _kern_killed_indicator(paths, seed, x0, b, mu, sigma, delta,
                           lam_p, cumw_p, rate_p, ord_p,
                           lam_m, cumw_m, rate_m, ord_m,
                           q, dt, t_star, ys, out):
    ny = ys.shape[0]
    fac_dt = math.exp(-q * dt)
    sig_dt = sigma * math.sqrt(dt)
    for p in prange(paths):
        state = _path_key(seed, p)
        t = 0.0
        u_val = x0
        if lam_p > 0.0:
            state, e = _next_exp(state)
            tjp = e / lam_p
        else:
            tjp = math.inf
        if lam_m > 0.0:
            state, e = _next_exp(state)
            tjm = e / lam_m
        else:
            tjm = math.inf
        ew = 1.0
        while t < t_star:
            h = dt
            kind = 0
            if tjp - t < h:
                h = tjp - t
                kind = 1
            if tjm - t < h:
                h = tjm - t
                kind = 2
            if t_star - t < h:
                h = t_star - t
                kind = 3
            if kind == 0:
                ew_next = ew * fac_dt
                sig_h = sig_dt
            else:
                ew_next = ew * math.exp(-q * h)
                sig_h = sigma * math.sqrt(h)
            w = ew - ew_next
            for k in range(ny):
                if u_val > ys[k]:
                    out[p, k] += w
            drift = mu - delta if u_val > b else mu
            state, z = _next_normal(state)
            u_val += drift * h + sig_h * z
            t += h
            ew = ew_next
            if kind == 1:
                state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
                u_val += jz
                state, e = _next_exp(state)
                tjp = t + e / lam_p
            elif kind == 2:
                state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
                u_val -= jz
                state, e = _next_exp(state)
                tjm = t + e / lam_m


@njit(cache=True, parallel=True, fastmath=True)
def _kern_killed_payoff(paths, seed, x0, b, mu, sigma, delta,
                        lam_p, cumw_p, rate_p, ord_p,
                        lam_m, cumw_m, rate_m, ord_m,
                        q, dt, t_star, payoff_kind, f0, strike, out):
    fac_dt = math.exp(-q * dt)
    sig_dt = sigma * math.sqrt(dt)
    for p in prange(paths):
        state = _path_key(seed, p)
        t = 0.0
        u_val = x0
        if lam_p > 0.0:
            state, e = _next_exp(state)
            tjp = e / lam_p
        else:
            tjp = math.inf
        if lam_m > 0.0:
            state, e = _next_exp(state)
            tjm = e / lam_m
        else:
            tjm = math.inf
        ew = 1.0
        while t < t_star:
            h = dt
            kind = 0
            if tjp - t < h:
                h = tjp - t
                kind = 1
            if tjm - t < h:
                h = tjm - t
                kind = 2
            if t_star - t < h:
                h = t_star - t
                kind = 3
            if kind == 0:
                ew_next = ew * fac_dt
                sig_h = sig_dt
            else:
                ew_next = ew * math.exp(-q * h)
                sig_h = sigma * math.sqrt(h)
            w = ew - ew_next
            acct = f0 * math.exp(u_val)
            if payoff_kind == 0:
                g = acct if acct > strike else strike
            else:
                g = acct - strike if acct > strike else 0.0
            out[p] += w * g
            drift = mu - delta if u_val > b else mu
            state, z = _next_normal(state)
            u_val += drift * h + sig_h * z
            t += h
            ew = ew_next
            if kind == 1:
                state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
                u_val += jz
                state, e = _next_exp(state)
                tjp = t + e / lam_p
            elif kind == 2:
                state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
                u_val -= jz
                state, e = _next_exp(state)
                tjm = t + e / lam_m


@njit(cache=True, parallel=True, fastmath=True)
def _kern_first_passage(paths, seed, x0, b, mu, sigma, delta,
                        lam_p, cumw_p, rate_p, ord_p,
                        lam_m, cumw_m, rate_m, ord_m,
                        q, dt, t_star, level, upward, out):
    sig_dt = sigma * math.sqrt(dt)
    for p in prange(paths):
        state = _path_key(seed, p)
        t = 0.0
        x_val = x0
        if lam_p > 0.0:
            state, e = _next_exp(state)
            tjp = e / lam_p
        else:
            tjp = math.inf
        if lam_m > 0.0:
            state, e = _next_exp(state)
            tjm = e / lam_m
        else:
            tjm = math.inf
        out[p] = 0.0
        crossed = (x_val > level) if upward else (x_val < level)
        if crossed:
            out[p] = 1.0
            continue
        while t < t_star:
            h = dt
            kind = 0
            if tjp - t < h:
                h = tjp - t
                kind = 1
            if tjm - t < h:
                h = tjm - t
                kind = 2
            if t_star - t < h:
                h = t_star - t
                kind = 3
            drift = mu - delta if x_val > b else mu
            state, z = _next_normal(state)
            x_val += drift * h + (sig_dt if kind == 0 else sigma * math.sqrt(h)) * z
            t += h
            if kind == 1:
                state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
                x_val += jz
                state, e = _next_exp(state)
                tjp = t + e / lam_p
            elif kind == 2:
                state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
                x_val -= jz
                state, e = _next_exp(state)
                tjm = t + e / lam_m
            crossed = (x_val > level) if upward else (x_val < level)
            if crossed:
                out[p] = math.exp(-q * t)
                break


@njit(cache=True, parallel=True, fastmath=True)
def _kern_extremes(paths, seed, x0, b, mu, sigma, delta,
                   lam_p, cumw_p, rate_p, ord_p,
                   lam_m, cumw_m, rate_m, ord_m,
                   q, dt, t_star, out_max, out_min):
    sig_dt = sigma * math.sqrt(dt)
    for p in prange(paths):
        state = _path_key(seed, p)
        state, e = _next_exp(state)
        t_kill = e / q
        if t_kill > t_star:
            t_kill = t_star
        t = 0.0
        x_val = x0
        mx = x_val
        mn = x_val
        if lam_p > 0.0:
            state, e = _next_exp(state)
            tjp = e / lam_p
        else:
            tjp = math.inf
        if lam_m > 0.0:
            state, e = _next_exp(state)
            tjm = e / lam_m
        else:
            tjm = math.inf
        while t < t_kill:
            h = dt
            kind = 0
            if tjp - t < h:
                h = tjp - t
                kind = 1
            if tjm - t < h:
                h = tjm - t
                kind = 2
            if t_kill - t < h:
                h = t_kill - t
                kind = 3
            drift = mu - delta if x_val > b else mu
            state, z = _next_normal(state)
            x_val += drift * h + (sig_dt if kind == 0 else sigma * math.sqrt(h)) * z
            t += h
            if kind == 1:
                state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
                x_val += jz
                state, e = _next_exp(state)
                tjp = t + e / lam_p
            elif kind == 2:
                state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
                x_val -= jz
                state, e = _next_exp(state)
                tjm = t + e / lam_m
            if x_val > mx:
                mx = x_val
            if x_val < mn:
                mn = x_val
        out_max[p] = mx
        out_min[p] = mn


@njit(cache=True, parallel=True, fastmath=True)
def _kern_terminal(paths, seed, x0, b, mu, sigma, delta,
                   lam_p, cumw_p, rate_p, ord_p,
                   lam_m, cumw_m, rate_m, ord_m,
                   dt, t_end, out):
    sig_dt = sigma * math.sqrt(dt)
    for p in prange(paths):
        state = _path_key(seed, p)
        t = 0.0
        u_val = x0
        if lam_p > 0.0:
            state, e = _next_exp(state)
            tjp = e / lam_p
        else:
            tjp = math.inf
        if lam_m > 0.0:
            state, e = _next_exp(state)
            tjm = e / lam_m
        else:
            tjm = math.inf
        while t < t_end:
            h = dt
            kind = 0
            if tjp - t < h:
                h = tjp - t
                kind = 1
            if tjm - t < h:
                h = tjm - t
                kind = 2
            if t_end - t < h:
                h = t_end - t
                kind = 3
            drift = mu - delta if u_val > b else mu
            state, z = _next_normal(state)
            u_val += drift * h + (sig_dt if kind == 0 else sigma * math.sqrt(h)) * z
            t += h
            if kind == 1:
                state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
                u_val += jz
                state, e = _next_exp(state)
                tjp = t + e / lam_p
            elif kind == 2:
                state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
                u_val -= jz
                state, e = _next_exp(state)
                tjm = t + e / lam_m
        out[p] = u_val


@njit(cache=True)
def _kern_record_path(path_index, seed, x0, b, mu, sigma, delta,
                      lam_p, cumw_p, rate_p, ord_p,
                      lam_m, cumw_m, rate_m, ord_m,
                      dt, n_steps, out):
    state = _path_key(seed, path_index)
    t = 0.0
    u_val = x0
    if lam_p > 0.0:
        state, e = _next_exp(state)
        tjp = e / lam_p
    else:
        tjp = math.inf
    if lam_m > 0.0:
        state, e = _next_exp(state)
        tjm = e / lam_m
    else:
        tjm = math.inf
    out[0] = u_val
    t_end = n_steps * dt
    idx = 1
    while t < t_end - 1e-15 and idx <= n_steps:
        grid_next = idx * dt
        h = grid_next - t
        kind = 0
        if tjp - t < h:
            h = tjp - t
            kind = 1
        if tjm - t < h:
            h = tjm - t
            kind = 2
        drift = mu - delta if u_val > b else mu
        state, z = _next_normal(state)
        u_val += drift * h + sigma * math.sqrt(h) * z
        t += h
        if kind == 1:
            state, jz = _sample_jump(state, cumw_p, rate_p, ord_p)
            u_val += jz
            state, e = _next_exp(state)
            tjp = t + e / lam_p
        elif kind == 2:
            state, jz = _sample_jump(state, cumw_m, rate_m, ord_m)
            u_val -= jz
            state, e = _next_exp(state)
            tjm = t + e / lam_m
        else:
            out[idx] = u_val
            idx += 1


# --- python-side assembly ------------------------------------------------------

def _flatten_mixture(mix: JumpMixture, lam: float):
    if lam <= 0 or mix.is_empty:
        return (np.array([1.0]), np.array([1.0]), np.array([1], dtype=np.int64))
    ws, rates, orders = [], [], []
    for rate, j, w in mix.iter_flat():
        if abs(complex(rate).imag) > 1e-14 or abs(complex(w).imag) > 1e-14:
            raise McUnsupportedError("MC unsupported for signed/complex mixtures")
        wr = complex(w).real
        if wr < 0:
            raise McUnsupportedError("MC unsupported for signed/complex mixtures")
        ws.append(wr)
        rates.append(complex(rate).real)
        orders.append(j)
    ws = np.array(ws)
    total = ws.sum()
    if total <= 0:
        raise McUnsupportedError("MC unsupported for signed/complex mixtures")
    cumw = np.cumsum(ws / total)
    return cumw, np.array(rates), np.array(orders, dtype=np.int64)


def _sim_args(spec: ModelSpec, b_override: float | None = None):
    cumw_p, rate_p, ord_p = _flatten_mixture(spec.jumps_plus, spec.lambda_plus)
    cumw_m, rate_m, ord_m = _flatten_mixture(spec.jumps_minus, spec.lambda_minus)
    b = spec.b if b_override is None else b_override
    return (b, spec.mu, spec.sigma, spec.delta,
            float(max(spec.lambda_plus, 0.0)), cumw_p, rate_p, ord_p,
            float(max(spec.lambda_minus, 0.0)), cumw_m, rate_m, ord_m)


def _apply_threads(cfg: SimConfig) -> None:
    import numba

    numba.set_num_threads(cfg.resolve_threads())


def _chunked_mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    s = 0.0
    s2 = 0.0
    for i in range(0, n, _CHUNK):
        c = values[i:i + _CHUNK]
        s += float(np.sum(c))
        s2 += float(np.sum(c * c))
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n) if n > 1 else math.sqrt(var)


def simulate_U_path(spec: ModelSpec, cfg: SimConfig, path_index: int = 0,
                    horizon: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """One path skeleton of the refracted process on the dt grid."""
    _sim_check(spec)
    n_steps = int(round(horizon / cfg.dt))
    out = np.empty(n_steps + 1)
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec)
    _kern_record_path(path_index, cfg.seed, 0.0, b, mu, sigma, delta,
                      lp, cwp, rp, op, lm, cwm, rm, om, cfg.dt, n_steps, out)
    times = np.arange(n_steps + 1) * cfg.dt
    return times, out


def _sim_check(spec: ModelSpec) -> None:
    _flatten_mixture(spec.jumps_plus, spec.lambda_plus)
    _flatten_mixture(spec.jumps_minus, spec.lambda_minus)


def killed_indicator_integrals(spec: ModelSpec, cfg: SimConfig, q: float,
                               x: float, ys: np.ndarray) -> np.ndarray:
    """Per-path integrals int_0^{T*} q e^{-qt} 1{U_t > y} dt, one column per y."""
    _sim_check(spec)
    _apply_threads(cfg)
    t_star = cfg.horizon if cfg.horizon is not None else default_horizon(q)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros((cfg.paths, ys.shape[0]))
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec)
    _kern_killed_indicator(cfg.paths, cfg.seed, x, b, mu, sigma, delta,
                           lp, cwp, rp, op, lm, cwm, rm, om,
                           q, cfg.dt, t_star, ys, out)
    return out


def estimate_killed_probability(spec: ModelSpec, cfg: SimConfig, q: float,
                                x: float, y: float, mode: str = "above") -> McEstimate:
    """P_x(U_{e(q)} > y) (or < y for mode='below') by path-integral weighting."""
    if mode not in ("above", "below"):
        raise McUnsupportedError(f"mode must be above/below, got {mode!r}")
    t_star = cfg.horizon if cfg.horizon is not None else default_horizon(q)
    vals = killed_indicator_integrals(spec, cfg, q, x, np.array([y]))[:, 0]
    if mode == "below":
        vals = (1.0 - math.exp(-q * t_star)) - vals
    mean, se = _chunked_mean_se(vals)
    tail = math.exp(-q * t_star)
    return McEstimate(value=mean, std_error=se + tail / 3.0, paths=cfg.paths)


def estimate_occupation_transform(spec: ModelSpec, cfg: SimConfig, q: float,
                                  x: float, y: float) -> McEstimate:
    est = estimate_killed_probability(spec, cfg, q, x, y, mode="below")
    return McEstimate(value=est.value / q**2, std_error=est.std_error / q**2,
                      paths=est.paths)


def estimate_killed_payoff(spec: ModelSpec, cfg: SimConfig, q: float,
                           payoff_kind: str, f0: float, strike: float,
                           x: float = 0.0) -> McEstimate:
    """E[G(F0 e^{U_{e(q)}})] for floor/call payoffs by path-integral weighting."""
    _sim_check(spec)
    _apply_threads(cfg)
    kind = {"floor": 0, "call": 1}.get(payoff_kind)
    if kind is None:
        raise McUnsupportedError(f"unsupported payoff kind {payoff_kind!r}")
    t_star = cfg.horizon if cfg.horizon is not None else default_horizon(q)
    out = np.zeros(cfg.paths)
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec)
    _kern_killed_payoff(cfg.paths, cfg.seed, x, b, mu, sigma, delta,
                        lp, cwp, rp, op, lm, cwm, rm, om,
                        q, cfg.dt, t_star, kind, f0, strike, out)
    mean, se = _chunked_mean_se(out)
    # the truncated tail carries payoff mass bounded by the killed payoff scale
    tail = math.exp(-q * t_star) * max(f0, strike)
    return McEstimate(value=mean, std_error=se + tail / 3.0, paths=cfg.paths)


def estimate_first_passage(spec: ModelSpec, cfg: SimConfig, q: float,
                           level: float, direction: str) -> McEstimate:
    """E[e^{-q tau}] for the upward passage of X (direction='up') or the
    downward passage of the fully refracted process (direction='down')."""
    _sim_check(spec)
    _apply_threads(cfg)
    if direction == "up":
        b_eff, upward = math.inf, True
    elif direction == "down":
        b_eff, upward = -math.inf, False
    else:
        raise McUnsupportedError(f"direction must be up/down, got {direction!r}")
    t_star = cfg.horizon if cfg.horizon is not None else default_horizon(q)
    out = np.zeros(cfg.paths)
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec, b_override=b_eff)
    _kern_first_passage(cfg.paths, cfg.seed, 0.0, b, mu, sigma, delta,
                        lp, cwp, rp, op, lm, cwm, rm, om,
                        q, cfg.dt, t_star, level, upward, out)
    mean, se = _chunked_mean_se(out)
    tail = math.exp(-q * t_star)
    return McEstimate(value=mean, std_error=se + tail / 3.0, paths=cfg.paths)


def sample_extremes(spec: ModelSpec, cfg: SimConfig, q: float,
                    which: str) -> np.ndarray:
    """Per-path killed extreme of X (delta off) or Y (delta always on)."""
    _sim_check(spec)
    _apply_threads(cfg)
    table = {
        "supX": (math.inf, "max"), "infX": (math.inf, "min"),
        "supY": (-math.inf, "max"), "infY": (-math.inf, "min"),
    }
    if which not in table:
        raise McUnsupportedError("which must be one of supX/infX/supY/infY")
    b_eff, side = table[which]
    t_star = cfg.horizon if cfg.horizon is not None else default_horizon(q)
    out_max = np.zeros(cfg.paths)
    out_min = np.zeros(cfg.paths)
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec, b_override=b_eff)
    _kern_extremes(cfg.paths, cfg.seed, 0.0, b, mu, sigma, delta,
                   lp, cwp, rp, op, lm, cwm, rm, om,
                   q, cfg.dt, t_star, out_max, out_min)
    return out_max if side == "max" else out_min


def estimate_extremes(spec: ModelSpec, cfg: SimConfig, q: float, which: str,
                      s_values) -> list[McEstimate]:
    """Transform estimates E[e^{-s sup}] (or E[e^{s inf}]) at the given s."""
    sample = sample_extremes(spec, cfg, q, which)
    sign = -1.0 if which.startswith("sup") else 1.0
    out = []
    for s in np.atleast_1d(np.asarray(s_values, dtype=float)):
        vals = np.exp(sign * s * sample)
        mean, se = _chunked_mean_se(vals)
        out.append(McEstimate(value=mean, std_error=se, paths=cfg.paths))
    return out


def terminal_values(spec: ModelSpec, cfg: SimConfig, t_end: float,
                    x: float = 0.0, b_override: float | None = None) -> np.ndarray:
    """Per-path values of the refracted process at a fixed time."""
    _sim_check(spec)
    _apply_threads(cfg)
    out = np.zeros(cfg.paths)
    b, mu, sigma, delta, lp, cwp, rp, op, lm, cwm, rm, om = _sim_args(spec, b_override)
    _kern_terminal(cfg.paths, cfg.seed, x, b, mu, sigma, delta,
                   lp, cwp, rp, op, lm, cwm, rm, om, cfg.dt, t_end, out)
    return out


def estimate_terminal_probability(spec: ModelSpec, cfg: SimConfig, t_end: float,
                                  x: float, y: float, mode: str = "below",
                                  b_override: float | None = None) -> McEstimate:
    vals = terminal_values(spec, cfg, t_end, x, b_override)
    ind = (vals < y) if mode == "below" else (vals > y)
    mean, se = _chunked_mean_se(ind.astype(float))
    return McEstimate(value=mean, std_error=se, paths=cfg.paths)


def estimate_terminal_payoff(spec: ModelSpec, cfg: SimConfig, t_end: float,
                             payoff_kind: str, f0: float, strike: float,
                             discount: float = 0.0) -> McEstimate:
    vals = terminal_values(spec, cfg, t_end)
    acct = f0 * np.exp(vals)
    if payoff_kind == "floor":
        g = np.maximum(acct, strike)
    elif payoff_kind == "call":
        g = np.maximum(acct - strike, 0.0)
    else:
        raise McUnsupportedError(f"unsupported payoff kind {payoff_kind!r}")
    g = g * math.exp(-discount * t_end)
    mean, se = _chunked_mean_se(g)
    return McEstimate(value=mean, std_error=se, paths=cfg.paths)
