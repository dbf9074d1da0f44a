"""Subcarrier power allocation: uniform baseline, genetic algorithm, and
non-convexity diagnostics of the optical-power constraint.

Both optimizers maximize the total rate ``sum_k log(1 + SNR_k)`` subject to
the mean-optical-power bound and the peak power ``y_max``.  The uniform
baseline puts the same weight on every data subcarrier and searches only the
waveform scale (plus the DC bias for DCO); the GA searches every weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .analytic import (
    SQRT_2PI,
    ChannelConfig,
    Scheme,
    aco_clip_moments,
    clipped_mean_dco,
    data_subcarriers,
    dco_clip_moments,
    DEFAULT_RATE_LOG_BASE,
)
from .qfunc import gauss_phi, gauss_phi_d1, gauss_phi_d2, gauss_q

_POWER_TOL = 1e-9


@dataclass(frozen=True)
class AllocationProblem:
    """One power-allocation instance."""

    scheme: Scheme
    n: int
    channel: ChannelConfig
    p_tmax: float
    y_max: float

    def __post_init__(self):
        if self.p_tmax <= 0.0:
            raise ValueError(f"p_tmax must be positive, got {self.p_tmax}")
        if self.y_max <= 0.0:
            raise ValueError(f"y_max must be positive, got {self.y_max}")
        if self.channel.n != self.n:
            raise ValueError(f"channel has {self.channel.n} gains, problem expects {self.n}")

    @property
    def data_k(self) -> np.ndarray:
        return data_subcarriers(self.scheme, self.n)


@dataclass(frozen=True)
class GAParams:
    """Genetic-algorithm tuning knobs.

    Defaults follow the reference setup: 1000 binary-coded individuals at 20
    bits per variable, 70 generations, generation gap 0.9, stochastic
    universal sampling over linearly-ranked fitness, discrete recombination
    and breeder-style real-valued mutation.
    """

    population: int = 1000
    generations: int = 70
    precision_bits: int = 20
    generation_gap: float = 0.9
    weight_upper: float = 0.5
    bias_upper: Optional[float] = None
    selection_pressure: float = 2.0
    mutation_range: float = 0.1
    init_resample: int = 20

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be an even integer >= 4")
        if self.precision_bits < 1:
            raise ValueError("precision_bits must be >= 1")
        if not 0.0 < self.generation_gap <= 1.0:
            raise ValueError("generation_gap must lie in (0, 1]")
        if not 1.0 < self.selection_pressure <= 2.0:
            raise ValueError("selection_pressure must lie in (1, 2]")


@dataclass
class AllocationSolution:
    """Feasible allocation with its achieved objective."""

    weights: np.ndarray
    b_dc: Optional[float]
    feasible: bool
    total_rate: float
    method: str
    power: float


# ---------------------------------------------------------------------------
# constraint and batched objective
# ---------------------------------------------------------------------------


def constraint_power(scheme: Scheme, weights, b_dc: float, y_max: float):
    """Mean optical power of the clipped waveform, in power units.

    Valid for any bias (the clipped-mean form does not require the strict
    ``0 < eps_bias < eps_top`` window).  Degenerate all-zero weights reduce
    to the pure-DC power for DCO and to zero for ACO.
    """
    w = np.asarray(weights, dtype=float)
    sigma = math.sqrt(2.0 * float(np.sum(w * w)))
    if sigma == 0.0:
        if scheme == Scheme.DCO:
            return float(min(max(b_dc, 0.0), y_max))
        return 0.0
    if scheme == Scheme.DCO:
        return sigma * float(clipped_mean_dco(b_dc / sigma, y_max / sigma))
    _, _, _, beta_n = aco_clip_moments(y_max / sigma)
    return sigma * (1.0 / SQRT_2PI + float(beta_n))


def _batched_power(scheme: Scheme, sigma: np.ndarray, b: np.ndarray,
                   y_max: float) -> np.ndarray:
    """Vectorized constraint over candidate (sigma, bias) pairs."""
    power = np.empty_like(sigma)
    zero = sigma == 0.0
    live = ~zero
    if scheme == Scheme.DCO:
        power[zero] = np.clip(b[zero], 0.0, y_max)
        if live.any():
            s = sigma[live]
            power[live] = s * clipped_mean_dco(b[live] / s, y_max / s)
    else:
        power[zero] = 0.0
        if live.any():
            s = sigma[live]
            _, _, _, beta_n = aco_clip_moments(y_max / s)
            power[live] = s * (1.0 / SQRT_2PI + beta_n)
    return power


def _batched_rate(scheme: Scheme, w2: np.ndarray, b: np.ndarray,
                  channel: ChannelConfig, data_k: np.ndarray, y_max: float,
                  base: float) -> np.ndarray:
    """Total rate for a batch of candidates.

    ``w2`` holds squared weights, one row per candidate; ``b`` the DC bias
    (ignored for ACO).  Rows whose scale is zero get rate 0; rows whose bias
    violates the clipper's domain must be filtered out by the caller.
    """
    n = channel.n
    sigma2 = 2.0 * w2.sum(axis=1)
    sigma = np.sqrt(sigma2)
    rate = np.zeros(sigma.shape)
    live = sigma > 0.0
    if not live.any():
        return rate
    s = sigma[live]
    eps_top = y_max / s
    if scheme == Scheme.DCO:
        k, mu_n, s2_n, _ = dco_clip_moments(b[live] / s, eps_top)
        dc_term = k * b[live] + mu_n * s
    else:
        k, mu_n, s2_n, _ = aco_clip_moments(eps_top)
        dc_term = k * s / SQRT_2PI + mu_n * s
    gk2 = np.abs(channel.gain_array[data_k]) ** 2
    alpha = channel.alpha
    clip_noise = (alpha * alpha) * (s2_n * sigma2[live])[:, None] * gk2
    noise = clip_noise + (alpha * channel.g0 * dc_term + channel.lambda_b)[:, None]
    if scheme == Scheme.ACO:
        noise *= 4.0
    snr = n * alpha * alpha * (k * k)[:, None] * w2[live] * gk2 / noise
    rate[live] = np.log1p(snr).sum(axis=1) / math.log(base)
    return rate


def _uniform_rate(problem: AllocationProblem, sigma: np.ndarray, b: np.ndarray,
                  base: float) -> np.ndarray:
    ndata = problem.data_k.size
    w2 = (sigma * sigma / (2.0 * ndata))[:, None] * np.ones(ndata)
    return _batched_rate(problem.scheme, w2, b, problem.channel,
                         problem.data_k, problem.y_max, base)


# ---------------------------------------------------------------------------
# uniform baseline
# ---------------------------------------------------------------------------


def uniform_allocate(problem: AllocationProblem, grid_resolution: int = 100,
                     zoom_rounds: int = 10,
                     base: float = DEFAULT_RATE_LOG_BASE) -> AllocationSolution:
    """Best equal-weight allocation via a coarse grid plus local refinement.

    DCO searches (sigma_y, B_DC), ACO searches sigma_y only.  Each zoom
    round shrinks the grid window around the incumbent, so the result is
    deterministic and improves (never degrades) with ``grid_resolution``.
    """
    if grid_resolution < 50:
        raise ValueError(f"grid_resolution must be >= 50, got {grid_resolution}")
    y_max, p_tmax = problem.y_max, problem.p_tmax
    r = int(grid_resolution)
    # log-spaced coarse stage so the search reaches the feasible scale no
    # matter how tight the power budget is; the zoom rounds go linear
    scale_cap = min(y_max, SQRT_2PI * p_tmax)
    s_lo, s_hi = scale_cap * 1e-6, max(1.5 * y_max, 1.3 * SQRT_2PI * p_tmax)
    b_lo, b_hi = scale_cap * 1e-6, y_max
    best_rate, best_arg = -np.inf, None

    for stage in range(zoom_rounds):
        space = np.geomspace if stage == 0 else np.linspace
        sig = space(s_lo, s_hi, r)
        if problem.scheme == Scheme.DCO:
            bias = space(b_lo, b_hi, r)
            ss, bb = np.meshgrid(sig, bias, indexing="ij")
            ss, bb = ss.ravel(), bb.ravel()
        else:
            ss, bb = sig, np.zeros_like(sig)
        power = _batched_power(problem.scheme, ss, bb, y_max)
        feasible = power <= p_tmax + _POWER_TOL
        if problem.scheme == Scheme.DCO:
            feasible &= (bb > 0.0) & (bb < y_max)
        if not feasible.any():
            break
        rate = np.where(feasible,
                        _uniform_rate(problem, ss, bb, base),
                        -np.inf)
        i = int(np.argmax(rate))
        if rate[i] > best_rate:
            best_rate, best_arg = float(rate[i]), (float(ss[i]), float(bb[i]))
        s_center, b_center = best_arg
        if stage == 0:
            ratio = (s_hi / s_lo) ** (1.0 / (r - 1))
            s_lo, s_hi = s_center / ratio ** 2, s_center * ratio ** 2
            if problem.scheme == Scheme.DCO:
                b_ratio = (b_hi / b_lo) ** (1.0 / (r - 1))
                b_lo = b_center / b_ratio ** 2
                b_hi = min(b_center * b_ratio ** 2, y_max)
        else:
            ds = (s_hi - s_lo) / (r - 1)
            s_lo, s_hi = max(s_center - 2 * ds, scale_cap * 1e-9), s_center + 2 * ds
            if problem.scheme == Scheme.DCO:
                db = (b_hi - b_lo) / (r - 1)
                b_lo = max(b_center - 2 * db, scale_cap * 1e-9)
                b_hi = min(b_center + 2 * db, y_max)

    if best_arg is None:
        raise ValueError("no feasible uniform allocation (power bound too tight)")
    sigma_opt, b_opt = best_arg
    ndata = problem.data_k.size
    weights = np.full(ndata, sigma_opt / math.sqrt(2.0 * ndata))
    power = constraint_power(problem.scheme, weights,
                             b_opt if problem.scheme == Scheme.DCO else 0.0, y_max)
    return AllocationSolution(
        weights=weights,
        b_dc=b_opt if problem.scheme == Scheme.DCO else None,
        feasible=power <= p_tmax + _POWER_TOL,
        total_rate=best_rate,
        method="uniform",
        power=float(power),
    )


# ---------------------------------------------------------------------------
# genetic algorithm
# ---------------------------------------------------------------------------


def _decode(genes: np.ndarray, upper: np.ndarray, levels: int) -> np.ndarray:
    return genes * (upper / (levels - 1.0))


#: Decades spanned by the per-individual waveform scale at initialization.
_INIT_SCALE_DECADES = 2.5


def _init_genes(rng: np.random.Generator, pop_n: int,
                problem: AllocationProblem, upper: np.ndarray,
                levels: int) -> np.ndarray:
    """Initial population stratified over waveform scale and bias ratio.

    A flat draw over the variable bounds puts the waveform scale orders of
    magnitude above any feasible power budget (the whole population starts
    infeasible), which the reference generation budget cannot recover from.
    Instead each individual gets a per-subcarrier shape jitter around equal
    weights, rescaled so its waveform deviation is log-uniform over the
    decades below the problem's own feasibility scale, and (DCO) a bias
    drawn as a multiple of that deviation.
    """
    dco = problem.scheme == Scheme.DCO
    n_weights = upper.size - 1 if dco else upper.size
    sigma_cap = min(1.5 * problem.y_max, 1.3 * SQRT_2PI * problem.p_tmax)
    shape = 0.25 + 0.5 * rng.random((pop_n, n_weights))
    sigma_shape = np.sqrt(2.0 * (shape * shape).sum(axis=1))
    sigma_drawn = sigma_cap * 10.0 ** (-_INIT_SCALE_DECADES * rng.random(pop_n))
    weights = shape * (sigma_drawn / sigma_shape)[:, None]
    weights = np.minimum(weights, upper[:n_weights])
    if dco:
        bias_level = 0.2 + 3.8 * rng.random(pop_n)
        bias = np.minimum(sigma_drawn * bias_level, upper[-1])
        values = np.concatenate([weights, bias[:, None]], axis=1)
    else:
        values = weights
    genes = np.rint(values * ((levels - 1.0) / upper)).astype(np.int64)
    return np.clip(genes, 0, levels - 1)


def _ga_fitness(problem: AllocationProblem, values: np.ndarray,
                base: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fitness, rate, feasible) for a decoded population.

    Infeasible candidates get a fitness below every feasible one, decreasing
    in the amount of violation, so selection pressure still points toward
    the feasible region.
    """
    y_max, p_tmax = problem.y_max, problem.p_tmax
    if problem.scheme == Scheme.DCO:
        w, b = values[:, :-1], values[:, -1]
    else:
        w, b = values, np.zeros(values.shape[0])
    sigma = np.sqrt(2.0 * (w * w).sum(axis=1))
    power = _batched_power(problem.scheme, sigma, b, y_max)
    violation = np.maximum(power - p_tmax, 0.0) / p_tmax
    if problem.scheme == Scheme.DCO:
        violation += np.where((b <= 0.0) | (b >= y_max), 1.0, 0.0)
        violation += np.maximum(b - y_max, 0.0) / y_max
    feasible = violation == 0.0
    rate = np.zeros(values.shape[0])
    if feasible.any():
        rate[feasible] = _batched_rate(problem.scheme, w[feasible] ** 2, b[feasible],
                                       problem.channel, problem.data_k, y_max, base)
    fitness = np.where(feasible, rate, -1.0 - violation)
    return fitness, rate, feasible


def _linear_ranking(fitness: np.ndarray, pressure: float) -> np.ndarray:
    """Rank-based selection weights in [2 - sp, sp], mean 1."""
    n = fitness.size
    order = np.argsort(fitness, kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(n)
    return 2.0 - pressure + 2.0 * (pressure - 1.0) * ranks / (n - 1.0)


def _sus(weights: np.ndarray, n_select: int, rng: np.random.Generator) -> np.ndarray:
    """Stochastic universal sampling: evenly spaced pointers, one spin."""
    cum = np.cumsum(weights)
    step = cum[-1] / n_select
    pointers = (rng.random() + np.arange(n_select)) * step
    return np.searchsorted(cum, pointers, side="right").clip(max=weights.size - 1)


def ga_allocate(problem: AllocationProblem, params: GAParams = GAParams(),
                seed: int = 0,
                base: float = DEFAULT_RATE_LOG_BASE) -> AllocationSolution:
    """Genetic-algorithm power allocation.

    Decision variables are the per-subcarrier weights (plus the DC bias for
    DCO), binary-coded at ``precision_bits`` and decoded linearly into
    ``[0, upper]``.  Each generation: linear ranking, stochastic universal
    sampling of ``generation_gap * population`` parents, discrete
    recombination, breeder-style mutation (rate ``1/n_vars``, steps drawn
    from a dyadic ladder spanning ``mutation_range`` of the domain), then
    fitness-based reinsertion that keeps the best tenth of the old
    population.  Fully deterministic for a given seed.
    """
    ndata = problem.data_k.size
    n_var = ndata + (1 if problem.scheme == Scheme.DCO else 0)
    upper = np.full(n_var, params.weight_upper)
    if problem.scheme == Scheme.DCO:
        upper[-1] = params.bias_upper if params.bias_upper is not None \
            else min(params.weight_upper, problem.y_max * (1.0 - 1e-9))
    levels = 2 ** params.precision_bits
    rng = np.random.default_rng(seed)
    pop_n = params.population

    genes = _init_genes(rng, pop_n, problem, upper, levels)
    fitness, rate, feasible = _ga_fitness(problem, _decode(genes, upper, levels), base)
    for _ in range(params.init_resample):
        if feasible.any():
            break
        genes = _init_genes(rng, pop_n, problem, upper, levels)
        fitness, rate, feasible = _ga_fitness(problem, _decode(genes, upper, levels), base)
    if not feasible.any():
        warnings.warn("no feasible individual after initialization resampling",
                      RuntimeWarning, stacklevel=2)

    best_rate, best_genes = -np.inf, None
    if feasible.any():
        i = int(np.argmax(np.where(feasible, rate, -np.inf)))
        best_rate, best_genes = float(rate[i]), genes[i].copy()

    n_sel = int(round(params.generation_gap * pop_n))
    n_sel -= n_sel % 2
    mut_p = 1.0 / n_var
    bit_weights = 0.5 ** np.arange(params.precision_bits)

    for _ in range(params.generations):
        ranked = _linear_ranking(fitness, params.selection_pressure)
        chosen = _sus(ranked, n_sel, rng)
        chosen = chosen[rng.permutation(n_sel)]
        parents = genes[chosen]

        # discrete recombination: each variable copied whole from either parent
        mask = rng.random((n_sel // 2, n_var)) < 0.5
        pa, pb = parents[0::2], parents[1::2]
        offspring = np.empty_like(parents)
        offspring[0::2] = np.where(mask, pa, pb)
        offspring[1::2] = np.where(mask, pb, pa)

        # breeder mutation in value space, re-quantized onto the gene grid
        mutate = rng.random((n_sel, n_var)) < mut_p
        sign = np.where(rng.random((n_sel, n_var)) < 0.5, -1.0, 1.0)
        delta = (rng.random((n_sel, n_var, params.precision_bits))
                 < 1.0 / params.precision_bits) @ bit_weights
        values = _decode(offspring, upper, levels)
        step = sign * params.mutation_range * upper * delta
        mutated = np.where(mutate, values + step, values)
        offspring = np.rint(mutated * ((levels - 1.0) / upper)).astype(np.int64)
        np.clip(offspring, 0, levels - 1, out=offspring)

        off_fit, off_rate, off_feas = _ga_fitness(
            problem, _decode(offspring, upper, levels), base)

        # fitness-based reinsertion: offspring replace the weakest parents
        keep = np.argsort(fitness, kind="stable")[n_sel:]
        genes = np.concatenate([genes[keep], offspring])
        fitness = np.concatenate([fitness[keep], off_fit])
        rate = np.concatenate([rate[keep], off_rate])
        feasible = np.concatenate([feasible[keep], off_feas])

        if off_feas.any():
            i = int(np.argmax(np.where(off_feas, off_rate, -np.inf)))
            if off_rate[i] > best_rate:
                best_rate, best_genes = float(off_rate[i]), offspring[i].copy()

    if best_genes is None:
        raise RuntimeError("genetic algorithm found no feasible allocation")
    values = _decode(best_genes, upper, levels)
    if problem.scheme == Scheme.DCO:
        weights, b_dc = values[:-1], float(values[-1])
    else:
        weights, b_dc = values, None
    power = constraint_power(problem.scheme, weights, b_dc or 0.0, problem.y_max)
    return AllocationSolution(
        weights=weights,
        b_dc=b_dc,
        feasible=power <= problem.p_tmax + _POWER_TOL,
        total_rate=best_rate,
        method="ga",
        power=float(power),
    )


# ---------------------------------------------------------------------------
# non-convexity witnesses
# ---------------------------------------------------------------------------


def witness_power_curve_dco(eps_bias, eps_top, sigma_y: float = 1.0):
    """Mean-power model the DCO witness differentiates.

    This is the classical closed form whose top-clip term enters through the
    normal density; it differs from the measured mean power (see
    :func:`photon_ofdm.analytic.mean_transmit_power`, whose top-clip term
    carries the tail probability instead) by a term that vanishes as the top
    clip disappears.  Its curvature at ``eps_bias = eps_top - 1`` is the
    documented witness value ``sigma_y * (phi(eps_top - 1) - 2 phi(1))``.
    """
    eb = np.asarray(eps_bias, dtype=float)
    b = np.asarray(eps_top, dtype=float) - eb
    return sigma_y * (eb + gauss_phi(eb) - gauss_phi(b) + b * gauss_phi(b)
                      - eb * gauss_q(eb))


def constraint_curvature_dco(eps_bias, eps_top, sigma_y: float = 1.0):
    """Second derivative of the *measured* mean power along the bias level."""
    eb = np.asarray(eps_bias, dtype=float)
    return sigma_y * (gauss_phi(eb) - gauss_phi(np.asarray(eps_top) - eb))


def nonconvexity_witness_dco(epsilon_top: float, sigma_y: float = 1.0,
                             return_parts: bool = False):
    """Curvature of the DCO power model at the probe bias ``eps_top - 1``.

    Evaluates the closed-form second derivative of
    :func:`witness_power_curve_dco` and cross-checks it against a central
    finite difference of the same curve (they must agree to 1e-4 relative).
    A negative value certifies that the power constraint is non-convex.
    """
    if epsilon_top <= 1.0:
        raise ValueError(f"witness needs epsilon_top > 1, got {epsilon_top}")
    if sigma_y <= 0.0:
        raise ValueError(f"sigma_y must be positive, got {sigma_y}")
    eb = epsilon_top - 1.0
    b = 1.0
    closed = sigma_y * float(
        gauss_phi(eb) + (b - 1.0) * gauss_phi_d2(b) + 2.0 * gauss_phi_d1(b)
    )
    h = 1e-3
    fd = float(
        witness_power_curve_dco(eb + h, epsilon_top, sigma_y)
        - 2.0 * witness_power_curve_dco(eb, epsilon_top, sigma_y)
        + witness_power_curve_dco(eb - h, epsilon_top, sigma_y)
    ) / (h * h)
    scale = max(abs(closed), abs(fd), 1e-12 * sigma_y)
    if abs(closed - fd) > 1e-4 * scale:
        raise ArithmeticError(
            f"witness curvature mismatch: closed {closed:.8g} vs fd {fd:.8g}")
    return (closed, fd) if return_parts else closed


def aco_power_slope(sigma_y: float, y_max: float) -> float:
    """First derivative of the ACO mean power along the waveform scale."""
    if sigma_y <= 0.0 or y_max <= 0.0:
        raise ValueError("sigma_y and y_max must be positive")
    return 1.0 / SQRT_2PI - float(gauss_phi(y_max / sigma_y))


def _aco_power_of_weights(weights: np.ndarray, y_max: float) -> float:
    sigma = math.sqrt(2.0 * float(np.sum(weights * weights)))
    _, _, _, beta_n = aco_clip_moments(y_max / sigma)
    return sigma * (1.0 / SQRT_2PI + float(beta_n))


def nonconvexity_witness_aco(y_max: float, weights, j: int,
                             return_parts: bool = False):
    """Curvature of the ACO mean power along a single weight direction.

    Requires every weight except ``w_j`` to be zero (the single-weight
    direction is where the scale map is linear and the curvature of the
    power curve shows through undamped).  Negative for every valid input.
    """
    w = np.asarray(weights, dtype=float)
    if not 0 <= j < w.size:
        raise ValueError(f"index {j} out of range for {w.size} weights")
    if w[j] <= 0.0:
        raise ValueError("the probed weight must be positive")
    others = np.delete(w, j)
    if np.any(others != 0.0):
        raise ValueError("witness direction requires all other weights to be zero")
    if y_max <= 0.0:
        raise ValueError(f"y_max must be positive, got {y_max}")

    sigma = math.sqrt(2.0) * float(w[j])
    # d sigma / d w_j = sqrt(2) on the single-weight ray
    closed = 2.0 * (y_max / sigma ** 2) * float(gauss_phi_d1(y_max / sigma))

    h = 1e-3 * float(w[j])
    probe = w.astype(float).copy()

    def at(wj):
        probe[j] = wj
        return _aco_power_of_weights(probe, y_max)

    fd = (at(w[j] + h) - 2.0 * at(w[j]) + at(w[j] - h)) / (h * h)
    scale = max(abs(closed), abs(fd), 1e-12)
    if abs(closed - fd) > 1e-4 * scale:
        raise ArithmeticError(
            f"witness curvature mismatch: closed {closed:.8g} vs fd {fd:.8g}")
    return (closed, fd) if return_parts else closed
