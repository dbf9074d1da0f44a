"""Command-line experiment runner.

Verbs map one-to-one onto the reproducible experiments: per-subcarrier SNR
curves (theory vs simulation), the total-rate sweep over peak power,
the residual-Gaussianity study, the non-convexity witnesses, and the
closed-form-vs-quadrature oracle check.  Every verb writes CSV tables whose
header block echoes the full configuration; identical config and seed give
byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .allocation import (
    AllocationProblem,
    GAParams,
    constraint_curvature_dco,
    ga_allocate,
    nonconvexity_witness_aco,
    nonconvexity_witness_dco,
    uniform_allocate,
)
from .analytic import (
    Scheme,
    WaveformConfig,
    clip_stats_aco,
    clip_stats_dco,
    data_subcarriers,
    subcarrier_snrs,
)
from .channel import (
    ALPHA_TABLE_CALIBRATED,
    alpha_from_wavelength,
    default_channel,
    simulate_link,
)
from .quadrature import clip_stats_aco_quadrature, clip_stats_dco_quadrature
from .residual_stats import kde, reim_covariance
from .runconfig import RunConfig, from_preset, load_config, write_csv

_ORACLE_TOL = 1e-6


def _sim_alpha(config: RunConfig) -> float:
    """Photon-rate scale for simulation experiments (physical by default)."""
    return config.alpha if config.alpha is not None else alpha_from_wavelength()


def _rate_alpha(config: RunConfig) -> float:
    """Photon-rate scale for rate experiments (table-calibrated by default)."""
    return config.alpha if config.alpha is not None else ALPHA_TABLE_CALIBRATED


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0.0 else float("-inf")


def run_snr_curves(config: RunConfig) -> list:
    """Theory-vs-simulation SNR per data subcarrier over the clip-level sweep."""
    channel = default_channel(alpha=_sim_alpha(config), lambda_b=config.lambda_b,
                              n=config.n, gain_path=config.gain_file)
    sweeps = []
    for scheme_name in config.schemes:
        scheme = Scheme(scheme_name)
        if scheme == Scheme.DCO:
            points = [(eb, eb + off) for eb in config.dco_bias_levels
                      for off in config.dco_top_offsets]
        else:
            points = [(None, et) for et in config.aco_top_levels]
        sweeps.extend((scheme, eb, et) for eb, et in points)

    seeds = np.random.SeedSequence(config.seed).spawn(len(sweeps))
    outputs = []
    rows_by_scheme = {}
    for (scheme, eb, et), seed in zip(sweeps, seeds):
        data_k = data_subcarriers(scheme, config.n)
        if config.weight == 0.0:
            theo = simu = np.zeros(data_k.size)
        else:
            wf = WaveformConfig.uniform(scheme, config.n, config.weight,
                                        epsilon_top=et, epsilon_bias=eb)
            theo = subcarrier_snrs(wf, channel)
            simu = simulate_link(wf, channel, config.frames, seed).snr_empirical
        rows = rows_by_scheme.setdefault(scheme.value, [])
        for k, t, s in zip(data_k, theo, simu):
            rows.append((0.0 if eb is None else eb, et, int(k),
                         float(t), float(s), _db(t), _db(s)))
    for scheme_name, rows in rows_by_scheme.items():
        path = Path(config.out_dir) / f"snr_curves_{scheme_name}.csv"
        outputs.append(write_csv(
            path, config,
            ("eps_bias", "eps_top", "k", "snr_theo", "snr_simu",
             "snr_theo_db", "snr_simu_db"),
            rows))
    return outputs


def run_rate_sweep(config: RunConfig) -> list:
    """Total rate vs peak power: GA and uniform columns for both schemes."""
    channel = default_channel(alpha=_rate_alpha(config), lambda_b=config.lambda_b,
                              n=config.n, gain_path=config.gain_file)
    params = GAParams(population=config.ga_population,
                      generations=config.ga_generations,
                      precision_bits=config.ga_precision_bits,
                      generation_gap=config.ga_generation_gap)
    seeds = np.random.SeedSequence(config.seed).spawn(2 * len(config.peak_powers))
    rows = []
    for i, peak in enumerate(config.peak_powers):
        cells = [float(peak)]
        for j, scheme in enumerate((Scheme.DCO, Scheme.ACO)):
            problem = AllocationProblem(scheme, config.n, channel,
                                        p_tmax=config.p_tmax, y_max=peak)
            ga_seed = int(seeds[2 * i + j].generate_state(1)[0])
            ga = ga_allocate(problem, params, seed=ga_seed, base=config.rate_log_base)
            uni = uniform_allocate(problem, grid_resolution=config.grid_resolution,
                                   base=config.rate_log_base)
            cells.extend([ga.total_rate, uni.total_rate])
        rows.append((cells[0], cells[1], cells[2], cells[3], cells[4]))
    path = Path(config.out_dir) / "rate_sweep.csv"
    return [write_csv(path, config,
                      ("peak_power", "dco_ga", "dco_uniform", "aco_ga", "aco_uniform"),
                      rows)]


def _gaussianity_waveform(config: RunConfig, scheme: Scheme) -> WaveformConfig:
    sigma_y = config.gauss_y_max / config.gauss_eps_top
    ndata = data_subcarriers(scheme, config.n).size
    weight = sigma_y / math.sqrt(2.0 * ndata)
    return WaveformConfig.uniform(
        scheme, config.n, weight, epsilon_top=config.gauss_eps_top,
        epsilon_bias=config.gauss_eps_bias if scheme == Scheme.DCO else None)


def run_gaussianity(config: RunConfig) -> list:
    """Residual KDE overlays and real/imag covariance per data subcarrier."""
    channel = default_channel(alpha=_sim_alpha(config), lambda_b=config.lambda_b,
                              n=config.n, gain_path=config.gain_file)
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.schemes))
    outputs = []
    for scheme_name, seed in zip(config.schemes, seeds):
        scheme = Scheme(scheme_name)
        wf = _gaussianity_waveform(config, scheme)
        stats = simulate_link(wf, channel, config.frames, seed,
                              collect_residuals=True)
        kde_rows = []
        for k in config.kde_subcarriers:
            pos = np.flatnonzero(stats.data_k == k)
            if pos.size == 0:
                raise ValueError(f"k={k} is not a data subcarrier for {scheme_name}")
            samples = stats.residuals[:, pos[0]]
            for part, values in (("real", samples.real), ("imag", samples.imag)):
                est = kde(values)
                overlay = est.gaussian_overlay()
                kde_rows.extend(
                    (int(k), part, float(g), float(d), float(o))
                    for g, d, o in zip(est.grid, est.density, overlay))
        outputs.append(write_csv(
            Path(config.out_dir) / f"kde_{scheme_name}.csv", config,
            ("k", "part", "grid", "density", "gaussian_fit"), kde_rows))

        cov_rows = []
        m = stats.n_frames
        for pos, k in enumerate(stats.data_k):
            e = stats.residuals[:, pos]
            if m >= 1000:
                corr = reim_covariance(e)
                raw = reim_covariance(e, normalized=False)
            else:  # smoke runs: too few samples for a meaningful covariance
                corr = raw = float("nan")
            cov_rows.append((int(k), corr, raw,
                             float(e.real.mean()), float(e.imag.mean()),
                             float(e.real.std(ddof=1) / math.sqrt(m)),
                             float(e.imag.std(ddof=1) / math.sqrt(m))))
        outputs.append(write_csv(
            Path(config.out_dir) / f"covariance_{scheme_name}.csv", config,
            ("k", "corr", "cov_raw", "mean_real", "mean_imag", "se_real", "se_imag"),
            cov_rows))
    return outputs


def run_witnesses(config: RunConfig) -> list:
    """Non-convexity witnesses with closed-form/finite-difference agreement."""
    dco_rows = []
    for et in config.witness_eps_top:
        closed, fd = nonconvexity_witness_dco(et, config.witness_sigma_y,
                                              return_parts=True)
        rel = abs(closed - fd) / max(abs(closed), 1e-300)
        true_curv = float(constraint_curvature_dco(et - 1.0, et, config.witness_sigma_y))
        dco_rows.append((et, config.witness_sigma_y, closed, fd, rel,
                         int(closed < 0.0), true_curv))
    aco_rows = []
    # scales where the top clip is active enough for the finite difference
    # to be well conditioned (for eps_top >~ 4 the curvature underflows
    # relative to the power scale and differencing loses it)
    for scale in (0.5, 1.0, 2.0, 4.0):
        w = config.witness_weight * scale
        weights = np.zeros(max(1, data_subcarriers(Scheme.ACO, config.n).size))
        weights[0] = w
        closed, fd = nonconvexity_witness_aco(config.witness_y_max, weights, 0,
                                              return_parts=True)
        rel = abs(closed - fd) / max(abs(closed), 1e-300)
        aco_rows.append((config.witness_y_max, w, closed, fd, rel,
                         int(closed < 0.0)))
    out = [
        write_csv(Path(config.out_dir) / "witnesses_dco.csv", config,
                  ("eps_top", "sigma_y", "curvature_closed", "curvature_fd",
                   "rel_gap", "negative", "measured_power_curvature"), dco_rows),
        write_csv(Path(config.out_dir) / "witnesses_aco.csv", config,
                  ("y_max", "weight", "curvature_closed", "curvature_fd",
                   "rel_gap", "negative"), aco_rows),
    ]
    return out


def _oracle_rel(a: float, b: float, floor: float) -> float:
    return abs(a - b) / max(abs(b), floor)


def run_oracle_check(config: RunConfig):
    """Closed forms vs quadrature over the clip-level grid; returns worst errors."""
    g = config.oracle_grid
    fields = ("k", "mu", "sigma2", "beta")
    worst = {("dco", f): 0.0 for f in fields}
    worst.update({("aco", f): 0.0 for f in fields})
    count = {"dco": 0, "aco": 0}
    for eb in np.linspace(0.25, 4.0, g):
        for et in np.linspace(eb + 0.25, 6.0, g):
            closed = clip_stats_dco(eb, et, 1.0)
            oracle = clip_stats_dco_quadrature(eb, et, 1.0)
            count["dco"] += 1
            for f in fields:
                err = _oracle_rel(getattr(closed, f), getattr(oracle, f), 1e-6)
                worst[("dco", f)] = max(worst[("dco", f)], err)
    for et in np.linspace(0.25, 6.0, g * g):
        closed = clip_stats_aco(et, 1.0)
        oracle = clip_stats_aco_quadrature(et, 1.0)
        count["aco"] += 1
        for f in fields:
            err = _oracle_rel(getattr(closed, f), getattr(oracle, f), 1e-6)
            worst[("aco", f)] = max(worst[("aco", f)], err)
    rows = [(scheme, f, count[scheme], err, _ORACLE_TOL, int(err <= _ORACLE_TOL))
            for (scheme, f), err in sorted(worst.items())]
    path = write_csv(Path(config.out_dir) / "oracle_check.csv", config,
                     ("scheme", "field", "grid_points", "max_rel_err", "tol", "pass"),
                     rows)
    ok = all(err <= _ORACLE_TOL for err in worst.values())
    return [path], ok


_RUNNERS = {
    "snr_curves": run_snr_curves,
    "rate_sweep": run_rate_sweep,
    "gaussianity": run_gaussianity,
    "witnesses": run_witnesses,
}


def _build_config(args, experiment: str) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.frames is not None:
        overrides["frames"] = args.frames
    if args.config is not None:
        config = load_config(args.config, **overrides)
    elif args.preset is not None:
        config = from_preset(args.preset, **overrides)
    else:
        config = RunConfig(experiment=experiment, **overrides)
    if config.experiment != experiment:
        raise ValueError(
            f"configuration describes experiment {config.experiment!r}, "
            f"but the {experiment.replace('_', '-')!r} command was invoked")
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="photon-ofdm",
        description="Photon-level optical OFDM experiments (clipping analysis, "
                    "Poisson link simulation, power allocation).")
    sub = parser.add_subparsers(dest="command", required=True)
    for verb in ("snr-curves", "rate-sweep", "gaussianity", "witnesses", "oracle-check"):
        p = sub.add_parser(verb, help=f"run the {verb.replace('-', ' ')} experiment")
        p.add_argument("--config", type=str, default=None,
                       help="JSON run-configuration file")
        p.add_argument("--preset", type=str, default=None,
                       help="named reference configuration (fig2, fig3, fig4-9, table2)")
        p.add_argument("--seed", type=int, default=None, help="master random seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--frames", type=int, default=None,
                       help="Monte Carlo frame count")
    args = parser.parse_args(argv)
    experiment = args.command.replace("-", "_")

    try:
        config = _build_config(args, experiment)
        if experiment == "oracle_check":
            paths, ok = run_oracle_check(config)
        else:
            paths = _RUNNERS[experiment](config)
            ok = True
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(f"wrote {path}")
    if not ok:
        print("oracle check FAILED", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
