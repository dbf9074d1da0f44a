"""Experiment configuration: presets, JSON loading, CSV emission.

A run configuration is a flat record of every knob an experiment needs.
Presets ship the reference setups; a JSON config file (``--config``) and the
command-line flags override individual fields.  Output tables are CSV with a
``#``-prefixed header block echoing the full configuration, so a table can
always be traced back to the run that made it (and reruns are byte
identical: nothing time- or host-dependent is written).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

from . import __version__

EXPERIMENTS = ("snr_curves", "rate_sweep", "gaussianity", "witnesses", "oracle_check")

#: Peak powers (W) of the reference rate table.
TABLE_PEAK_POWERS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.40, 0.50,
                     0.60, 0.70, 0.80, 0.90, 1.00, 1.10, 1.20)


@dataclass
class RunConfig:
    """Flat experiment description; unknown fields in files are rejected."""

    experiment: str
    schemes: Tuple[str, ...] = ("dco", "aco")
    n: int = 64
    seed: Optional[int] = None
    out_dir: str = "out"
    frames: int = 100_000
    # channel
    alpha: Optional[float] = None  # None: physical for simulations, calibrated for rates
    lambda_b: float = 0.001
    gain_file: Optional[str] = None
    # snr-curve sweep
    weight: float = 0.5
    dco_bias_levels: Tuple[float, ...] = (1.0, 2.0, 3.0)
    dco_top_offsets: Tuple[float, ...] = (1.0, 2.0, 3.0)
    aco_top_levels: Tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    # rate sweep
    p_tmax: float = 0.1
    peak_powers: Tuple[float, ...] = TABLE_PEAK_POWERS
    grid_resolution: int = 100
    rate_log_base: float = 2.718281828459045
    ga_population: int = 1000
    ga_generations: int = 70
    ga_precision_bits: int = 20
    ga_generation_gap: float = 0.9
    # gaussianity study
    gauss_eps_bias: float = 1.0
    gauss_eps_top: float = 2.0
    gauss_y_max: float = 0.5
    kde_subcarriers: Tuple[int, ...] = (1, 31)
    # witness grids
    witness_sigma_y: float = 1.0
    witness_eps_top: Tuple[float, ...] = (1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0)
    witness_y_max: float = 0.5
    witness_weight: float = 0.25
    # oracle check
    oracle_grid: int = 20

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choices: {EXPERIMENTS}")
        for s in self.schemes:
            if s not in ("dco", "aco"):
                raise ValueError(f"unknown scheme {s!r}")
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 4, got {self.n}")
        if self.frames < 1:
            raise ValueError(f"frames must be positive, got {self.frames}")
        if self.experiment in ("snr_curves", "rate_sweep", "gaussianity") and self.seed is None:
            raise ValueError(f"experiment {self.experiment!r} is stochastic; a seed is required")

    def replace(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(self, **kwargs)

    def echo_items(self):
        """Sorted (key, value) pairs describing the full configuration."""
        d = dataclasses.asdict(self)
        return sorted(d.items())


_PRESETS = {
    # per-subcarrier SNR, theory vs simulation, DCO bias/top sweep
    "fig2": {"experiment": "snr_curves", "schemes": ("dco",)},
    # same for ACO over its top-level sweep
    "fig3": {"experiment": "snr_curves", "schemes": ("aco",)},
    # residual Gaussianity study at the reference clipping configuration
    "fig4-9": {"experiment": "gaussianity"},
    # total rate vs peak power, GA and uniform columns
    "table2": {"experiment": "rate_sweep"},
}


def preset_names() -> Tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def from_preset(name: str, **overrides) -> RunConfig:
    try:
        fields = dict(_PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choices: {preset_names()}") from None
    fields.update(overrides)
    return RunConfig(**fields)


def load_config(path, **overrides) -> RunConfig:
    """Build a RunConfig from a JSON file plus overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config root must be an object, got {type(raw).__name__}")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    for key in ("schemes", "dco_bias_levels", "dco_top_offsets", "aco_top_levels",
                "peak_powers", "kde_subcarriers", "witness_eps_top"):
        if key in raw and isinstance(raw[key], list):
            raw[key] = tuple(raw[key])
    raw.update(overrides)
    return RunConfig(**raw)


def write_csv(path, config: RunConfig, columns: Sequence[str], rows) -> Path:
    """Write one result table with the provenance header block.

    Floats are rendered at 6 significant digits; the header echoes the
    artifact version and every configuration field.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# photon-ofdm {__version__}"]
    for key, value in config.echo_items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for row in rows:
        rendered = []
        for cell in row:
            if isinstance(cell, float):
                rendered.append(f"{cell:.6g}")
            else:
                rendered.append(str(cell))
        lines.append(",".join(rendered))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
