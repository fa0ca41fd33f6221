"""Two-node experiments: SNR traces and loss-versus-distance sweeps."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .antenna import AntennaArray, steering_vector
from .condition import ChannelConditionModel, FixedConditionModel
from .fading import BlockageConfig, ChannelModel
from .geometry import Orientation, Position3D, Velocity3D, relative_geometry
from .mobility import Node
from .propagation import PropagationLossModel, mean_pathloss
from .rng import RandomStreams
from .spectrum import BandModel, PowerSpectralDensity, SpectrumPropagationLossModel, snr_db
from .tables import SCENARIOS, Condition, ParameterCatalog, default_catalog, load_catalog


class ConfigError(ValueError):
    pass


@dataclass
class ArrayConfig:
    rows: int = 1
    cols: int = 1
    vertical_spacing: float = 0.5
    horizontal_spacing: float = 0.5
    bearing_deg: float = 0.0
    downtilt_deg: float = 0.0
    element_gain_db: float = 0.0
    isotropic: bool = True

    def build(self) -> AntennaArray:
        return AntennaArray(
            self.rows, self.cols, self.vertical_spacing, self.horizontal_spacing,
            Orientation.from_degrees(self.bearing_deg, self.downtilt_deg), self.element_gain_db, self.isotropic,
        )


@dataclass
class NodeConfig:
    position: tuple[float, float, float] | None = None
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    array: ArrayConfig = field(default_factory=ArrayConfig)


@dataclass
class SimulationConfig:
    """Everything that determines a run; ``None`` positions use scenario defaults.

    Default placement: tx at (0, 0, hBS), rx at (distance, 0, hUT).
    """

    scenario: str = "UMa"
    fc_ghz: float = 2.1
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 9.0
    temperature_k: float = 290.0
    bandwidth_mhz: float = 20.0
    n_subbands: int = 100
    distances_m: list[float] = field(default_factory=lambda: [100.0])
    duration_s: float = 10.0
    time_step_s: float = 0.1
    condition_update_period_s: float = 0.0
    channel_update_period_s: float = 0.0
    shadowing: bool = True
    blockage: bool = False
    seed: int = 1
    runs: int = 100
    catalog: str | None = None
    tx: NodeConfig = field(default_factory=lambda: NodeConfig(array=ArrayConfig(2, 2)))
    rx: NodeConfig = field(default_factory=lambda: NodeConfig(array=ArrayConfig(2, 2)))

    @property
    def fc(self) -> float:
        return self.fc_ghz * 1e9

    def validate(self) -> "SimulationConfig":
        def need(ok: bool, name: str, message: str):
            if not ok:
                raise ConfigError(f"field '{name}': {message}")

        need(self.scenario in SCENARIOS, "scenario", f"must be one of {', '.join(SCENARIOS)}")
        need(0.5 <= self.fc_ghz <= 100.0, "fc_ghz", "must be within 0.5-100 GHz")
        need(self.runs >= 1, "runs", "must be >= 1")
        need(self.n_subbands >= 1, "n_subbands", "must be >= 1")
        need(self.bandwidth_mhz > 0, "bandwidth_mhz", "must be > 0")
        need(self.temperature_k > 0, "temperature_k", "must be > 0")
        need(len(self.distances_m) > 0, "distances_m", "must not be empty")
        need(all(d > 0 for d in self.distances_m), "distances_m", "must be positive")
        need(self.duration_s >= 0, "duration_s", "must be >= 0")
        need(self.time_step_s > 0, "time_step_s", "must be > 0")
        need(self.condition_update_period_s >= 0, "condition_update_period_s", "must be >= 0")
        need(self.channel_update_period_s >= 0, "channel_update_period_s", "must be >= 0")
        for side in ("tx", "rx"):
            node = getattr(self, side)
            arr = node.array
            need(arr.rows >= 1 and arr.cols >= 1, f"{side}.array", "rows and cols must be >= 1")
            need(arr.vertical_spacing > 0 and arr.horizontal_spacing > 0, f"{side}.array", "spacing must be > 0")
            if node.position is not None:
                need(len(node.position) == 3 and node.position[2] >= 0, f"{side}.position", "must be [x, y, z>=0]")
            need(len(node.velocity) == 3, f"{side}.velocity", "must be [vx, vy, vz]")
        return self


def _from_mapping(cls, raw: dict[str, Any], where: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, value in raw.items():
        if key == "array":
            value = _from_mapping(ArrayConfig, value, f"{where}.array")
        elif key in ("tx", "rx"):
            value = _from_mapping(NodeConfig, value, key)
        elif key in ("position", "velocity"):
            value = tuple(float(v) for v in value)
        elif key == "distances_m":
            value = [float(v) for v in value]
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str | Path | None = None, **overrides) -> SimulationConfig:
    """Read a TOML config, then apply non-``None`` keyword overrides."""
    cfg = SimulationConfig()
    if path is not None:
        with open(path, "rb") as fh:
            cfg = _from_mapping(SimulationConfig, tomllib.load(fh), "config")
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


def _catalog(cfg: SimulationConfig) -> ParameterCatalog:
    return load_catalog(cfg.catalog) if cfg.catalog else default_catalog()


def _nodes(cfg: SimulationConfig, catalog: ParameterCatalog, distance: float) -> tuple[Node, Node]:
    info = catalog[cfg.scenario].info
    tx_pos = cfg.tx.position or (0.0, 0.0, info.h_bs)
    rx_pos = cfg.rx.position or (distance, 0.0, info.h_ut)
    return (
        Node(0, Position3D(*tx_pos), Velocity3D(*cfg.tx.velocity)),
        Node(1, Position3D(*rx_pos), Velocity3D(*cfg.rx.velocity)),
    )


def run_snr_trace(cfg: SimulationConfig) -> list[tuple[float, float, float]]:
    """Rows of (time_s, pathloss_db, snr_db) at every time step, for the first distance."""
    cfg.validate()
    catalog = _catalog(cfg)
    streams = RandomStreams(cfg.seed)
    tx, rx = _nodes(cfg, catalog, cfg.distances_m[0])

    condition_model = ChannelConditionModel(cfg.scenario, catalog, cfg.condition_update_period_s, streams)
    loss_model = PropagationLossModel(cfg.scenario, cfg.fc, condition_model, catalog, cfg.shadowing, streams)
    channel = ChannelModel(
        cfg.scenario, cfg.fc, condition_model, catalog, cfg.channel_update_period_s,
        BlockageConfig(enabled=cfg.blockage), streams,
    )
    spectrum = SpectrumPropagationLossModel(channel)
    tx_array, rx_array = cfg.tx.array.build(), cfg.rx.array.build()
    spectrum.add_device(tx, tx_array)
    spectrum.add_device(rx, rx_array)

    # Beams point at the peer once, from the initial geometry.
    geo = relative_geometry(tx.position, rx.position)
    tx_array.beamforming_vector = steering_vector(tx_array, geo.aod, channel.wavelength)
    rx_array.beamforming_vector = steering_vector(rx_array, geo.aoa, channel.wavelength)

    band = BandModel.uniform(cfg.fc, cfg.bandwidth_mhz * 1e6, cfg.n_subbands)
    tx_psd = PowerSpectralDensity.flat(band, 10.0 ** (cfg.tx_power_dbm / 10.0) / 1000.0)
    n_steps = int(math.floor(cfg.duration_s / cfg.time_step_s + 1e-9)) + 1
    rows = []
    for i in range(n_steps):
        t = i * cfg.time_step_s
        loss = loss_model.get_loss(tx, rx, t)
        faded = spectrum.calc_rx_psd(tx_psd, tx, rx, t)
        rx_psd = PowerSpectralDensity(band, faded.values * 10.0 ** (-loss / 10.0))
        rows.append((t, loss, snr_db(rx_psd, cfg.noise_figure_db, cfg.temperature_k)))
    return rows


@dataclass(frozen=True)
class SweepRow:
    distance_m: float
    condition: Condition
    mean_loss_db: float
    analytic_loss_db: float
    runs: int


def run_loss_sweep(cfg: SimulationConfig) -> list[SweepRow]:
    """Mean measured loss over ``cfg.runs`` independent runs per distance and forced condition."""
    cfg.validate()
    catalog = _catalog(cfg)
    base = RandomStreams(cfg.seed)
    rows = []
    for i, distance in enumerate(cfg.distances_m):
        tx, rx = _nodes(cfg, catalog, distance)
        for condition in (Condition.LOS, Condition.NLOS):
            analytic = mean_pathloss(cfg.scenario, condition, tx.position, rx.position, cfg.fc, catalog)
            measured = np.empty(cfg.runs)
            for run in range(cfg.runs):
                model = PropagationLossModel(
                    cfg.scenario, cfg.fc, FixedConditionModel(condition), catalog, cfg.shadowing,
                    base.child("sweep", i, condition.value, run),
                )
                measured[run] = cfg.tx_power_dbm - model.rx_power(cfg.tx_power_dbm, tx, rx, 0.0)
            rows.append(SweepRow(distance, condition, float(measured.mean()), analytic, cfg.runs))
    return rows
