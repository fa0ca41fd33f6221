"""Beamformed received PSD with cached per-cluster long-term components."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .antenna import AntennaArray
from .fading import ChannelMatrix, ChannelModel
from .mobility import Node

BOLTZMANN = 1.380649e-23


@dataclass(frozen=True)
class BandModel:
    """Ordered, non-overlapping subbands; ``carrier`` is the reference for phase ramps."""

    centers: np.ndarray
    widths: np.ndarray
    carrier: float

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        w = np.broadcast_to(np.asarray(self.widths, dtype=float), c.shape).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("a band needs at least one subband")
        if np.any(w <= 0):
            raise ValueError("subband widths must be positive")
        if np.any(c[1:] - w[1:] / 2 < c[:-1] + w[:-1] / 2 - 1e-6 * w[:-1]):
            raise ValueError("subbands must be ordered and non-overlapping")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)

    @classmethod
    def uniform(cls, carrier: float, bandwidth: float, n_subbands: int) -> "BandModel":
        width = bandwidth / n_subbands
        offsets = (np.arange(n_subbands) - (n_subbands - 1) / 2.0) * width
        return cls(carrier + offsets, np.full(n_subbands, width), carrier)

    @property
    def offsets(self) -> np.ndarray:
        return self.centers - self.carrier

    @property
    def bandwidth(self) -> float:
        return float(self.widths.sum())

    def __len__(self) -> int:
        return self.centers.size


@dataclass(frozen=True)
class PowerSpectralDensity:
    band: BandModel
    values: np.ndarray  # W/Hz

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.band.centers.shape:
            raise ValueError(f"{v.size} PSD values for {len(self.band)} subbands")
        if np.any(v < 0):
            raise ValueError("PSD values must be non-negative")
        object.__setattr__(self, "values", v)

    @classmethod
    def flat(cls, band: BandModel, total_power_w: float) -> "PowerSpectralDensity":
        return cls(band, np.full(len(band), total_power_w / band.bandwidth))

    def total_power(self) -> float:
        return float(np.sum(self.values * self.band.widths))


@dataclass(frozen=True)
class LongTermComponents:
    values: np.ndarray  # L_n, complex
    generation: int = 0
    tx_version: int = 0
    rx_version: int = 0


def compute_long_term(h: ChannelMatrix | np.ndarray, w_tx, w_rx) -> np.ndarray:
    """L_n = sum_u sum_s w_rx[u] H[u, s, n] w_tx[s] (plain transpose, no conjugation)."""
    coeff = h.coefficients if isinstance(h, ChannelMatrix) else np.asarray(h)
    w_tx = np.asarray(w_tx, dtype=complex).reshape(-1)
    w_rx = np.asarray(w_rx, dtype=complex).reshape(-1)
    u, s, _ = coeff.shape
    if w_rx.size != u or w_tx.size != s:
        raise ValueError(f"weights ({w_rx.size}, {w_tx.size}) do not match channel ({u}, {s})")
    return np.einsum("u,usn,s->n", w_rx, coeff, w_tx)


def beamforming_gain(long_term, delays, dopplers, band: BandModel, t: float) -> np.ndarray:
    """|sum_n L_n exp(j2pi nu_n t) exp(j2pi tau_n f)|^2 at each subband centre offset f."""
    lt = long_term.values if isinstance(long_term, LongTermComponents) else np.asarray(long_term)
    delays = np.asarray(delays, dtype=float)
    dopplers = np.asarray(dopplers, dtype=float)
    if not lt.size == delays.size == dopplers.size:
        raise ValueError("long-term components, delays and Dopplers differ in length")
    doppler_term = lt * np.exp(1j * 2.0 * math.pi * dopplers * t)
    ramp = np.exp(1j * 2.0 * math.pi * np.outer(band.offsets, delays))
    return np.abs(ramp @ doppler_term) ** 2


def snr_db(rx_psd: PowerSpectralDensity, noise_figure_db: float = 5.0, temperature_k: float = 290.0) -> float:
    noise = BOLTZMANN * temperature_k * rx_psd.band.bandwidth * 10.0 ** (noise_figure_db / 10.0)
    return 10.0 * math.log10(rx_psd.total_power() / noise)


class SpectrumPropagationLossModel:
    """Applies the fast-fading channel and beamforming to a transmitted PSD."""

    def __init__(self, channel_model: ChannelModel):
        self.channel_model = channel_model
        self._arrays: dict[int, AntennaArray] = {}
        self._long_term: dict[tuple[int, int], LongTermComponents] = {}
        self._lock = threading.Lock()
        self.long_term_computations = 0

    def add_device(self, node: Node | int, array: AntennaArray) -> None:
        node_id = node.node_id if isinstance(node, Node) else int(node)
        self._arrays[node_id] = array

    def array_of(self, node: Node) -> AntennaArray:
        try:
            return self._arrays[node.node_id]
        except KeyError:
            raise KeyError(f"node {node.node_id} has no registered antenna array") from None

    def long_term(self, tx: Node, rx: Node, h: ChannelMatrix) -> LongTermComponents:
        tx_array, rx_array = self.array_of(tx), self.array_of(rx)
        w_tx, w_rx = tx_array.beamforming_vector, rx_array.beamforming_vector
        if w_tx is None or w_rx is None:
            raise ValueError("beamforming vectors must be set on both arrays")
        key = (tx.node_id, rx.node_id)
        with self._lock:
            lt = self._long_term.get(key)
            if lt is None or (lt.generation, lt.tx_version, lt.rx_version) != (
                h.generation, tx_array.version, rx_array.version
            ):
                lt = LongTermComponents(compute_long_term(h, w_tx, w_rx), h.generation, tx_array.version,
                                        rx_array.version)
                self._long_term[key] = lt
                self.long_term_computations += 1
            return lt

    def calc_rx_psd(self, tx_psd: PowerSpectralDensity, tx: Node, rx: Node, now: float = 0.0) -> PowerSpectralDensity:
        tx_array, rx_array = self.array_of(tx), self.array_of(rx)
        h = self.channel_model.get_channel(tx, rx, tx_array, rx_array, now)
        lt = self.long_term(tx, rx, h)
        gain = beamforming_gain(lt, h.delays, h.doppler, tx_psd.band, now)
        return PowerSpectralDensity(tx_psd.band, tx_psd.values * gain)
