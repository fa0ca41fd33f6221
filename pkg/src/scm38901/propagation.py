"""Mean pathloss, spatially correlated shadowing and received power."""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np

from .condition import ChannelConditionModel, FixedConditionModel
from .geometry import Position3D
from .mobility import Node, pair_key
from .rng import RandomStreams, as_streams
from .tables import Condition, ParameterCatalog, PathlossRecord, ScenarioParams, default_catalog

# The TR pathloss notes fix c = 3.0e8 m/s for the breakpoint distance.
C_BREAKPOINT = 3.0e8
FC_MIN_HZ = 0.5e9
FC_MAX_HZ = 100e9


class ValidityRangeWarning(UserWarning):
    """A distance fell outside a model's validity range and was clamped."""


def _params(scenario: str | ScenarioParams, catalog: ParameterCatalog | None) -> ScenarioParams:
    if isinstance(scenario, ScenarioParams):
        return scenario
    return (catalog or default_catalog())[scenario]


def link_heights(a: Position3D, b: Position3D) -> tuple[float, float]:
    """(hBS, hUT): the higher endpoint plays the BS."""
    return max(a.z, b.z), min(a.z, b.z)


def breakpoint_distance(
    scenario: str | ScenarioParams,
    h_bs: float,
    h_ut: float,
    fc: float,
    catalog: ParameterCatalog | None = None,
) -> float:
    """Breakpoint distance in metres; ``inf`` for single-slope scenarios.

    UMa/UMi use effective heights h' = h - 1 m, RMa uses the actual heights.
    """
    params = _params(scenario, catalog)
    if h_bs <= 0 or h_ut <= 0:
        raise ValueError(f"heights must be positive (hBS={h_bs}, hUT={h_ut})")
    rule = params.pathloss_branches(Condition.LOS).get("pre_bp")
    rule = rule.d_BP_rule if rule is not None else "none"
    if rule == "none":
        return math.inf
    if rule == "rma":
        return 2.0 * math.pi * h_bs * h_ut * fc / C_BREAKPOINT
    h_bs_eff, h_ut_eff = h_bs - 1.0, h_ut - 1.0
    if h_bs_eff < 0 or h_ut_eff < 0:
        raise ValueError(f"effective heights must be >= 0 (hBS={h_bs}, hUT={h_ut})")
    return 4.0 * h_bs_eff * h_ut_eff * fc / C_BREAKPOINT


@dataclass(frozen=True)
class PathlossResult:
    loss_db: float
    record: PathlossRecord
    d2d: float
    d3d: float
    clamped: bool


def _eval_branch(rec: PathlossRecord, env: dict) -> float:
    return (
        rec.A(**env) * math.log10(env["d3D"])
        + rec.B(**env)
        + rec.C(**env) * math.log10(env["fc"])
        + rec.X(**env)
    )


def _clamp(d2d: float, lo: float, hi: float, scenario: str) -> tuple[float, bool]:
    if d2d < lo or d2d > hi:
        clamped = min(max(d2d, lo), hi)
        warnings.warn(
            f"{scenario}: 2D distance {d2d:.3f} m outside [{lo}, {hi}] m, clamped to {clamped} m",
            ValidityRangeWarning,
            stacklevel=3,
        )
        return clamped, True
    return d2d, False


def pathloss_detail(
    scenario: str | ScenarioParams,
    condition: Condition | str,
    a: Position3D,
    b: Position3D,
    fc: float,
    catalog: ParameterCatalog | None = None,
) -> PathlossResult:
    params = _params(scenario, catalog)
    condition = Condition(condition)
    if not FC_MIN_HZ <= fc <= FC_MAX_HZ:
        raise ValueError(f"carrier frequency {fc / 1e9:g} GHz outside 0.5-100 GHz")
    h_bs, h_ut = link_heights(a, b)
    d_bp = breakpoint_distance(params, h_bs, h_ut, fc)
    los = params.pathloss_branches(Condition.LOS)
    if not los:
        raise ValueError(f"no LOS pathloss for {params.name}")
    lo = min(r.validity_min_m for r in los.values())
    hi = max(r.validity_max_m for r in los.values())
    nlos_rec = params.pathloss.get((Condition.NLOS, "nlos"))
    if condition == Condition.NLOS:
        if nlos_rec is None:
            raise ValueError(f"no NLOS pathloss for {params.name}")
        lo, hi = nlos_rec.validity_min_m, nlos_rec.validity_max_m

    d2d_raw = math.hypot(a.x - b.x, a.y - b.y)
    d2d, clamped = _clamp(d2d_raw, lo, hi, params.name)
    d3d = math.hypot(d2d, h_bs - h_ut)
    info = params.info
    env = {
        "d2D": d2d, "d3D": d3d, "hBS": h_bs, "hUT": h_ut, "dBP": d_bp, "fc": fc / 1e9,
        "h": info.avg_building_height, "W": info.street_width,
    }
    if "single" in los:
        los_rec = los["single"]
    else:
        los_rec = los["pre_bp"] if d2d <= d_bp else los["post_bp"]
    pl = _eval_branch(los_rec, env)
    rec = los_rec
    if condition == Condition.NLOS:
        pl = max(pl, _eval_branch(nlos_rec, env))
        rec = nlos_rec
    return PathlossResult(pl, rec, d2d, d3d, clamped)


def mean_pathloss(
    scenario: str | ScenarioParams,
    condition: Condition | str,
    a: Position3D,
    b: Position3D,
    fc: float,
    catalog: ParameterCatalog | None = None,
) -> float:
    """Mean pathloss in dB, ``A log10(d3D) + B + C log10(fc_GHz) + X``.

    NLOS loss is ``max(PL_LOS, PL'_NLOS)``. Distances outside the validity
    range are clamped and a :class:`ValidityRangeWarning` is issued.
    """
    return pathloss_detail(scenario, condition, a, b, fc, catalog).loss_db


@dataclass
class _ShadowState:
    z: float
    relative: np.ndarray
    condition: Condition


class ShadowingProcess:
    """Log-normal shadowing, AR(1) in the link displacement.

    The stored value is a unit-variance normal ``z``; the returned shadowing
    is ``sigma * z``. Moving the link by ``dd`` metres updates
    ``z <- rho z + sqrt(1 - rho^2) n`` with ``rho = exp(-dd / corr_dist)``.
    A LOS/NLOS transition restarts the process with an independent draw.
    """

    def __init__(self, rng: RandomStreams | int | None = None):
        self._rng = as_streams(rng)("shadowing")
        self._state: dict[tuple[int, int], _ShadowState] = {}
        self._lock = threading.Lock()

    def sample(
        self,
        key: tuple[int, int],
        condition: Condition,
        sigma: float,
        corr_dist: float,
        relative_position,
    ) -> float:
        rel = np.asarray(relative_position, dtype=float)
        with self._lock:
            st = self._state.get(key)
            if st is None or st.condition != condition:
                st = _ShadowState(float(self._rng.standard_normal()), rel, condition)
                self._state[key] = st
            else:
                dd = float(np.linalg.norm(rel - st.relative))
                if dd > 0.0:
                    rho = math.exp(-dd / corr_dist)
                    st.z = rho * st.z + math.sqrt(1.0 - rho * rho) * float(self._rng.standard_normal())
                    st.relative = rel
            return sigma * st.z


class PropagationLossModel:
    """Pathloss plus shadowing for one scenario, paired with a condition model."""

    def __init__(
        self,
        scenario: str | ScenarioParams,
        fc: float,
        condition_model: ChannelConditionModel | FixedConditionModel,
        catalog: ParameterCatalog | None = None,
        shadowing: bool = True,
        rng: RandomStreams | int | None = None,
    ):
        self.params = _params(scenario, catalog)
        if not FC_MIN_HZ <= fc <= FC_MAX_HZ:
            raise ValueError(f"carrier frequency {fc / 1e9:g} GHz outside 0.5-100 GHz")
        self.fc = float(fc)
        self.condition_model = condition_model
        self.shadowing_enabled = shadowing
        self._shadowing = ShadowingProcess(rng)

    def get_loss(self, a: Node, b: Node, now: float = 0.0) -> float:
        """Pathloss plus shadowing in dB for the link at time ``now``."""
        cond = self.condition_model.get_channel_condition(a, b, now)
        pa, pb = a.position_at(now), b.position_at(now)
        res = pathloss_detail(self.params, cond.state, pa, pb, self.fc)
        loss = res.loss_db
        if self.shadowing_enabled:
            first, second = (pa, pb) if a.node_id <= b.node_id else (pb, pa)
            loss += self._shadowing.sample(
                pair_key(a, b), cond.state, res.record.sigma_sf, res.record.corr_dist, second - first
            )
        return loss

    def rx_power(self, tx_power_dbm: float, a: Node, b: Node, now: float = 0.0) -> float:
        return tx_power_dbm - self.get_loss(a, b, now)
