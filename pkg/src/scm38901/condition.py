"""LOS/NLOS channel condition models with per-pair caching."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from .geometry import Position3D
from .mobility import Node, pair_key
from .rng import RandomStreams, as_streams
from .tables import Condition, LosProbabilityRecord, ParameterCatalog, ScenarioParams, default_catalog

# Slack for comparing simulation times built from repeated float additions.
TIME_EPS = 1e-9


@dataclass(frozen=True)
class ChannelCondition:
    state: Condition
    generated_at: float

    @property
    def is_los(self) -> bool:
        return self.state == Condition.LOS


def _scenario_params(scenario: str | ScenarioParams, catalog: ParameterCatalog | None) -> ScenarioParams:
    if isinstance(scenario, ScenarioParams):
        return scenario
    return (catalog or default_catalog())[scenario]


def los_probability_2d(rec: LosProbabilityRecord, d2d: float, h_ut: float = 1.5) -> float:
    """LOS probability for a 2D distance (m) and UT height (m)."""
    if d2d <= rec.d1:
        return 1.0
    if rec.model == "exponential":
        return math.exp(-(d2d - rec.d1) / rec.scale1)
    if rec.model in ("street", "street_height"):
        p = rec.d1 / d2d + math.exp(-d2d / rec.scale1) * (1.0 - rec.d1 / d2d)
        if rec.model == "street_height":
            if h_ut <= 13.0:
                c = 0.0
            else:
                c = ((min(h_ut, 23.0) - 13.0) / 10.0) ** 1.5
            p *= 1.0 + c * 1.25 * (d2d / 100.0) ** 3 * math.exp(-d2d / 150.0)
        return min(p, 1.0)
    if rec.model == "indoor":
        if d2d < rec.d2:
            return math.exp(-(d2d - rec.d1) / rec.scale1)
        return rec.factor * math.exp(-(d2d - rec.d2) / rec.scale2)
    if rec.model == "indoor_open":
        if d2d <= rec.d2:
            return math.exp(-(d2d - rec.d1) / rec.scale1)
        return rec.factor * math.exp(-(d2d - rec.d2) / rec.scale2)
    raise ValueError(f"unknown LOS probability model {rec.model!r}")


def los_probability(
    scenario: str | ScenarioParams,
    a: Position3D,
    b: Position3D,
    catalog: ParameterCatalog | None = None,
) -> float:
    """Probability that the link between ``a`` and ``b`` is LOS.

    The lower endpoint is taken as the UT when a height correction applies.
    """
    params = _scenario_params(scenario, catalog)
    d2d = math.hypot(a.x - b.x, a.y - b.y)
    return los_probability_2d(params.los_probability, d2d, min(a.z, b.z))


class ChannelConditionModel:
    """Stochastic TR 38.901 condition model with periodic, memoryless regeneration.

    ``update_period = 0`` keeps the first drawn state forever.
    """

    def __init__(
        self,
        scenario: str | ScenarioParams,
        catalog: ParameterCatalog | None = None,
        update_period: float = 0.0,
        rng: RandomStreams | int | None = None,
    ):
        if update_period < 0:
            raise ValueError("update_period must be >= 0")
        self.params = _scenario_params(scenario, catalog)
        self.update_period = float(update_period)
        self._rng = as_streams(rng)("condition")
        self._cache: dict[tuple[int, int], ChannelCondition] = {}
        self._lock = threading.Lock()
        self.generations = 0

    @property
    def scenario(self) -> str:
        return self.params.name

    def _expired(self, cond: ChannelCondition, now: float) -> bool:
        return self.update_period > 0 and now - cond.generated_at >= self.update_period - TIME_EPS

    def _draw(self, a: Node, b: Node, now: float) -> ChannelCondition:
        p = los_probability(self.params, a.position_at(now), b.position_at(now))
        state = Condition.LOS if self._rng.uniform() < p else Condition.NLOS
        self.generations += 1
        return ChannelCondition(state, now)

    def get_channel_condition(self, a: Node, b: Node, now: float = 0.0) -> ChannelCondition:
        key = pair_key(a, b)
        with self._lock:
            cond = self._cache.get(key)
            if cond is None or self._expired(cond, now):
                # Draw in canonical pair order so (a, b) and (b, a) see the same stream use.
                first, second = (a, b) if a.node_id <= b.node_id else (b, a)
                cond = self._cache[key] = self._draw(first, second, now)
            return cond


class FixedConditionModel:
    """Condition model that returns a preset state; ``force`` switches it."""

    def __init__(self, state: Condition | str = Condition.LOS):
        self._cond = ChannelCondition(Condition(state), 0.0)
        self.update_period = 0.0

    def force(self, state: Condition | str, now: float = 0.0) -> None:
        self._cond = ChannelCondition(Condition(state), now)

    def get_channel_condition(self, a: Node, b: Node, now: float = 0.0) -> ChannelCondition:
        return self._cond
