"""Nodes with constant-velocity mobility."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Position3D, Velocity3D


@dataclass
class Node:
    """A network node: identifier plus straight-line motion from ``position`` at t=0."""

    node_id: int
    position: Position3D
    velocity: Velocity3D = field(default_factory=Velocity3D)

    def __post_init__(self):
        if self.position.z < 0:
            raise ValueError(f"node {self.node_id}: height must be >= 0, got {self.position.z}")

    def position_at(self, t: float) -> Position3D:
        v = self.velocity
        if v.vx == v.vy == v.vz == 0.0:
            return self.position
        return self.position.moved((v.vx * t, v.vy * t, v.vz * t))


def pair_key(a: Node | int, b: Node | int) -> tuple[int, int]:
    """Unordered pair of node identifiers, as a sorted tuple."""
    ia = a.node_id if isinstance(a, Node) else int(a)
    ib = b.node_id if isinstance(b, Node) else int(b)
    return (ia, ib) if ia <= ib else (ib, ia)
