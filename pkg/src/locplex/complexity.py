"""Entropy-based pars-complexity and its central/local decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, Network, ValidationError, check_network, check_weights

IDENTITY_TOL = 1e-9


def entropy_bits(p: np.ndarray) -> float:
    # 0 * log2(1/0) := 0
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def pars_complexity(p) -> float:
    """Shannon entropy (bits) of a weight vector summing to one."""
    p = check_weights(p)
    return max(entropy_bits(p), 0.0)


def local_complexity(weights) -> float:
    """Complexity of a single-facility system from raw (unnormalised) demands.

    A facility whose nodes all carry zero demand has no partes and scores 0.
    """
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not total > 0:
        return 0.0
    return max(entropy_bits(w / total), 0.0)


@dataclass(frozen=True)
class ComplexityBreakdown:
    total: float
    central: float
    per_facility: dict[int, tuple[float, float]]

    @property
    def weighted_local(self) -> float:
        return sum(q * c for q, c in self.per_facility.values())

    def to_dict(self, inst: Instance | None = None) -> dict:
        name = inst.name if inst is not None else str
        return {
            "total": self.total,
            "central": self.central,
            "weighted_local": self.weighted_local,
            "facilities": [
                {"facility": f, "name": name(f), "share": q, "complexity": c}
                for f, (q, c) in self.per_facility.items()
            ],
        }


def decompose(inst: Instance, net: Network) -> ComplexityBreakdown:
    """Split total complexity of the covered nodes into central and per-facility parts."""
    check_network(inst, net)
    covered = list(net.covered)
    total_demand = inst.demand[covered].sum()
    if not total_demand > 0:
        raise ValidationError(["covered nodes have zero total demand"])
    per_facility = {}
    for f, members in net.groups().items():
        w = inst.demand[members]
        q = w.sum() / total_demand
        c = local_complexity(w)
        per_facility[f] = (float(q), c)
    shares = np.array([q for q, _ in per_facility.values()])
    central = entropy_bits(shares)
    total = entropy_bits(inst.demand[covered] / total_demand)
    return ComplexityBreakdown(total=total, central=central, per_facility=per_facility)


def closed_system_invariance_check(inst: Instance, net_a: Network, net_b: Network) -> bool:
    """True when two networks over the same covered nodes carry the same total complexity."""
    if set(net_a.covered) != set(net_b.covered):
        raise ValidationError(["networks cover different node sets"])
    a = decompose(inst, net_a).total
    b = decompose(inst, net_b).total
    return abs(a - b) <= IDENTITY_TOL
