"""Revenue, complexity-penalised profit and the network objective evaluators."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .complexity import local_complexity
from .model import CostParams, Instance, Network, ValidationError, check_network

log = logging.getLogger(__name__)


class Evaluator:
    """Per-facility profit terms for one (instance, params) pair.

    Caches the margin matrix ``margin[l, i] = (r - rho*d(c,l) - gamma*d(l,i)) * W_i``
    so that solvers and heuristics can rescore one or two facilities at a time.
    """

    def __init__(self, inst: Instance, params: CostParams):
        if params.rho > 0 and inst.depot is None:
            raise ValidationError(["rho > 0 requires a depot"])
        self.inst = inst
        self.params = params
        n = inst.n
        first_leg = params.rho * inst.dist[inst.depot] if params.rho > 0 else np.zeros(n)
        unit = params.r - first_leg[:, None] - params.gamma * inst.dist
        self.margin = unit * inst.demand[None, :]
        self.phi = params.phi_vector(n).tolist()
        self.alpha = params.alpha_vector(n).tolist()

    def revenue(self, facility: int, members) -> float:
        return float(self.margin[facility, members].sum())

    def complexity(self, members) -> float:
        return local_complexity(self.inst.demand[members])

    def term(self, facility: int, members) -> float:
        """Net contribution R(l)(1 - alpha_l C_p(N_l)) - phi_l of one facility."""
        rev = self.revenue(facility, members)
        return rev * (1.0 - self.alpha[facility] * self.complexity(members)) - self.phi[facility]

    def term_kmedian(self, facility: int, members) -> float:
        return self.revenue(facility, members) - self.phi[facility]

    def z_plex(self, groups: Mapping[int, Iterable[int]]) -> float:
        return float(sum(self.term(f, list(m)) for f, m in groups.items()))

    def z_kmedian(self, groups: Mapping[int, Iterable[int]]) -> float:
        return float(sum(self.term_kmedian(f, list(m)) for f, m in groups.items()))

    def complexity_cost(self, groups: Mapping[int, Iterable[int]]) -> float:
        return float(sum(
            self.alpha[f] * self.complexity(list(m)) * self.revenue(f, list(m))
            for f, m in groups.items()
        ))


def _groups(inst: Instance, net: Network) -> dict[int, list[int]]:
    check_network(inst, net)
    return net.groups()


def facility_revenue(inst: Instance, net: Network, params: CostParams, facility: int) -> float:
    if facility not in net.facilities:
        raise ValidationError([f"{facility} is not an open facility"])
    return Evaluator(inst, params).revenue(facility, net.members(facility))


def gross_profit(inst: Instance, net: Network, params: CostParams) -> float:
    ev = Evaluator(inst, params)
    return sum(
        (1.0 - ev.alpha[f] * ev.complexity(m)) * ev.revenue(f, m)
        for f, m in _groups(inst, net).items()
    )


def complexity_cost(inst: Instance, net: Network, params: CostParams) -> float:
    return Evaluator(inst, params).complexity_cost(_groups(inst, net))


def z_plex_value(inst: Instance, net: Network, params: CostParams) -> float:
    return Evaluator(inst, params).z_plex(_groups(inst, net))


def z_kmedian_value(inst: Instance, net: Network, params: CostParams) -> float:
    return Evaluator(inst, params).z_kmedian(_groups(inst, net))


@dataclass(frozen=True)
class ProfitReport:
    revenue_by_facility: dict[int, float]
    complexity_by_facility: dict[int, float]
    gross_profit: float
    complexity_cost: float
    fixed_cost_total: float
    net_profit_plex: float
    net_profit_kmedian: float

    @property
    def revenue(self) -> float:
        return sum(self.revenue_by_facility.values())

    def to_dict(self) -> dict:
        return {
            "revenue": self.revenue,
            "revenue_by_facility": {str(k): v for k, v in self.revenue_by_facility.items()},
            "complexity_by_facility": {str(k): v for k, v in self.complexity_by_facility.items()},
            "gross_profit": self.gross_profit,
            "complexity_cost": self.complexity_cost,
            "fixed_cost_total": self.fixed_cost_total,
            "net_profit_plex": self.net_profit_plex,
            "net_profit_kmedian": self.net_profit_kmedian,
        }


def z_plex(inst: Instance, net: Network, params: CostParams) -> ProfitReport:
    """Full profit report for an arbitrary network under complexity penalties."""
    ev = Evaluator(inst, params)
    groups = _groups(inst, net)
    revenue, cplx = {}, {}
    gross = cost = fixed = plex = kmed = 0.0
    for f, members in groups.items():
        rev = ev.revenue(f, members)
        c = ev.complexity(members)
        factor = 1.0 - ev.alpha[f] * c
        if factor < 0:
            log.warning("facility %d has negative penalty factor %.4f", f, factor)
        revenue[f], cplx[f] = rev, c
        gross += factor * rev
        cost += ev.alpha[f] * c * rev
        fixed += ev.phi[f]
        plex += rev * factor - ev.phi[f]
        kmed += rev - ev.phi[f]
    return ProfitReport(revenue, cplx, gross, cost, fixed, plex, kmed)
