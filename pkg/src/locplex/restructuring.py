"""Improvement heuristics for an existing network: rebalancing, rationalisation, reduction.

All three work on a copy of the allocation and only ever accept strictly
improving moves, so the incumbent objective increases monotonically. Every
accepted change is logged as a :class:`Move`; :func:`replay` re-applies a move
log to the input network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import entropy_bits
from .economics import Evaluator
from .model import CostParams, Instance, Network, ValidationError, check_network
from .solvers import MIN_GAIN, allocation_matrix, improves, one_median, second_nearest

TRANSFER = "transfer-node"
RECENTRE = "recentre-facility"
DROP_NODE = "drop-node"
DROP_FACILITY = "drop-facility"
REALLOCATE = "reallocate-orphans"


@dataclass(frozen=True)
class Move:
    kind: str
    subject: tuple[int, ...]
    before: float
    after: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subject": " ".join(map(str, self.subject)),
                "before": self.before, "after": self.after}


@dataclass(frozen=True)
class RestructureResult:
    strategy: str
    initial_network: Network
    final_network: Network
    moves: tuple[Move, ...]
    z_before: float
    z_after: float
    c_alpha_before: float
    c_alpha_after: float
    cp_before: float
    cp_after: float
    demand_before: float
    demand_after: float
    notes: tuple[str, ...] = field(default=())

    @property
    def covered_nodes(self) -> tuple[int, ...]:
        return self.final_network.covered

    @property
    def fired(self) -> bool:
        return bool(self.moves)

    @property
    def dz_pct(self) -> float:
        return relative_change(self.z_before, self.z_after)

    @property
    def dca_pct(self) -> float:
        return relative_change(self.c_alpha_before, self.c_alpha_after)

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "moves": len(self.moves),
            "z_before": self.z_before,
            "z_after": self.z_after,
            "dz_pct": self.dz_pct,
            "c_alpha_before": self.c_alpha_before,
            "c_alpha_after": self.c_alpha_after,
            "dca_pct": self.dca_pct,
            "cp_before": self.cp_before,
            "cp_after": self.cp_after,
            "demand_before": self.demand_before,
            "demand_after": self.demand_after,
            "k_before": self.initial_network.k,
            "k_after": self.final_network.k,
            "notes": list(self.notes),
        }


def relative_change(before: float, after: float) -> float:
    """Percentage change measured against ``|before|`` (0 when both are 0)."""
    if before == after:
        return 0.0
    return 100.0 * (after - before) / max(abs(before), 1e-12)


class _Work:
    """Mutable working copy of a network: facility -> sorted member list."""

    def __init__(self, inst: Instance, net: Network, params: CostParams):
        check_network(inst, net)
        self.inst = inst
        self.ev = Evaluator(inst, params)
        self.groups = {f: sorted(m) for f, m in net.groups().items()}
        self.terms = {f: self.ev.term(f, m) for f, m in self.groups.items()}
        self.z = self.ev.z_plex(self.groups)
        self.moves: list[Move] = []

    def set_group(self, f: int, members: list[int]) -> None:
        self.groups[f] = members
        self.terms[f] = self.ev.term(f, members)

    def accept(self, kind: str, subject: tuple[int, ...]) -> None:
        z_new = self.ev.z_plex(self.groups)
        self.moves.append(Move(kind, subject, self.z, z_new))
        self.z = z_new

    def network(self) -> Network:
        alloc = {i: f for f, m in self.groups.items() for i in m}
        return Network(tuple(self.groups), alloc)


def _result(strategy: str, inst: Instance, net: Network, params: CostParams,
            work: _Work, notes=()) -> RestructureResult:
    ev = work.ev
    final = work.network()

    def cp(n: Network) -> float:
        w = inst.demand[list(n.covered)]
        return entropy_bits(w / w.sum()) if w.sum() > 0 else 0.0

    before_groups = net.groups()
    return RestructureResult(
        strategy=strategy,
        initial_network=net,
        final_network=final,
        moves=tuple(work.moves),
        z_before=ev.z_plex(before_groups),
        z_after=ev.z_plex(final.groups()),
        c_alpha_before=ev.complexity_cost(before_groups),
        c_alpha_after=ev.complexity_cost(final.groups()),
        cp_before=cp(net),
        cp_after=cp(final),
        demand_before=float(inst.demand[list(net.covered)].sum()),
        demand_after=float(inst.demand[list(final.covered)].sum()),
        notes=tuple(notes),
    )


def rebalance(inst: Instance, net: Network, params: CostParams, min_gain: float = MIN_GAIN,
              full_scan: bool = False, guard_recentre: bool = True) -> RestructureResult:
    """Shift nodes to their second-nearest facility, then recentre each facility.

    Each facility's nodes are tried in decreasing order of
    ``d(node, second-nearest facility) * W``. By default the scan of a facility
    stops at its first non-improving node; ``full_scan`` tries every node.
    Recentring moves a facility to the 1-Median of its final allocation set and
    is kept only if it improves the objective unless ``guard_recentre`` is off.
    Facility sites themselves are never transferred.
    """
    work = _Work(inst, net, params)
    if net.k < 2:
        return _result("rebalance", inst, net, params, work,
                       ["fewer than two facilities: no second-nearest facility exists"])
    facilities = net.facilities
    ordered = {}
    for f, members in work.groups.items():
        cands = []
        for i in members:
            if i == f:
                continue
            g = second_nearest(inst, i, facilities, f)
            cands.append((-inst.dist[g, i] * inst.demand[i], i, g))
        ordered[f] = [(i, g) for _, i, g in sorted(cands)]

    ev = work.ev
    for f in facilities:
        for i, g in ordered[f]:
            src = [x for x in work.groups[f] if x != i]
            dst = sorted(work.groups[g] + [i])
            delta = ev.term(f, src) + ev.term(g, dst) - work.terms[f] - work.terms[g]
            if improves(work.z + delta, work.z, min_gain):
                work.set_group(f, src)
                work.set_group(g, dst)
                work.accept(TRANSFER, (i, f, g))
            elif not full_scan:
                break

    for f in facilities:
        members = work.groups[f]
        h = one_median(inst, members, params)
        if h == f:
            continue
        t_new = ev.term(h, members)
        if guard_recentre and not improves(work.z + t_new - work.terms[f], work.z, min_gain):
            continue
        del work.groups[f], work.terms[f]
        work.set_group(h, members)
        work.groups = dict(sorted(work.groups.items()))
        work.accept(RECENTRE, (f, h))
    return _result("rebalance", inst, net, params, work)


def default_tail(size: int) -> int:
    return max(1, math.ceil(0.25 * size))


def rationalise(inst: Instance, net: Network, params: CostParams, n_tail: int | None = None,
                min_gain: float = MIN_GAIN) -> RestructureResult:
    """Abandon far demand nodes whose removal raises profit.

    For each facility the candidates are its ``n_tail`` most distant nodes
    (default: a quarter of its allocation, at least one). The best candidate
    is dropped while doing so strictly improves the incumbent.
    """
    if n_tail is not None and n_tail < 1:
        raise ValidationError(["n_tail must be at least 1"])
    work = _Work(inst, net, params)
    ev = work.ev
    for f in net.facilities:
        members = work.groups[f]
        n = default_tail(len(members)) if n_tail is None else n_tail
        far = sorted((i for i in members if i != f), key=lambda i: (-inst.dist[f, i], i))
        theta = sorted(far[:n])
        while theta:
            best_z, best_i = -math.inf, None
            for i in theta:
                z_i = work.z - work.terms[f] + ev.term(f, [x for x in work.groups[f] if x != i])
                if z_i > best_z:
                    best_z, best_i = z_i, i
            if not improves(best_z, work.z, min_gain):
                break
            work.set_group(f, [x for x in work.groups[f] if x != best_i])
            work.accept(DROP_NODE, (best_i, f))
            theta.remove(best_i)
    return _result("rationalise", inst, net, params, work)


def _nearest_of(inst: Instance, node: int, facilities, params: CostParams | None = None) -> int:
    fac = sorted(facilities)
    return fac[int(allocation_matrix(inst, params)[fac, node].argmin())]


def reduce(inst: Instance, net: Network, params: CostParams, reallocate: bool = False,
           min_gain: float = MIN_GAIN) -> RestructureResult:
    """Close facilities one at a time, best improvement first.

    A closed facility's nodes are either abandoned or, with ``reallocate``,
    handed to their nearest remaining facility.
    """
    if net.k < 2:
        raise ValidationError(["network reduction needs at least two facilities"])
    work = _Work(inst, net, params)
    ev = work.ev
    strategy = "reduce-reallocate" if reallocate else "reduce-abandon"
    while len(work.groups) >= 2:
        best = (-math.inf, None, None)
        for f in sorted(work.groups):
            if not reallocate:
                z_f, changes = work.z - work.terms[f], {}
            else:
                remaining = [g for g in work.groups if g != f]
                changes = {}
                for i in work.groups[f]:
                    g = _nearest_of(inst, i, remaining, params)
                    changes.setdefault(g, list(work.groups[g])).append(i)
                z_f = work.z - work.terms[f]
                for g, m in changes.items():
                    z_f += ev.term(g, m) - work.terms[g]
            if z_f > best[0]:
                best = (z_f, f, changes)
        z_f, f, changes = best
        if not improves(z_f, work.z, min_gain):
            break
        del work.groups[f], work.terms[f]
        for g, m in changes.items():
            work.set_group(g, sorted(m))
        work.accept(REALLOCATE if reallocate else DROP_FACILITY, (f,))
    return _result(strategy, inst, net, params, work)


def replay(inst: Instance, net: Network, moves, params: CostParams | None = None) -> Network:
    """Apply a move log to ``net`` and return the resulting network."""
    alloc = dict(net.allocation)
    facilities = set(net.facilities)
    for mv in moves:
        s = mv.subject
        if mv.kind == TRANSFER:
            i, f, g = s
            if alloc.get(i) != f:
                raise ValidationError([f"replay: node {i} not at facility {f}"])
            alloc[i] = g
        elif mv.kind == RECENTRE:
            f, h = s
            alloc = {i: (h if a == f else a) for i, a in alloc.items()}
            facilities = (facilities - {f}) | {h}
        elif mv.kind == DROP_NODE:
            del alloc[s[0]]
        elif mv.kind == DROP_FACILITY:
            alloc = {i: a for i, a in alloc.items() if a != s[0]}
            facilities.discard(s[0])
        elif mv.kind == REALLOCATE:
            f = s[0]
            facilities.discard(f)
            alloc = {i: (_nearest_of(inst, i, facilities, params) if a == f else a) for i, a in alloc.items()}
        else:
            raise ValidationError([f"unknown move kind {mv.kind!r}"])
    return Network(tuple(facilities), alloc)
