"""Network construction: nearest allocation, K-Median / K-MedianPlex and 1-Median."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .economics import Evaluator
from .model import CostParams, Instance, Network, ValidationError

DEFAULT_BUDGET = 2_000_000
MIN_GAIN = 1e-9
_CHUNK_ELEMENTS = 4_000_000


class BudgetExceeded(RuntimeError):
    pass


def improves(new: float, old: float, min_gain: float = MIN_GAIN) -> bool:
    """Strict improvement by more than ``min_gain`` relative to ``|old|``."""
    return new - old > min_gain * abs(old)


def allocation_matrix(inst: Instance, params: CostParams | None = None) -> np.ndarray:
    """``m[l, i]``: what node ``i`` minimises when choosing its facility ``l``.

    Plain distance, unless a first-leg cost applies: then the delivered cost
    per ton ``rho*d(c,l) + gamma*d(l,i)``, which is what maximises revenue.
    """
    if params is None or params.rho <= 0:
        return inst.dist
    return params.rho * inst.dist[inst.depot][:, None] + params.gamma * inst.dist


def allocate_nearest(inst: Instance, facilities: Iterable[int],
                     params: CostParams | None = None) -> Network:
    """Allocate every node to its closest facility (lowest index on ties).

    With ``params`` and a first-leg cost, "closest" means cheapest delivered
    cost (see :func:`allocation_matrix`).
    """
    fac = np.array(sorted(set(int(f) for f in facilities)), dtype=int)
    if fac.size == 0:
        raise ValidationError(["empty facility set"])
    if params is not None and params.rho > 0 and inst.depot is None:
        raise ValidationError(["rho > 0 requires a depot"])
    pos = allocation_matrix(inst, params)[fac].argmin(axis=0)
    alloc = fac[pos]
    alloc[fac] = fac
    return Network(tuple(fac.tolist()), dict(enumerate(alloc.tolist())))


def one_median(inst: Instance, nodes: Iterable[int], params: CostParams) -> int:
    """Member of ``nodes`` minimising the weighted transport cost to the others."""
    idx = np.array(sorted(set(int(i) for i in nodes)), dtype=int)
    if idx.size == 0:
        raise ValidationError(["empty node set"])
    cost = params.gamma * (inst.dist[np.ix_(idx, idx)] * inst.demand[idx][None, :]).sum(axis=1)
    return int(idx[cost.argmin()])


def second_nearest(inst: Instance, node: int, facilities: Iterable[int], current: int) -> int | None:
    """Closest open facility to ``node`` other than ``current``; None if there is none."""
    others = [f for f in sorted(facilities) if f != current]
    if not others:
        return None
    d = inst.dist[others, node]
    return others[int(d.argmin())]


@dataclass(frozen=True)
class SolveResult:
    network: Network
    objective: float
    mode: str
    iterations: int
    problem: str = "kmedian"
    # K-MedianPlex only: network after node->second-nearest transfers.
    refined_network: Network | None = None
    refined_objective: float | None = None

    def summary(self) -> dict:
        out = {
            "problem": self.problem,
            "mode": self.mode,
            "k": self.network.k,
            "objective": self.objective,
            "iterations": self.iterations,
            "facilities": list(self.network.facilities),
        }
        if self.refined_network is not None:
            out["refined_objective"] = self.refined_objective
            out["refined_facilities"] = list(self.refined_network.facilities)
        return out


class _BatchScorer:
    """Vectorised objective for many candidate facility sets under nearest allocation."""

    def __init__(self, ev: Evaluator, plex: bool):
        inst = ev.inst
        self.ev = ev
        self.plex = plex
        self.n = inst.n
        d = allocation_matrix(inst, ev.params).copy()
        np.fill_diagonal(d, -1.0)  # a facility always serves itself
        self.dsel = d
        w = inst.demand
        self.w = w
        self.phi = np.asarray(ev.phi)
        self.alpha = np.asarray(ev.alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.wlogw = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)

    def __call__(self, sets: np.ndarray) -> np.ndarray:
        b, k = sets.shape
        step = max(1, _CHUNK_ELEMENTS // max(1, k * self.n))
        return np.concatenate([self._score(sets[s:s + step]) for s in range(0, b, step)])

    def _score(self, sets: np.ndarray) -> np.ndarray:
        b, k = sets.shape
        n = self.n
        pos = self.dsel[sets].argmin(axis=1)
        fac = np.take_along_axis(sets, pos, axis=1)
        rev_node = self.ev.margin[fac, np.arange(n)[None, :]]
        flat = (pos + k * np.arange(b)[:, None]).ravel()
        rev = np.bincount(flat, rev_node.ravel(), minlength=b * k).reshape(b, k)
        phi = self.phi[sets]
        if not self.plex:
            return (rev - phi).sum(axis=1)
        tot = np.bincount(flat, np.broadcast_to(self.w, (b, n)).ravel(), minlength=b * k)
        wl = np.bincount(flat, np.broadcast_to(self.wlogw, (b, n)).ravel(), minlength=b * k)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(tot > 0, np.log2(np.where(tot > 0, tot, 1.0)) - wl / np.where(tot > 0, tot, 1.0), 0.0)
        c = np.maximum(c, 0.0).reshape(b, k)
        return (rev * (1.0 - self.alpha[sets] * c) - phi).sum(axis=1)


def _check_k(inst: Instance, k: int) -> None:
    if not 1 <= k <= inst.n:
        raise ValidationError([f"K={k} outside 1..{inst.n}"])


def _exact(scorer: _BatchScorer, n: int, k: int, budget: int) -> tuple[tuple[int, ...], int]:
    count = math.comb(n, k)
    if count > budget:
        raise BudgetExceeded(f"C({n},{k}) = {count} exceeds enumeration budget {budget}")
    combos = itertools.combinations(range(n), k)
    step = max(1, _CHUNK_ELEMENTS // max(1, k * n))
    best_val, best_set = -math.inf, None
    while True:
        chunk = list(itertools.islice(combos, step))
        if not chunk:
            break
        sets = np.array(chunk, dtype=int)
        vals = scorer(sets)
        j = int(vals.argmax())
        if vals[j] > best_val:
            best_val, best_set = float(vals[j]), tuple(chunk[j])
    return best_set, count


def _local_search(scorer: _BatchScorer, n: int, k: int, min_gain: float) -> tuple[tuple[int, ...], int]:
    chosen: list[int] = []
    for _ in range(k):
        cand = np.array([j for j in range(n) if j not in chosen], dtype=int)
        sets = np.sort(np.column_stack([np.tile(chosen, (cand.size, 1)).astype(int), cand]), axis=1)
        vals = scorer(sets)
        chosen = sorted(sets[int(vals.argmax())].tolist())
    current = np.array(chosen, dtype=int)
    value = float(scorer(current[None, :])[0])
    moves = 0
    if k == n:
        return tuple(chosen), moves
    while True:
        outside = np.setdiff1d(np.arange(n), current)
        p, j = np.meshgrid(np.arange(k), outside, indexing="ij")
        p, j = p.ravel(), j.ravel()
        sets = np.tile(current, (p.size, 1))
        sets[np.arange(p.size), p] = j
        sets.sort(axis=1)
        vals = scorer(sets)
        best = int(vals.argmax())
        if not improves(float(vals[best]), value, min_gain):
            break
        current, value = sets[best], float(vals[best])
        moves += 1
    return tuple(current.tolist()), moves


def _transfer_refine(ev: Evaluator, net: Network, min_gain: float) -> Network:
    """Move non-facility nodes to their second-nearest facility while that strictly helps."""
    inst = ev.inst
    groups = {f: list(m) for f, m in net.groups().items()}
    alloc = dict(net.allocation)
    facilities = net.facilities
    z = ev.z_plex(groups)
    for _ in range(inst.n + 1):
        moved = False
        for i in sorted(alloc):
            f = alloc[i]
            if i == f:
                continue
            g = second_nearest(inst, i, facilities, f)
            if g is None:
                break
            src = [x for x in groups[f] if x != i]
            dst = sorted(groups[g] + [i])
            delta = ev.term(f, src) + ev.term(g, dst) - ev.term(f, groups[f]) - ev.term(g, groups[g])
            if improves(z + delta, z, min_gain):
                groups[f], groups[g] = src, dst
                alloc[i] = g
                z = ev.z_plex(groups)
                moved = True
        if not moved:
            break
    return Network(facilities, alloc)


def _solve(inst, params, k, mode, budget, min_gain, plex):
    _check_k(inst, k)
    ev = Evaluator(inst, params)
    scorer = _BatchScorer(ev, plex)
    if mode == "exact":
        best, iterations = _exact(scorer, inst.n, k, budget)
    elif mode in ("local", "local-search"):
        best, iterations = _local_search(scorer, inst.n, k, min_gain)
        mode = "local-search"
    else:
        raise ValidationError([f"unknown mode {mode!r}"])
    net = allocate_nearest(inst, best, params)
    groups = net.groups()
    objective = ev.z_plex(groups) if plex else ev.z_kmedian(groups)
    return ev, SolveResult(net, objective, mode, iterations, "kmedianplex" if plex else "kmedian")


def solve_kmedian(inst: Instance, params: CostParams, k: int, mode: str = "local",
                  budget: int = DEFAULT_BUDGET, min_gain: float = MIN_GAIN) -> SolveResult:
    """K facilities with nearest allocation maximising sum of R(l) - phi_l (complexity ignored)."""
    return _solve(inst, params, k, mode, budget, min_gain, plex=False)[1]


def solve_kmedianplex(inst: Instance, params: CostParams, k: int, mode: str = "local",
                      budget: int = DEFAULT_BUDGET, min_gain: float = MIN_GAIN) -> SolveResult:
    """K facilities maximising complexity-penalised profit.

    ``network``/``objective`` are the best nearest-allocation solution found;
    ``refined_network``/``refined_objective`` add second-nearest transfers on
    top, which can beat any nearest-allocation network.
    """
    if not params.penalised:
        ev, res = _solve(inst, params, k, mode, budget, min_gain, plex=False)
    else:
        ev, res = _solve(inst, params, k, mode, budget, min_gain, plex=True)
    refined = _transfer_refine(ev, res.network, min_gain)
    return SolveResult(res.network, res.objective, res.mode, res.iterations, "kmedianplex",
                       refined, ev.z_plex(refined.groups()))
