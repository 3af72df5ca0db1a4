"""Domain types: instances, networks and cost parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

WEIGHT_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a model invariant.

    ``problems`` lists every violation found, not just the first.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True, eq=False)
class Instance:
    """Demand nodes with weights and a (possibly asymmetric) distance matrix.

    ``dist[a, b]`` is the road distance from ``a`` to ``b`` in km. Facilities
    are always drawn from the nodes themselves.
    """

    demand: np.ndarray
    dist: np.ndarray
    depot: int | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        demand = np.array(self.demand, dtype=float)
        dist = np.array(self.dist, dtype=float)
        demand.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "dist", dist)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    @property
    def n(self) -> int:
        return len(self.demand)

    @property
    def nodes(self) -> range:
        return range(self.n)

    def name(self, i: int) -> str:
        return self.names[i] if self.names is not None else str(i)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.depot == other.depot
            and self.names == other.names
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.dist, other.dist)
        )

    __hash__ = None


def instance_problems(inst: Instance) -> list[str]:
    problems = []
    d = inst.dist
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        problems.append(f"non-square distance matrix {d.shape}")
    elif d.shape[0] != inst.n:
        problems.append(f"distance matrix side {d.shape[0]} != {inst.n} nodes")
    else:
        if not np.all(np.isfinite(d)):
            problems.append("non-finite distance")
        for a, b in zip(*np.nonzero(d < 0)):
            problems.append(f"negative distance d({a},{b})")
        for i in np.nonzero(np.diag(d) != 0)[0]:
            problems.append(f"nonzero diagonal at node {i}")
    if inst.demand.ndim != 1:
        problems.append("demand must be a vector")
    else:
        for i in np.nonzero(~(inst.demand >= 0))[0]:
            problems.append(f"negative demand at node {i}")
        if inst.n and not np.any(inst.demand > 0):
            problems.append("all demands are zero")
    if inst.n == 0:
        problems.append("instance has no nodes")
    if inst.depot is not None and not 0 <= inst.depot < inst.n:
        problems.append(f"depot {inst.depot} is not a valid node")
    if inst.names is not None and len(inst.names) != inst.n:
        problems.append("names length does not match node count")
    return problems


def validate_instance(inst: Instance) -> Instance:
    """Return ``inst`` unchanged or raise :class:`ValidationError` listing every violation."""
    problems = instance_problems(inst)
    if problems:
        raise ValidationError(problems)
    return inst


@dataclass(frozen=True)
class Network:
    """Open facilities plus an explicit node -> facility allocation.

    Only covered nodes appear in ``allocation``; rationalisation and
    reduction can leave nodes uncovered.
    """

    facilities: tuple[int, ...]
    allocation: Mapping[int, int] = field(hash=False)

    def __post_init__(self):
        object.__setattr__(self, "facilities", tuple(sorted(int(f) for f in self.facilities)))
        alloc = {int(i): int(f) for i, f in sorted(self.allocation.items())}
        object.__setattr__(self, "allocation", alloc)
        problems = network_problems(self)
        if problems:
            raise ValidationError(problems)

    @property
    def k(self) -> int:
        return len(self.facilities)

    @property
    def covered(self) -> tuple[int, ...]:
        return tuple(self.allocation)

    def members(self, facility: int) -> list[int]:
        return [i for i, f in self.allocation.items() if f == facility]

    def groups(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {f: [] for f in self.facilities}
        for i, f in self.allocation.items():
            out[f].append(i)
        return out

    def __hash__(self):
        return hash((self.facilities, tuple(self.allocation.items())))


def network_problems(net: Network) -> list[str]:
    problems = []
    fac = set(net.facilities)
    if len(fac) != len(net.facilities):
        problems.append("duplicate facility")
    if not fac:
        problems.append("network has no facilities")
    for i, f in net.allocation.items():
        if f not in fac:
            problems.append(f"node {i} allocated to closed site {f}")
    for f in net.facilities:
        if net.allocation.get(f) != f:
            problems.append(f"facility {f} is not allocated to itself")
    return problems


def check_network(inst: Instance, net: Network, full: bool = False) -> None:
    """Raise if ``net`` references nodes outside ``inst`` (or, with ``full``, leaves any uncovered)."""
    problems = [f"node {i} out of range" for i in net.allocation if not 0 <= i < inst.n]
    if full:
        missing = sorted(set(inst.nodes) - set(net.allocation))
        if missing:
            problems.append(f"uncovered nodes {missing}")
    if problems:
        raise ValidationError(problems)


def _per_node(value, n: int, label: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValidationError([f"{label} vector has length {arr.size}, expected {n}"])
    return arr


@dataclass(frozen=True, eq=False)
class CostParams:
    """Unit revenue, per-leg transport costs, fixed cost and complexity factor.

    ``phi`` and ``alpha`` may be scalars or per-node vectors (indexed by the
    facility's node id).
    """

    r: float
    gamma: float
    rho: float = 0.0
    phi: float | Sequence[float] = 0.0
    alpha: float | Sequence[float] = 0.0

    def __post_init__(self):
        problems = []
        if not self.r > 0:
            problems.append("r must be positive")
        if not self.gamma >= 0:
            problems.append("gamma must be nonnegative")
        if not self.rho >= 0:
            problems.append("rho must be nonnegative")
        elif self.rho > 0 and not self.rho < self.gamma:
            problems.append("rho must be smaller than gamma")
        alpha = np.asarray(self.alpha, dtype=float)
        if np.any(alpha < 0) or np.any(alpha >= 1):
            problems.append("alpha must lie in [0, 1)")
        if problems:
            raise ValidationError(problems)

    def phi_vector(self, n: int) -> np.ndarray:
        return _per_node(self.phi, n, "phi")

    def alpha_vector(self, n: int) -> np.ndarray:
        return _per_node(self.alpha, n, "alpha")

    @property
    def penalised(self) -> bool:
        return bool(np.any(np.asarray(self.alpha, dtype=float) > 0))

    def replace(self, **changes) -> "CostParams":
        fields = dict(r=self.r, gamma=self.gamma, rho=self.rho, phi=self.phi, alpha=self.alpha)
        fields.update(changes)
        return CostParams(**fields)

    def to_dict(self) -> dict:
        def plain(v):
            a = np.asarray(v, dtype=float)
            return float(a) if a.ndim == 0 else a.tolist()

        return {"r": self.r, "gamma": self.gamma, "rho": self.rho,
                "phi": plain(self.phi), "alpha": plain(self.alpha)}


def demand_shares(inst: Instance, subset: Iterable[int]) -> np.ndarray:
    """Normalised demand weights over ``subset``, in iteration order."""
    idx = list(subset)
    if not idx:
        raise ValidationError(["empty subset"])
    w = inst.demand[idx]
    total = w.sum()
    if not total > 0:
        raise ValidationError(["subset has zero total demand"])
    return w / total


def check_weights(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    problems = []
    if p.ndim != 1 or p.size == 0:
        problems.append("weights must be a nonempty vector")
    else:
        if np.any(p < 0) or np.any(p > 1):
            problems.append("weights must lie in [0, 1]")
        if abs(p.sum() - 1.0) > WEIGHT_TOL:
            problems.append(f"weights sum to {p.sum()!r}, not 1")
    if problems:
        raise ValidationError(problems)
    return p
