"""CSV/JSON file formats and run configuration.

Node file: ``id,name,demand[,population][,x,y]``. When ``demand`` is missing or
blank and ``population`` is given, demand is ``500 * ln(population)``.

Distance file: either a dense headerless N x N matrix in node-file order, or
sparse triplets with header ``from,to,km`` covering every ordered pair.

Network file: ``node,name,facility`` (node ids as in the node file).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .model import CostParams, Instance, Network, ValidationError, validate_instance

DEMAND_SCALE = 500.0


def demand_from_population(population: float) -> float:
    return DEMAND_SCALE * math.log(population)


@dataclass
class NodeTable:
    ids: list[str]
    names: list[str]
    demand: np.ndarray
    coords: np.ndarray | None = None

    def index(self, node_id) -> int:
        key = str(node_id)
        try:
            return self.ids.index(key)
        except ValueError:
            try:
                return self.names.index(key)
            except ValueError:
                raise ValidationError([f"unknown node {key!r}"]) from None


def read_nodes(path) -> NodeTable:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError([f"{path}: no nodes"])
    cols = rows[0].keys()
    if "id" not in cols:
        raise ValidationError([f"{path}: missing 'id' column"])
    problems = []
    ids, names, demand, coords = [], [], [], []
    for k, row in enumerate(rows):
        nid = row["id"].strip()
        ids.append(nid)
        names.append((row.get("name") or nid).strip())
        raw = (row.get("demand") or "").strip()
        pop = (row.get("population") or "").strip()
        if raw:
            w = float(raw)
        elif pop:
            if not float(pop) > 0:
                problems.append(f"non-positive population at node {nid}")
                w = 0.0
            else:
                w = demand_from_population(float(pop))
        else:
            problems.append(f"node {nid} has neither demand nor population")
            w = 0.0
        if w < 0:
            problems.append(f"negative demand at node {k}")
        demand.append(w)
        if "x" in cols and "y" in cols and row["x"] and row["y"]:
            coords.append((float(row["x"]), float(row["y"])))
    if len(set(ids)) != len(ids):
        problems.append("duplicate node ids")
    if problems:
        raise ValidationError(problems)
    xy = np.array(coords) if len(coords) == len(ids) else None
    return NodeTable(ids, names, np.array(demand), xy)


def read_distances(path, nodes: NodeTable) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    n = len(nodes.ids)
    header = [c.strip().lower() for c in rows[0]] if rows else []
    if header[:3] == ["from", "to", "km"]:
        d = np.full((n, n), np.nan)
        np.fill_diagonal(d, 0.0)
        for r in rows[1:]:
            d[nodes.index(r[0].strip()), nodes.index(r[1].strip())] = float(r[2])
        missing = np.argwhere(np.isnan(d))
        if missing.size:
            pairs = ", ".join(f"({nodes.ids[a]},{nodes.ids[b]})" for a, b in missing[:10])
            raise ValidationError([f"coverage: {len(missing)} missing distance entries, e.g. {pairs}"])
        return d
    try:
        d = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValidationError([f"{path}: unreadable dense matrix ({exc})"]) from None
    if d.shape != (n, n):
        raise ValidationError([f"non-square distance matrix: {d.shape} for {n} nodes"])
    return d


def load_instance(nodes_path, dist_path, depot=None) -> tuple[Instance, NodeTable]:
    table = read_nodes(nodes_path)
    d = read_distances(dist_path, table)
    depot_idx = table.index(depot) if depot is not None else None
    inst = Instance(table.demand, d, depot=depot_idx, names=tuple(table.names))
    return validate_instance(inst), table


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def csv_text(header: list[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_nodes(path, inst: Instance, coords: np.ndarray | None = None) -> None:
    header = ["id", "name", "demand"] + (["x", "y"] if coords is not None else [])
    rows = []
    for i in inst.nodes:
        row = [i, inst.name(i), repr(float(inst.demand[i]))]
        if coords is not None:
            row += [repr(float(coords[i, 0])), repr(float(coords[i, 1]))]
        rows.append(row)
    atomic_write(path, csv_text(header, rows))


def write_distances(path, inst: Instance) -> None:
    rows = [[repr(float(v)) for v in row] for row in inst.dist]
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    atomic_write(path, buf.getvalue())


def network_text(net: Network, table: NodeTable | None = None, inst: Instance | None = None) -> str:
    def nid(i):
        return table.ids[i] if table is not None else str(i)

    def nm(i):
        if table is not None:
            return table.names[i]
        return inst.name(i) if inst is not None else str(i)

    rows = [[nid(i), nm(i), nid(f)] for i, f in net.allocation.items()]
    return csv_text(["node", "name", "facility"], rows)


def read_network(path, table: NodeTable) -> Network:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    alloc = {table.index(r["node"].strip()): table.index(r["facility"].strip()) for r in rows}
    return Network(tuple(sorted(set(alloc.values()))), alloc)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


@dataclass
class RunConfig:
    """Everything a CLI run needs; loaded from a JSON file.

    Paths are resolved relative to the config file's directory.
    """

    nodes: str | None = None
    distances: str | None = None
    depot: str | None = None
    params: dict = field(default_factory=dict)
    k: int | None = None
    problem: str = "kmedian"
    mode: str = "local"
    budget: int = 2_000_000
    seed: int = 0
    min_gain: float = 1e-9
    n_tail: int | None = None
    full_scan: bool = False
    guard_recentre: bool = True
    reallocate: bool = False
    network: str | None = None
    grid: dict = field(default_factory=dict)
    out: str | None = None
    base_dir: str = "."

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ValidationError([f"config {path} does not exist"])
        data = json.loads(path.read_text())
        unknown = set(data) - {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        if unknown:
            raise ValidationError([f"unknown config keys {sorted(unknown)}"])
        cfg = cls(**data, base_dir=str(path.parent))
        cfg.check()
        return cfg

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def check(self) -> None:
        problems = []
        for key in ("nodes", "distances", "network"):
            p = self.resolve(getattr(self, key))
            if p is not None and not p.exists():
                problems.append(f"{key} file {p} does not exist")
        if self.params:
            try:
                self.cost_params()
            except ValidationError as exc:
                problems += exc.problems
            except TypeError as exc:
                problems.append(f"params: {exc}")
        if problems:
            raise ValidationError(problems)

    def cost_params(self) -> CostParams:
        return CostParams(**self.params)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, default=_default).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


GOLDEN_FACILITIES = ("3", "10", "13")  # node names of A, B, C


def golden_paths() -> tuple[Path, Path]:
    """Node and distance files of the shipped 14-node worked example."""
    base = Path(__file__).parent / "data"
    return base / "worked_example_nodes.csv", base / "worked_example_dist.csv"


def golden_network() -> tuple[Instance, NodeTable, Network]:
    """The worked example with facilities A, B, C and nearest allocation."""
    from .solvers import allocate_nearest

    inst, table = load_instance(*golden_paths())
    fac = [table.names.index(n) for n in GOLDEN_FACILITIES]
    return inst, table, allocate_nearest(inst, fac)
