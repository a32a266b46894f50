"""Road network model: directed edges, intersections, turn geometry.

A network is a set of nodes with planar coordinates, directed road edges
between them, and intersections that couple edge ends through turn weights.
Edges are discretized into cells of roughly 10 m for the finite-difference
solver; the ``length_m`` field from the network file is authoritative, node
coordinates only provide geometry for turn angles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .fundamental import FdParams

CELL_TARGET_M = 10.0
CELL_MIN_M = 5.0
CELL_MAX_M = 20.0


class NetworkError(Exception):
    """Raised for unparseable or invalid network documents."""


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


def cell_count_for(length_m: float) -> int:
    """Number of cells for an edge: length / 10 m rounded, at least 2."""
    return max(2, round(length_m / CELL_TARGET_M))


@dataclass(frozen=True)
class RoadEdge:
    """One directed road segment.

    lanes multiplies per-lane density into a vehicle flux; free_flow_speed is
    the speed of the empty road and doubles as the speed clamp. fd_override,
    when set, replaces the derived fundamental diagram for this edge.
    """

    id: str
    from_node: str
    to_node: str
    length_m: float
    lanes: int
    free_flow_speed: float
    fd_override: FdParams | None = None

    @property
    def cell_count(self) -> int:
        return cell_count_for(self.length_m)

    @property
    def cell_length(self) -> float:
        return self.length_m / self.cell_count


@dataclass(frozen=True)
class Intersection:
    """Coupling of incoming and outgoing edges at a node.

    turn_weights maps (incoming_edge, outgoing_edge) to a non-negative
    preference; rows are normalized on use, so only ratios matter. Signalized
    intersections split their incoming edges into two complementary groups
    that are never green at the same time.
    """

    id: str
    node: str
    incoming: tuple[str, ...]
    outgoing: tuple[str, ...]
    turn_weights: dict[tuple[str, str], float] = field(default_factory=dict)
    signalized: bool = False
    group_a: tuple[str, ...] = ()
    group_b: tuple[str, ...] = ()


class RoadNetwork:
    """Immutable-after-load container for nodes, edges and intersections."""

    def __init__(self, nodes, edges, intersections, fd_defaults: FdParams | None = None):
        self.nodes: dict[str, Node] = {n.id: n for n in nodes}
        self.edges: dict[str, RoadEdge] = {e.id: e for e in edges}
        self.intersections: dict[str, Intersection] = {i.id: i for i in intersections}
        self.fd_defaults: FdParams = fd_defaults if fd_defaults is not None else FdParams()

        self.edge_order: tuple[str, ...] = tuple(sorted(self.edges))
        self._edge_index = {eid: i for i, eid in enumerate(self.edge_order)}

        # cell layout: contiguous slice of the flat state arrays per edge
        self._slices: dict[str, slice] = {}
        offset = 0
        for eid in self.edge_order:
            n = self.edges[eid].cell_count
            self._slices[eid] = slice(offset, offset + n)
            offset += n
        self.total_cells: int = offset

        # which intersection feeds / drains each edge end
        self.upstream_of: dict[str, str] = {}
        self.downstream_of: dict[str, str] = {}
        for ix in self.intersections.values():
            for eid in ix.outgoing:
                self.upstream_of[eid] = ix.id
            for eid in ix.incoming:
                self.downstream_of[eid] = ix.id

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and self.intersections == other.intersections
            and self.fd_defaults == other.fd_defaults
        )

    def edge_index(self, edge_id: str) -> int:
        return self._edge_index[edge_id]

    def cell_slice(self, edge_id: str) -> slice:
        return self._slices[edge_id]

    def fd_for(self, edge_id: str) -> FdParams:
        """Effective fundamental diagram of an edge.

        The free-flow speed always comes from the edge itself; the curve
        shape comes from the network-level defaults unless the edge carries
        an explicit override.
        """
        edge = self.edges[edge_id]
        if edge.fd_override is not None:
            return edge.fd_override
        return FdParams(
            v_max=edge.free_flow_speed,
            rho_cr=self.fd_defaults.rho_cr,
            a=self.fd_defaults.a,
        )

    @property
    def entry_edges(self) -> tuple[str, ...]:
        """Edges whose upstream end is fed by no intersection."""
        return tuple(e for e in self.edge_order if e not in self.upstream_of)

    @property
    def exit_edges(self) -> tuple[str, ...]:
        """Edges whose downstream end is drained by no intersection."""
        return tuple(e for e in self.edge_order if e not in self.downstream_of)

    def signalized_ids(self) -> tuple[str, ...]:
        return tuple(sorted(i for i, ix in self.intersections.items() if ix.signalized))


def validate(net: RoadNetwork) -> list[str]:
    """Check structural invariants; returns one message per violation."""
    problems: list[str] = []

    if not net.edges:
        problems.append("network has no edges")

    for node in net.nodes.values():
        if not (math.isfinite(node.x) and math.isfinite(node.y)):
            problems.append(f"node {node.id}: non-finite coordinates")

    for edge in net.edges.values():
        if edge.from_node not in net.nodes:
            problems.append(f"edge {edge.id}: unknown from node {edge.from_node}")
        if edge.to_node not in net.nodes:
            problems.append(f"edge {edge.id}: unknown to node {edge.to_node}")
        if edge.from_node == edge.to_node:
            problems.append(f"edge {edge.id}: from and to node coincide")
        if not (math.isfinite(edge.length_m) and edge.length_m > 0):
            problems.append(f"edge {edge.id}: length must be finite and > 0")
            continue
        if edge.lanes < 1:
            problems.append(f"edge {edge.id}: lanes must be >= 1")
        if not (math.isfinite(edge.free_flow_speed) and edge.free_flow_speed > 0):
            problems.append(f"edge {edge.id}: free_flow_speed must be finite and > 0")
        dx = edge.cell_length
        if not (CELL_MIN_M <= dx <= CELL_MAX_M):
            problems.append(
                f"edge {edge.id}: cell length {dx:.3f} m outside [{CELL_MIN_M}, {CELL_MAX_M}] m"
            )

    nodes_seen: dict[str, str] = {}
    for ix in net.intersections.values():
        if ix.node not in net.nodes:
            problems.append(f"intersection {ix.id}: unknown node {ix.node}")
        elif ix.node in nodes_seen:
            problems.append(
                f"intersection {ix.id}: node {ix.node} already used by intersection {nodes_seen[ix.node]}"
            )
        else:
            nodes_seen[ix.node] = ix.id

        for eid in ix.incoming:
            if eid not in net.edges:
                problems.append(f"intersection {ix.id}: unknown incoming edge {eid}")
            elif net.edges[eid].to_node != ix.node:
                problems.append(f"intersection {ix.id}: incoming edge {eid} does not end at node {ix.node}")
        for eid in ix.outgoing:
            if eid not in net.edges:
                problems.append(f"intersection {ix.id}: unknown outgoing edge {eid}")
            elif net.edges[eid].from_node != ix.node:
                problems.append(f"intersection {ix.id}: outgoing edge {eid} does not start at node {ix.node}")

        row_sums: dict[str, float] = {}
        for (e_in, e_out), w in ix.turn_weights.items():
            if e_in not in ix.incoming:
                problems.append(f"intersection {ix.id}: turn weight from non-incoming edge {e_in}")
            if e_out not in ix.outgoing:
                problems.append(f"intersection {ix.id}: turn weight to non-outgoing edge {e_out}")
            if not (math.isfinite(w) and w >= 0):
                problems.append(f"intersection {ix.id}: turn weight ({e_in}, {e_out}) must be finite and >= 0")
            else:
                row_sums[e_in] = row_sums.get(e_in, 0.0) + w
        for e_in, total in row_sums.items():
            if total <= 0:
                problems.append(
                    f"intersection {ix.id}: turn weights from {e_in} are declared but sum to 0"
                )

        if ix.signalized:
            set_a, set_b = set(ix.group_a), set(ix.group_b)
            if not set_a or not set_b:
                problems.append(f"intersection {ix.id}: signal groups must both be non-empty")
            if set_a & set_b:
                problems.append(f"intersection {ix.id}: signal groups overlap: {sorted(set_a & set_b)}")
            if set_a | set_b != set(ix.incoming):
                problems.append(f"intersection {ix.id}: signal groups must cover all incoming edges")

    return problems


def turn_angle(net: RoadNetwork, e_in: str, e_out: str) -> float:
    """Planar angle of the movement from ``e_in`` onto ``e_out``, in degrees.

    Measured between the ray from the junction node back toward e_in's
    upstream node and the ray toward e_out's downstream node: 180 deg is
    straight through, 90 deg a turn, 0 deg a U-turn.
    """
    if e_in not in net.edges or e_out not in net.edges:
        raise NetworkError(f"unknown edge in turn ({e_in}, {e_out})")
    edge_in, edge_out = net.edges[e_in], net.edges[e_out]
    junction = None
    for ix in net.intersections.values():
        if e_in in ix.incoming and e_out in ix.outgoing:
            junction = ix
            break
    if junction is None:
        raise NetworkError(f"edges {e_in} and {e_out} do not meet at a common intersection")

    center = net.nodes[junction.node]
    back = net.nodes[edge_in.from_node]
    ahead = net.nodes[edge_out.to_node]
    v1 = (back.x - center.x, back.y - center.y)
    v2 = (ahead.x - center.x, ahead.y - center.y)
    n1 = math.hypot(*v1)
    n2 = math.hypot(*v2)
    if n1 == 0 or n2 == 0:
        raise NetworkError(f"degenerate geometry for turn ({e_in}, {e_out}): zero-length ray")
    cos_angle = (v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)
    return math.degrees(math.acos(max(-1.0, min(1.0, cos_angle))))


def turn_speed_factor(angle_deg: float) -> float:
    """Speed retention of a turn: 1 for straight through, 0.5 at 90 deg, 0 for a U-turn."""
    if not (0.0 <= angle_deg <= 180.0):
        raise ValueError(f"turn angle must be in [0, 180] deg, got {angle_deg}")
    return (1.0 - math.cos(math.radians(angle_deg))) / 2.0


def _fd_from_doc(doc: dict) -> FdParams:
    return FdParams(v_max=float(doc["v_max"]), rho_cr=float(doc["rho_cr"]), a=float(doc["a"]))


def load_network(path) -> RoadNetwork:
    """Load and validate a network document; raises NetworkError on problems."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"cannot parse {path}: {exc}") from None

    try:
        nodes = [Node(id=str(n["id"]), x=float(n["x"]), y=float(n["y"])) for n in doc["nodes"]]
        edges = []
        for e in doc["edges"]:
            fd = _fd_from_doc(e["fd"]) if "fd" in e else None
            edges.append(
                RoadEdge(
                    id=str(e["id"]),
                    from_node=str(e["from"]),
                    to_node=str(e["to"]),
                    length_m=float(e["length_m"]),
                    lanes=int(e["lanes"]),
                    free_flow_speed=float(e["free_flow_speed_mps"]),
                    fd_override=fd,
                )
            )
        intersections = []
        for i in doc.get("intersections", []):
            weights = {
                (str(e_in), str(e_out)): float(w) for e_in, e_out, w in i.get("turn_weights", [])
            }
            intersections.append(
                Intersection(
                    id=str(i["id"]),
                    node=str(i["node"]),
                    incoming=tuple(str(x) for x in i.get("incoming", [])),
                    outgoing=tuple(str(x) for x in i.get("outgoing", [])),
                    turn_weights=weights,
                    signalized=bool(i.get("signalized", False)),
                    group_a=tuple(str(x) for x in i.get("group_a", [])),
                    group_b=tuple(str(x) for x in i.get("group_b", [])),
                )
            )
        defaults = doc.get("fd_defaults")
        fd_defaults = None
        if defaults is not None:
            fd_defaults = FdParams(
                v_max=float(defaults.get("v_max", FdParams().v_max)),
                rho_cr=float(defaults["rho_cr"]),
                a=float(defaults["a"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"malformed network document {path}: {exc!r}") from None

    duplicate_checks = [
        ("node", [n.id for n in nodes]),
        ("edge", [e.id for e in edges]),
        ("intersection", [i.id for i in intersections]),
    ]
    for kind, ids in duplicate_checks:
        seen = set()
        for i in ids:
            if i in seen:
                raise NetworkError(f"duplicate {kind} id {i!r}")
            seen.add(i)

    net = RoadNetwork(nodes, edges, intersections, fd_defaults)
    problems = validate(net)
    if problems:
        raise NetworkError("invalid network:\n  " + "\n  ".join(problems))
    return net


def save_network(net: RoadNetwork, path) -> None:
    """Serialize a network to the same document format load_network reads."""
    doc = {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in net.nodes.values()],
        "edges": [],
        "intersections": [],
    }
    if net.fd_defaults != FdParams():
        doc["fd_defaults"] = {
            "v_max": net.fd_defaults.v_max,
            "rho_cr": net.fd_defaults.rho_cr,
            "a": net.fd_defaults.a,
        }
    for e in net.edges.values():
        entry = {
            "id": e.id,
            "from": e.from_node,
            "to": e.to_node,
            "length_m": e.length_m,
            "lanes": e.lanes,
            "free_flow_speed_mps": e.free_flow_speed,
        }
        if e.fd_override is not None:
            entry["fd"] = {
                "v_max": e.fd_override.v_max,
                "rho_cr": e.fd_override.rho_cr,
                "a": e.fd_override.a,
            }
        doc["edges"].append(entry)
    for i in net.intersections.values():
        doc["intersections"].append(
            {
                "id": i.id,
                "node": i.node,
                "incoming": list(i.incoming),
                "outgoing": list(i.outgoing),
                "turn_weights": [[e_in, e_out, w] for (e_in, e_out), w in sorted(i.turn_weights.items())],
                "signalized": i.signalized,
                "group_a": list(i.group_a),
                "group_b": list(i.group_b),
            }
        )
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
