"""Nodal domains, antipodal pairing, the nesting forest of ovals in RP^2,
arrangement statistics (energy, empty ovals) and reference bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import TopologyError
from .nodal_geometry import NodalExtract, extract_nodal_s2, default_n_theta

__all__ = [
    "DomainLabeling",
    "ComponentPairing",
    "NestingForest",
    "BoundsReport",
    "ArrangementSummary",
    "label_domains",
    "pair_components",
    "count_components",
    "build_forest",
    "energy",
    "empty_ovals",
    "reference_bounds",
    "milnor_total_betti",
    "harnack_bound",
    "expected_euler_rp3",
    "two_tree_forest",
    "nested_chain",
    "analyze_s2",
]

ANTIPODE_TOL = 1e-9


# ---------------------------------------------------------------------------
# nodal domains


@dataclass
class DomainLabeling:
    """Sign domains of the grid graph and the tree they form with the curves.

    ``curve_domains[c]`` holds the two domains separated by curve ``c``.
    """

    labels: np.ndarray
    signs: np.ndarray
    curve_domains: np.ndarray

    @property
    def n_domains(self) -> int:
        return len(self.signs)

    @property
    def n_curves(self) -> int:
        return len(self.curve_domains)


def label_domains(extract: NodalExtract) -> DomainLabeling:
    """Connected components of {f > 0} and {f < 0} on the grid graph.

    Same-sign grid edges (latitude, longitude with wrap, polar fans) plus the
    saddle diagonals chosen by the extractor define adjacency.  Raises
    TopologyError unless the domains and curves form a tree.
    """
    nn = extract.n_nodes
    e = extract.node_edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nn, nn))
    n_dom, labels = connected_components(adj, directed=False)
    node_sign = extract.node_signs
    signs = np.zeros(n_dom, dtype=bool)
    signs[labels] = node_sign
    if np.any(signs[labels] != node_sign):
        raise TopologyError("a domain mixes both signs")
    if extract.n_curves != n_dom - 1:
        raise TopologyError(f"{extract.n_curves} curves but {n_dom} domains")

    ea, eb = _edge_endpoints(extract)
    va = labels[ea[extract.vertex_edge]]
    vb = labels[eb[extract.vertex_edge]]
    lo, hi = np.minimum(va, vb), np.maximum(va, vb)
    cl = extract.curve_labels
    curve_domains = np.full((extract.n_curves, 2), -1)
    curve_domains[cl, 0] = lo
    curve_domains[cl, 1] = hi
    if np.any(curve_domains[cl, 0] != lo) or np.any(curve_domains[cl, 1] != hi):
        raise TopologyError("a curve borders more than two domains")
    if extract.n_curves:
        g = coo_matrix(
            (np.ones(extract.n_curves), (curve_domains[:, 0], curve_domains[:, 1])), shape=(n_dom, n_dom)
        )
        if connected_components(g, directed=False)[0] != 1:
            raise TopologyError("domain adjacency graph is not a tree")
    return DomainLabeling(labels=labels, signs=signs, curve_domains=curve_domains)


def _edge_endpoints(extract: NodalExtract) -> tuple[np.ndarray, np.ndarray]:
    nt, nph = extract.grid.n_theta, extract.grid.n_phi
    nodes = np.arange(nt * nph).reshape(nt, nph)
    north, south = nt * nph, nt * nph + 1
    a = np.concatenate([nodes.ravel(), nodes[:-1].ravel(), np.full(nph, north), np.full(nph, south)])
    b = np.concatenate(
        [np.roll(nodes, -1, axis=1).ravel(), nodes[1:].ravel(), nodes[0], nodes[-1]]
    )
    return a, b


# ---------------------------------------------------------------------------
# antipodal pairing


@dataclass
class ComponentPairing:
    """partner[c] is the curve hit by the antipodal image of curve c."""

    partner: np.ndarray

    @property
    def self_symmetric(self) -> np.ndarray:
        return np.flatnonzero(self.partner == np.arange(len(self.partner)))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(c, int(p)) for c, p in enumerate(self.partner) if c < p]

    @property
    def b0_projective(self) -> int:
        return len(self.pairs) + len(self.self_symmetric)


def pair_components(extract: NodalExtract) -> ComponentPairing:
    """Match each curve with its image under x -> -x (vertex by vertex)."""
    nv = len(extract.vertices)
    if nv == 0:
        return ComponentPairing(partner=np.empty(0, dtype=int))
    img_edge = extract.antipodal_edge[extract.vertex_edge]
    img_vertex = extract.edge_to_vertex[img_edge]
    if np.any(img_vertex < 0):
        raise TopologyError("antipodal image of a crossing is not a crossing")
    gap = np.max(np.linalg.norm(extract.vertices[img_vertex] + extract.vertices, axis=1))
    if gap > ANTIPODE_TOL:
        raise TopologyError(f"antipodal vertex mismatch {gap:.3g}")
    cl = extract.curve_labels
    partner = np.full(extract.n_curves, -1)
    partner[cl] = cl[img_vertex]
    if np.any(partner[cl] != cl[img_vertex]) or np.any(partner[partner] != np.arange(extract.n_curves)):
        raise TopologyError("antipodal image of a curve is not a single curve")
    return ComponentPairing(partner=partner)


def count_components(extract: NodalExtract) -> tuple[int, int]:
    """(b0 on S^2, b0 in RP^2)."""
    return extract.n_curves, pair_components(extract).b0_projective


# ---------------------------------------------------------------------------
# nesting forest


@dataclass
class NestingForest:
    """Rooted forest of ovals; parents[i] = -1 marks a root."""

    parents: list[int]
    seeds: list[int] = field(default_factory=list)
    curves: list[tuple[int, int]] = field(default_factory=list)
    one_sided: int = 0

    def __post_init__(self):
        if not self.seeds:
            self.seeds = [2] * len(self.parents)
        if len(self.seeds) != len(self.parents):
            raise ValueError("one seed per node")
        if any(s <= 0 for s in self.seeds):
            raise ValueError("seeds must be positive")
        for i in range(len(self.parents)):
            seen, j = set(), i
            while j != -1:
                if j in seen:
                    raise ValueError("parent links contain a cycle")
                seen.add(j)
                j = self.parents[j]

    @property
    def size(self) -> int:
        return len(self.parents)

    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.parents]
        for i, p in enumerate(self.parents):
            if p >= 0:
                out[p].append(i)
        return out

    @property
    def roots(self) -> list[int]:
        return [i for i, p in enumerate(self.parents) if p < 0]

    def depth(self) -> int:
        """Length of the longest chain of nested ovals."""
        best = 0
        for i in range(self.size):
            k, j = 0, i
            while j != -1:
                k += 1
                j = self.parents[j]
            best = max(best, k)
        return best

    def bracket(self) -> str:
        """Canonical bracket string, children sorted."""
        kids = self.children()

        def enc(i: int) -> str:
            return "(" + "".join(sorted(enc(c) for c in kids[i])) + ")"

        return "".join(sorted(enc(r) for r in self.roots))

    def to_dict(self) -> dict:
        return {
            "nodes": list(range(self.size)),
            "parents": list(self.parents),
            "seeds": list(self.seeds),
            "one_sided": self.one_sided,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "NestingForest":
        return cls(parents=list(data["parents"]), seeds=list(data["seeds"]), one_sided=data.get("one_sided", 0))


def _euler_tour(n_dom: int, curve_domains: np.ndarray, root: int = 0):
    """Root the domain tree; return per-curve child domain and tin/tout."""
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n_dom)]
    for c, (a, b) in enumerate(curve_domains):
        nbrs[a].append((b, c))
        nbrs[b].append((a, c))
    tin = np.zeros(n_dom, dtype=int)
    tout = np.zeros(n_dom, dtype=int)
    child = np.full(len(curve_domains), -1)
    visited = np.zeros(n_dom, dtype=bool)
    clock = 0
    stack = [(root, iter(nbrs[root]))]
    visited[root] = True
    tin[root] = clock
    clock += 1
    while stack:
        node, it = stack[-1]
        for nb, c in it:
            if not visited[nb]:
                visited[nb] = True
                child[c] = nb
                tin[nb] = clock
                clock += 1
                stack.append((nb, iter(nbrs[nb])))
                break
        else:
            tout[node] = clock
            stack.pop()
    return child, tin, tout


def build_forest(labeling: DomainLabeling, pairing: ComponentPairing, degree: int | None = None) -> NestingForest:
    """Nesting forest of the ovals in RP^2.

    The interior of an oval lifted to the curve pair (c, c') is the side of c
    not containing c'.  Oval j lies inside oval i when exactly one lift of j
    sits in the interior of i; the parent is the innermost container.  The
    self-symmetric (one-sided) component of an odd-degree curve is dropped.
    """
    nc = labeling.n_curves
    if nc == 0:
        return NestingForest(parents=[])
    child, tin, tout = _euler_tour(labeling.n_domains, labeling.curve_domains)

    def below(i: int, j: int) -> bool:
        # curve j lies inside the subtree hanging below curve i
        a, b = child[i], child[j]
        return j != i and tin[a] <= tin[b] < tout[a]

    ovals = pairing.pairs
    one_sided = len(pairing.self_symmetric)
    if degree is not None and degree % 2 == 0 and one_sided:
        raise TopologyError("even-degree curve with a one-sided component")
    m = len(ovals)
    inside = np.zeros((m, m), dtype=bool)  # inside[i, j]: oval j within oval i
    for i, (ci, cpi) in enumerate(ovals):
        flip = below(ci, cpi)  # interior is the complement of the subtree
        for j, (cj, cpj) in enumerate(ovals):
            if i == j:
                continue
            hits = sum((below(ci, x) != flip) for x in (cj, cpj))
            if hits == 2:
                raise TopologyError("both lifts of an oval inside another lift")
            inside[i, j] = hits == 1
    depth = inside.sum(axis=0)
    parents = []
    for j in range(m):
        cont = np.flatnonzero(inside[:, j])
        parents.append(int(cont[np.argmax(depth[cont])]) if len(cont) else -1)
    forest = NestingForest(parents=parents, curves=list(ovals), one_sided=one_sided)
    if degree is not None and forest.depth() > degree // 2:
        raise TopologyError("nesting deeper than d/2")
    return forest


def energy(forest: NestingForest) -> int:
    """h(C): a leaf contributes its seed, an internal node twice the sum
    of its children's energies; trees add up."""
    kids = forest.children()
    memo: dict[int, int] = {}
    order = []
    stack = list(forest.roots)
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(kids[i])
    for i in reversed(order):
        memo[i] = forest.seeds[i] if not kids[i] else 2 * sum(memo[c] for c in kids[i])
    return sum(memo[r] for r in forest.roots)


def empty_ovals(forest: NestingForest) -> int:
    """nu_0: number of ovals containing no other oval."""
    return sum(1 for k in forest.children() if not k)


def two_tree_forest() -> NestingForest:
    """Two trees: a chain of two ovals around (a nested pair, an empty
    oval), and one oval around (an empty oval, a nested pair)."""
    # tree 1: 0 > 1 > {2 > 3, 4}; tree 2: 5 > {6, 7 > 8}
    return NestingForest(parents=[-1, 0, 1, 2, 1, -1, 5, 5, 7])


def nested_chain(k: int) -> NestingForest:
    """k ovals, each inside the previous one."""
    return NestingForest(parents=[-1] + list(range(k - 1)))


# ---------------------------------------------------------------------------
# reference formulas


def milnor_total_betti(n: int, d: int) -> int:
    """Total Betti number of a smooth degree-d complex hypersurface in CP^n."""
    sign = (-1) ** (n + 1)
    num = (d - 1) ** (n + 1) - sign
    if num % d:
        raise ArithmeticError("non-integral Betti total")
    return num // d + n + sign


def harnack_bound(d: int) -> int:
    return (d - 1) * (d - 2) // 2 + 1


def expected_euler_rp3(delta: float) -> float:
    return -math.sqrt(delta) / 2 * (delta - 3)


@dataclass(frozen=True)
class BoundsReport:
    n: int
    d: int
    milnor_b: int
    harnack: int | None
    energy_max_nested: int
    expected_euler_rp3: float | None = None

    def arnold_lower(self, b0: int) -> int | None:
        """Lower bound b0 - (k-1)(k-2) on the number of empty ovals, d = 2k."""
        if self.d % 2:
            return None
        k = self.d // 2
        return b0 - (k - 1) * (k - 2)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "milnor_b": self.milnor_b,
            "harnack": self.harnack,
            "energy_max_nested": self.energy_max_nested,
            "expected_euler_rp3": self.expected_euler_rp3,
        }


def reference_bounds(n: int, d: int, delta: float | None = None) -> BoundsReport:
    if d < 1 or n < 1:
        raise ValueError("need n, d >= 1")
    return BoundsReport(
        n=n,
        d=d,
        milnor_b=milnor_total_betti(n, d),
        harnack=harnack_bound(d) if n == 2 else None,
        energy_max_nested=2 ** (d // 2),
        expected_euler_rp3=expected_euler_rp3(delta) if delta is not None else None,
    )


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class ArrangementSummary:
    b0_sphere: int
    b0_projective: int
    n_domains: int
    energy: int
    empty_ovals: int
    depth: int
    one_sided: int
    total_length: float
    n_theta: int
    refined: bool
    forest: NestingForest = field(repr=False)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "b0_sphere", "b0_projective", "n_domains", "energy", "empty_ovals",
            "depth", "one_sided", "total_length", "n_theta", "refined",
        )}
        out["forest"] = self.forest.bracket()
        return out


def _analyze_once(poly, n_theta: int) -> ArrangementSummary:
    ext = extract_nodal_s2(poly, n_theta)
    lab = label_domains(ext)
    pairing = pair_components(ext)
    forest = build_forest(lab, pairing, degree=ext.degree)
    return ArrangementSummary(
        b0_sphere=ext.n_curves,
        b0_projective=pairing.b0_projective,
        n_domains=lab.n_domains,
        energy=energy(forest),
        empty_ovals=empty_ovals(forest),
        depth=forest.depth(),
        one_sided=forest.one_sided,
        total_length=ext.total_length,
        n_theta=n_theta,
        refined=False,
        forest=forest,
    )


def analyze_s2(poly, n_theta: int | None = None) -> ArrangementSummary:
    """Extract, label, pair and nest; on a topology error retry once at
    twice the latitude resolution."""
    nt = n_theta or default_n_theta(int(poly.degree))
    try:
        return _analyze_once(poly, nt)
    except TopologyError:
        out = _analyze_once(poly, 2 * nt)
        out.refined = True
        return out
