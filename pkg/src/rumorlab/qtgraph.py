"""Quasi-transitive graphs described by per-type neighbor counts.

A blueprint is a square matrix counts[i][j] = number of type-j neighbors
that every type-i vertex has.  Vertex-type proportions are forced by the
double-counting identity p_i * counts[i][j] = p_j * counts[j][i] and are
computed in exact rational arithmetic.  Concrete graphs come either from
built-in periodic families or from a typed configuration model.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DisconnectedTypes,
    InconsistentCounts,
    InfeasibleSize,
    MatchingFailed,
    OddGridDimension,
    SizeTooSmall,
    TableTooShort,
    ZeroDegreeType,
)

__all__ = [
    "TypeBlueprint",
    "Graph",
    "RealizationReport",
    "GrowthTable",
    "MarginReport",
    "validate_blueprint",
    "verify_realization",
    "cycle",
    "bipartite24",
    "decorated_grid",
    "torus2d",
    "comb",
    "strip3",
    "build_family",
    "build_configuration_model",
    "boundary_margin_g",
    "blueprint_to_json",
    "blueprint_from_json",
    "write_graph",
    "read_graph",
]


# ---------------------------------------------------------------------------
# blueprints


@dataclass(frozen=True)
class TypeBlueprint:
    """Validated neighbor-count matrix with exact type proportions."""

    counts: tuple  # tuple of tuples of ints, counts[i][j] = n_i(j)
    proportions: tuple  # tuple of Fraction, sums to 1

    @property
    def n_types(self) -> int:
        return len(self.counts)

    @property
    def p(self) -> np.ndarray:
        """Type proportions as floats."""
        return np.array([float(x) for x in self.proportions])

    @property
    def count_matrix(self) -> np.ndarray:
        return np.array(self.counts, dtype=int)

    def degree(self, i: int) -> int:
        return int(sum(self.counts[i]))

    def contact_matrix(self) -> np.ndarray:
        """c[k, j] = counts[k][j] / p_j, the per-density contact coefficients."""
        return self.count_matrix / self.p[None, :]


def validate_blueprint(counts) -> TypeBlueprint:
    """Check a neighbor-count matrix and solve for the type proportions.

    Raises ZeroDegreeType, InconsistentCounts, or DisconnectedTypes when the
    matrix cannot describe a connected quasi-transitive graph.
    """
    mat = [[int(x) for x in row] for row in counts]
    k = len(mat)
    if k == 0 or any(len(row) != k for row in mat):
        raise InconsistentCounts("counts must be a nonempty square matrix")
    if any(x < 0 for row in mat for x in row):
        raise InconsistentCounts("neighbor counts must be nonnegative")
    for i in range(k):
        if sum(mat[i]) == 0:
            raise ZeroDegreeType(f"type {i} has degree zero")
    for i in range(k):
        for j in range(k):
            if (mat[i][j] > 0) != (mat[j][i] > 0):
                raise InconsistentCounts(
                    f"counts[{i}][{j}] = {mat[i][j]} but counts[{j}][{i}] = {mat[j][i]}"
                )

    # Relative sizes r_j / r_i = n_i(j) / n_j(i) along type-graph edges.
    ratios = [None] * k
    ratios[0] = Fraction(1)
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(k):
            if mat[i][j] == 0:
                continue
            forced = ratios[i] * Fraction(mat[i][j], mat[j][i])
            if ratios[j] is None:
                ratios[j] = forced
                stack.append(j)
            elif ratios[j] != forced:
                raise InconsistentCounts(
                    f"cycle through types {i},{j} forces conflicting proportions"
                )
    if any(r is None for r in ratios):
        missing = [j for j, r in enumerate(ratios) if r is None]
        raise DisconnectedTypes(f"types {missing} unreachable from type 0")

    total = sum(ratios)
    props = tuple(r / total for r in ratios)
    return TypeBlueprint(
        counts=tuple(tuple(row) for row in mat),
        proportions=props,
    )


def blueprint_to_json(bp: TypeBlueprint, path) -> None:
    with open(path, "w") as fh:
        json.dump({"n_types": bp.n_types, "counts": [list(r) for r in bp.counts]}, fh)
        fh.write("\n")


def blueprint_from_json(path) -> TypeBlueprint:
    with open(path) as fh:
        data = json.load(fh)
    counts = data["counts"]
    if "n_types" in data and len(counts) != int(data["n_types"]):
        raise InconsistentCounts("n_types does not match the counts matrix")
    return validate_blueprint(counts)


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Graph:
    """Finite simple graph with a vertex typing, adjacency stored as CSR."""

    blueprint: TypeBlueprint
    type_of: np.ndarray  # (n,) int
    indptr: np.ndarray  # (n+1,) int
    indices: np.ndarray  # sorted neighbor ids, concatenated per vertex

    @property
    def num_vertices(self) -> int:
        return len(self.type_of)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def adjacency_lists(self) -> list:
        """Neighbor ids as plain Python lists, handy for tight event loops."""
        return [self.neighbors(v).tolist() for v in range(self.num_vertices)]

    def type_counts(self) -> np.ndarray:
        return np.bincount(self.type_of, minlength=self.blueprint.n_types)

    def edges(self):
        for v in range(self.num_vertices):
            for u in self.neighbors(v):
                if v < u:
                    yield (v, int(u))


def _graph_from_edges(blueprint, type_of, edge_pairs) -> Graph:
    type_of = np.asarray(type_of, dtype=np.int64)
    n = len(type_of)
    heads = []
    for u, v in edge_pairs:
        heads.append((u, v))
        heads.append((v, u))
    arr = np.array(heads, dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, arr[:, 0] + 1, 1)
    indptr = np.cumsum(indptr)
    g = Graph(blueprint=blueprint, type_of=type_of, indptr=indptr, indices=arr[:, 1].copy())
    for a in (g.type_of, g.indptr, g.indices):
        a.setflags(write=False)
    return g


@dataclass(frozen=True)
class RealizationReport:
    ok: bool
    connected: bool
    message: str
    first_offender: int | None = None


def verify_realization(g: Graph, blueprint: TypeBlueprint | None = None) -> RealizationReport:
    """Check per-vertex neighbor-type counts, exact proportions, simplicity,
    and report connectivity (connectivity does not affect ok)."""
    bp = blueprint if blueprint is not None else g.blueprint
    k = bp.n_types
    n = g.num_vertices
    counts = bp.count_matrix

    sizes = g.type_counts()
    for i in range(k):
        if Fraction(int(sizes[i]), n) != bp.proportions[i]:
            return RealizationReport(
                ok=False,
                connected=_is_connected(g),
                message=f"type {i} has {sizes[i]} of {n} vertices, expected "
                f"proportion {bp.proportions[i]}",
            )

    for v in range(n):
        nbrs = g.neighbors(v)
        if len(nbrs) and (np.any(nbrs[:-1] >= nbrs[1:]) or np.any(nbrs == v)):
            return RealizationReport(
                ok=False,
                connected=False,
                message=f"vertex {v} has a self-loop or repeated neighbor",
                first_offender=v,
            )
        got = np.bincount(g.type_of[nbrs], minlength=k)
        want = counts[g.type_of[v]]
        if not np.array_equal(got, want):
            return RealizationReport(
                ok=False,
                connected=_is_connected(g),
                message=f"vertex {v} (type {g.type_of[v]}) sees neighbor types "
                f"{got.tolist()}, expected {want.tolist()}",
                first_offender=v,
            )

    return RealizationReport(ok=True, connected=_is_connected(g), message="ok")


def _is_connected(g: Graph) -> bool:
    n = g.num_vertices
    if n == 0:
        return True
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    reached = 1
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if not seen[u]:
                seen[u] = True
                reached += 1
                stack.append(int(u))
    return reached == n


# ---------------------------------------------------------------------------
# built-in families


def cycle(n: int) -> Graph:
    """Cycle on n vertices; one type of degree 2."""
    if n < 3:
        raise SizeTooSmall("cycle needs n >= 3")
    bp = validate_blueprint([[2]])
    edges = [(i, (i + 1) % n) for i in range(n)]
    return _graph_from_edges(bp, np.zeros(n, dtype=int), edges)


def torus2d(L: int) -> Graph:
    """L x L periodic square grid; one type of degree 4."""
    if L < 3:
        raise SizeTooSmall("torus2d needs L >= 3")
    bp = validate_blueprint([[4]])
    edges = []
    for x in range(L):
        for y in range(L):
            v = x * L + y
            edges.append((v, ((x + 1) % L) * L + y))
            edges.append((v, x * L + (y + 1) % L))
    return _graph_from_edges(bp, np.zeros(L * L, dtype=int), edges)


def bipartite24(n: int) -> Graph:
    """Ring of n degree-4 hubs, consecutive hubs joined by two degree-2 bridges.

    3n vertices total; type 0 is the degree-2 bridges, type 1 the hubs, so
    the proportions are (2/3, 1/3).
    """
    if n < 2:
        raise SizeTooSmall("bipartite24 needs n >= 2")
    bp = validate_blueprint([[0, 2], [4, 0]])
    # hubs: 0..n-1, bridges for gap i: n + 2i, n + 2i + 1
    type_of = np.array([1] * n + [0] * (2 * n))
    edges = []
    for i in range(n):
        h0, h1 = i, (i + 1) % n
        for s in range(2):
            b = n + 2 * i + s
            edges.append((h0, b))
            edges.append((b, h1))
    return _graph_from_edges(bp, type_of, edges)


def decorated_grid(m: int, n: int) -> Graph:
    """Periodic m x n grid with parity-dependent extra edges.

    Types by coordinate parity: A=(even,even), B=(odd,even), C=(even,odd),
    D=(odd,odd).  Each A vertex gains a diagonal to the D vertex at
    (x+1, y+1); each C vertex gains the two horizontal jumps (x+-2, y).
    Degrees come out (5, 4, 6, 5); proportions are uniform.
    """
    if m % 2 or n % 2:
        raise OddGridDimension("decorated_grid needs even dimensions")
    if m < 6 or n < 4:
        raise SizeTooSmall("decorated_grid needs m >= 6 and n >= 4")
    bp = validate_blueprint(
        [
            [0, 2, 2, 1],
            [2, 0, 0, 2],
            [2, 0, 2, 2],
            [1, 2, 2, 0],
        ]
    )
    def vid(x, y):
        return (x % m) * n + (y % n)

    type_code = {(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3}
    type_of = np.empty(m * n, dtype=int)
    edges = []
    for x in range(m):
        for y in range(n):
            v = vid(x, y)
            type_of[v] = type_code[(x % 2, y % 2)]
            edges.append((v, vid(x + 1, y)))
            edges.append((v, vid(x, y + 1)))
            if x % 2 == 0 and y % 2 == 0:  # A: diagonal
                edges.append((v, vid(x + 1, y + 1)))
            if x % 2 == 0 and y % 2 == 1:  # C: horizontal jump (one direction per vertex)
                edges.append((v, vid(x + 2, y)))
    return _graph_from_edges(bp, type_of, edges)


def comb(n: int) -> Graph:
    """Cycle backbone of length n with one pendant leaf per backbone vertex."""
    if n < 3:
        raise SizeTooSmall("comb needs n >= 3")
    bp = validate_blueprint([[2, 1], [1, 0]])
    type_of = np.array([0] * n + [1] * n)
    edges = [(i, (i + 1) % n) for i in range(n)]
    edges += [(i, n + i) for i in range(n)]
    return _graph_from_edges(bp, type_of, edges)


def strip3(n: int) -> Graph:
    """Circular ladder of three rows: two boundary rows and one middle row."""
    if n < 3:
        raise SizeTooSmall("strip3 needs n >= 3")
    bp = validate_blueprint([[2, 1], [2, 2]])
    # rows: boundary 0 -> ids 0..n-1, middle -> n..2n-1, boundary 2 -> 2n..3n-1
    type_of = np.array([0] * n + [1] * n + [0] * n)
    edges = []
    for i in range(n):
        j = (i + 1) % n
        edges.append((i, j))
        edges.append((n + i, n + j))
        edges.append((2 * n + i, 2 * n + j))
        edges.append((i, n + i))
        edges.append((n + i, 2 * n + i))
    return _graph_from_edges(bp, type_of, edges)


_FAMILY_BUILDERS = {
    "cycle": (cycle, 1),
    "bipartite24": (bipartite24, 1),
    "grid": (decorated_grid, 2),
    "decorated_grid": (decorated_grid, 2),
    "torus": (torus2d, 1),
    "torus2d": (torus2d, 1),
    "comb": (comb, 1),
    "strip3": (strip3, 1),
}


def build_family(spec: str) -> Graph:
    """Build a named family from compact syntax like 'torus:50' or 'grid:8:6'."""
    parts = spec.split(":")
    name = parts[0].strip().lower()
    if name not in _FAMILY_BUILDERS:
        raise ValueError(f"unknown family {name!r}; choices: {sorted(_FAMILY_BUILDERS)}")
    fn, arity = _FAMILY_BUILDERS[name]
    args = parts[1:]
    if len(args) != arity:
        raise ValueError(f"family {name!r} takes {arity} size parameter(s), got {len(args)}")
    return fn(*(int(a) for a in args))


# ---------------------------------------------------------------------------
# configuration model


def _type_sizes_for(bp: TypeBlueprint, n: int) -> list:
    sizes = [round(p * n) for p in bp.proportions]
    if sum(sizes) != n or any(s <= 0 for s in sizes):
        raise InfeasibleSize(
            f"rounded type sizes {sizes} do not partition {n} vertices"
        )
    counts = bp.counts
    k = bp.n_types
    for i in range(k):
        if sizes[i] <= counts[i][i]:
            raise InfeasibleSize(
                f"type {i} has {sizes[i]} vertices but needs {counts[i][i]} "
                "distinct same-type neighbors"
            )
        if sizes[i] * counts[i][i] % 2:
            raise InfeasibleSize(f"odd number of type-{i} internal half-edges")
        for j in range(k):
            if i != j:
                if sizes[j] < counts[i][j]:
                    raise InfeasibleSize(
                        f"type {i} needs {counts[i][j]} distinct type-{j} neighbors "
                        f"but only {sizes[j]} exist"
                    )
                if sizes[i] * counts[i][j] != sizes[j] * counts[j][i]:
                    raise InfeasibleSize(
                        f"half-edge mismatch between types {i} and {j} at size {n}"
                    )
    return sizes


def _pair_up(rng, left, right, forbid_loops, seen, budget):
    """Match two stub arrays into simple edges, fixing collisions by swaps.

    seen holds edge keys already placed by other classes (same-type-pair edges
    can only collide within their own class, but keys are global anyway).
    Returns the list of edges or None when the swap budget is exhausted.
    """
    right = list(right)
    rng.shuffle(right)
    pairs = [[int(a), int(b)] for a, b in zip(left, right)]

    def key(p):
        a, b = p
        return (a, b) if a <= b else (b, a)

    local = {}
    for idx, p in enumerate(pairs):
        local.setdefault(key(p), []).append(idx)

    def is_bad(p):
        return (forbid_loops and p[0] == p[1]) or len(local[key(p)]) > 1 or key(p) in seen

    bad = {i for i, p in enumerate(pairs) if is_bad(p)}
    attempts = 0
    while bad and attempts < budget:
        attempts += 1
        b = next(iter(bad))
        if not is_bad(pairs[b]):  # a collision partner moved away already
            bad.discard(b)
            continue
        o = int(rng.integers(len(pairs)))
        if o == b:
            continue
        pb, po = pairs[b], pairs[o]
        kb, ko = key(pb), key(po)
        new_b = [pb[0], po[1]]
        new_o = [po[0], pb[1]]
        nkb, nko = key(new_b), key(new_o)
        # count collisions as if the swap were applied
        def count_after(kk):
            c = len(local.get(kk, ()))
            c -= (kk == kb) + (kk == ko)
            c += (kk == nkb) + (kk == nko)
            return c
        ok = True
        for p, kk in ((new_b, nkb), (new_o, nko)):
            if forbid_loops and p[0] == p[1]:
                ok = False
            if kk in seen or count_after(kk) > 1:
                ok = False
        if not ok:
            continue
        for idx, kk in ((b, kb), (o, ko)):
            lst = local[kk]
            lst.remove(idx)
            if not lst:
                del local[kk]
        pairs[b], pairs[o] = new_b, new_o
        for idx, kk in ((b, nkb), (o, nko)):
            local.setdefault(kk, []).append(idx)
        for idx in (b, o):
            bad.discard(idx)
            if is_bad(pairs[idx]):
                bad.add(idx)
    if bad:
        return None
    return [key(p) for p in pairs]


def build_configuration_model(
    bp: TypeBlueprint, n: int, seed: int, max_restarts: int = 60
) -> Graph:
    """Random simple graph realizing the blueprint on n vertices.

    Half-edges are matched independently within each unordered type pair;
    self-loops and parallel edges are removed by bounded random swaps inside
    the offending class, with whole-class redraws on failure.  Deterministic
    in (bp, n, seed).  Connectivity is not guaranteed.
    """
    sizes = _type_sizes_for(bp, n)
    k = bp.n_types
    counts = bp.counts
    rng = np.random.default_rng(seed)

    starts = np.cumsum([0] + sizes)
    vertices = [list(range(starts[i], starts[i + 1])) for i in range(k)]
    type_of = np.concatenate([[i] * sizes[i] for i in range(k)])

    for _ in range(max_restarts):
        edges = []
        seen = set()
        failed = False
        for i in range(k):
            for j in range(i, k):
                if counts[i][j] == 0:
                    continue
                if i == j:
                    stubs = np.repeat(vertices[i], counts[i][i])
                    stubs = stubs[rng.permutation(len(stubs))]
                    half = len(stubs) // 2
                    left, right = stubs[:half], stubs[half:]
                else:
                    left = np.repeat(vertices[i], counts[i][j])
                    right = np.repeat(vertices[j], counts[j][i])
                budget = 200 * max(len(left), 1)
                matched = _pair_up(rng, left, right, i == j, seen, budget)
                if matched is None:
                    failed = True
                    break
                seen.update(matched)
                edges.extend(matched)
            if failed:
                break
        if not failed:
            return _graph_from_edges(bp, type_of, edges)
    raise MatchingFailed(
        f"no simple realization found in {max_restarts} restarts", restarts=max_restarts
    )


# ---------------------------------------------------------------------------
# growth tables


@dataclass(frozen=True)
class GrowthTable:
    """Ball volumes f(0), f(1), ..., f(r_max): positive and non-decreasing."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 1:
            raise ValueError("growth table must be a nonempty 1-d array")
        if vals[0] < 1.0 or np.any(np.diff(vals) < 0.0):
            raise ValueError("growth table must start at >= 1 and be non-decreasing")
        object.__setattr__(self, "values", vals)

    @property
    def r_max(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class MarginReport:
    n: int
    g: int
    margin: float  # largest relative one-step increment over [n//2, r_max]
    bound: float  # sqrt(margin), certified upper bound for ratio
    ratio: float  # (f(n) - f(n - g)) / f(n)


def boundary_margin_g(growth: GrowthTable, n: int) -> MarginReport:
    """Shell size g(n) whose relative boundary mass is certified small.

    g(n) = min(n // 2, floor(margin ** -0.5)) clamped to at least one shell,
    where margin is the largest relative increment of the table from n // 2
    onward; the returned ratio (f(n) - f(n - g)) / f(n) never exceeds
    sqrt(margin) (for margin >= 1 the single clamped shell has ratio < 1).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if n > growth.r_max:
        raise TableTooShort(f"table covers r <= {growth.r_max}, need {n}")
    f = growth.values
    half = n // 2
    deltas = np.diff(f) / f[:-1]  # deltas[m-1] = (f(m) - f(m-1)) / f(m-1)
    margin = float(np.max(deltas[half - 1 :]))
    if margin <= 0.0:
        g = half
    else:
        g = max(1, min(half, int(np.floor(margin**-0.5))))
    ratio = float((f[n] - f[n - g]) / f[n])
    return MarginReport(n=n, g=g, margin=margin, bound=float(np.sqrt(margin)), ratio=ratio)


# ---------------------------------------------------------------------------
# file formats


def write_graph(g: Graph, edges_path, types_path) -> None:
    """Edge list CSV with header u,v plus a JSON sidecar of vertex types."""
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        for u, v in g.edges():
            w.writerow([u, v])
    with open(types_path, "w") as fh:
        json.dump({"type_of": [int(t) for t in g.type_of]}, fh)
        fh.write("\n")


def read_graph(edges_path, types_path, blueprint: TypeBlueprint) -> Graph:
    with open(types_path) as fh:
        type_of = json.load(fh)["type_of"]
    edges = []
    with open(edges_path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["u", "v"]:
            raise ValueError("edge file must have header u,v")
        for row in r:
            if not row:
                continue
            edges.append((int(row[0]), int(row[1])))
    return _graph_from_edges(blueprint, type_of, edges)
