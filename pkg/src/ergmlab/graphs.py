"""Dense labeled simple graphs and small motifs, with exact counting.

Graphs are stored as one adjacency bitmask per vertex (a Python int), which
makes the hot statistics (edge toggles, common-neighbor popcounts for
triangles) cheap at the n = 30..200 scale the samplers run at, while keeping
exact integer counting available as an oracle for everything else.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

from .errors import DomainError, FormatError, InstanceTooLargeError

MAX_VERTICES = 4096
HOM_MAP_GUARD = 10**9
CHROMATIC_VERTEX_GUARD = 12


class Graph:
    """Undirected simple graph on vertices 0..n-1.

    Instances are immutable by convention: every mutating-looking operation
    returns a new Graph, so values can be shared freely across threads.
    """

    __slots__ = ("n", "rows")

    def __init__(self, n: int, rows: Sequence[int] | None = None):
        if n < 1 or n > MAX_VERTICES:
            raise DomainError(f"vertex count must be in [1, {MAX_VERTICES}], got {n}")
        self.n = n
        if rows is None:
            self.rows = (0,) * n
        else:
            if len(rows) != n:
                raise FormatError("adjacency row count does not match n")
            rows = tuple(int(r) for r in rows)
            full = (1 << n) - 1
            for i, r in enumerate(rows):
                if r & ~full:
                    raise FormatError(f"row {i} has bits beyond vertex {n - 1}")
                if r >> i & 1:
                    raise FormatError(f"self-loop at vertex {i}")
            for i in range(n):
                for j in range(i + 1, n):
                    if (rows[i] >> j & 1) != (rows[j] >> i & 1):
                        raise FormatError(f"adjacency not symmetric at ({i}, {j})")
            self.rows = rows

    # -- constructors -----------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, [full ^ (1 << i) for i in range(n)])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        rows = [0] * n
        for i, j in edges:
            if i == j:
                raise FormatError(f"self-loop ({i}, {j}) not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise FormatError(f"edge ({i}, {j}) out of range for n = {n}")
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return cls(n, rows)

    @classmethod
    def erdos_renyi(cls, n: int, p: float, rng) -> "Graph":
        """Each of the C(n,2) edges present independently with probability p."""
        rows = [0] * n
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    rows[i] |= 1 << j
                    rows[j] |= 1 << i
        return cls(n, rows)

    # -- basics -----------------------------------------------------------

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            r = self.rows[i] >> (i + 1) << (i + 1)
            while r:
                j = (r & -r).bit_length() - 1
                out.append((i, j))
                r &= r - 1
        return out

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def edge_count(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    def triangle_count(self) -> int:
        """Exact triangle count via popcount of row intersections."""
        total = 0
        rows = self.rows
        for i, j in self.edges():
            common = rows[i] & rows[j]
            # only count the third vertex above j to avoid double counting
            total += (common >> (j + 1)).bit_count()
        return total

    def edge_density(self) -> float:
        if self.n < 2:
            raise DomainError("edge density needs at least 2 vertices")
        return self.edge_count() / math.comb(self.n, 2)

    def common_neighbors(self, i: int, j: int) -> int:
        return (self.rows[i] & self.rows[j]).bit_count()

    def with_edge_toggled(self, i: int, j: int) -> "Graph":
        if i == j:
            raise DomainError("cannot toggle a self-loop")
        rows = list(self.rows)
        rows[i] ^= 1 << j
        rows[j] ^= 1 << i
        g = Graph.__new__(Graph)
        g.n = self.n
        g.rows = tuple(rows)
        return g

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel vertices: new vertex perm[i] plays the role of old vertex i."""
        rows = [0] * self.n
        for i, j in self.edges():
            a, b = perm[i], perm[j]
            rows[a] |= 1 << b
            rows[b] |= 1 << a
        return Graph(self.n, rows)

    def adjacency_matrix(self):
        import numpy as np

        a = np.zeros((self.n, self.n), dtype=float)
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1.0
        return a

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.rows == other.rows

    def __hash__(self):
        return hash((self.n, self.rows))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count()})"

    # -- text format: first line n, then one "i j" pair per line -----------

    def to_text(self) -> str:
        lines = [str(self.n)]
        lines += [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise FormatError("empty graph file")
        try:
            n = int(lines[0])
        except ValueError as exc:
            raise FormatError(f"first line must be the vertex count, got {lines[0]!r}") from exc
        edges = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise FormatError(f"bad edge line {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(n, edges)


class Motif:
    """A small finite simple graph used inside sufficient statistics.

    Must contain at least one edge. Caches its edge count and chromatic
    number, the two quantities the variational formulas consume.
    """

    __slots__ = ("vertex_count", "edges", "name", "_chromatic")

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]], name: str | None = None):
        edges = tuple(sorted(tuple(sorted(e)) for e in edges))
        if vertex_count < 1:
            raise DomainError("motif needs at least one vertex")
        if not edges:
            raise DomainError("motif must contain at least one edge")
        seen = set()
        for i, j in edges:
            if i == j:
                raise DomainError(f"motif has self-loop at {i}")
            if not (0 <= i < vertex_count and 0 <= j < vertex_count):
                raise DomainError(f"motif edge ({i}, {j}) out of range")
            if (i, j) in seen:
                raise DomainError(f"duplicate motif edge ({i}, {j})")
            seen.add((i, j))
        self.vertex_count = vertex_count
        self.edges = edges
        self.name = name
        self._chromatic = None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def chromatic(self) -> int:
        if self._chromatic is None:
            self._chromatic = chromatic_number(self)
        return self._chromatic

    # -- builtins ----------------------------------------------------------

    @classmethod
    def edge(cls) -> "Motif":
        return cls(2, [(0, 1)], name="edge")

    @classmethod
    def triangle(cls) -> "Motif":
        return cls(3, [(0, 1), (1, 2), (0, 2)], name="triangle")

    @classmethod
    def star(cls, j: int) -> "Motif":
        """j-star: one root joined to j leaves (j >= 1; star:1 is the edge)."""
        if j < 1:
            raise DomainError("star:j needs j >= 1")
        return cls(j + 1, [(0, i) for i in range(1, j + 1)], name=f"star:{j}")

    @classmethod
    def cycle(cls, j: int) -> "Motif":
        if j < 3:
            raise DomainError("cycle:j needs j >= 3")
        return cls(j, [(i, (i + 1) % j) for i in range(j)], name=f"cycle:{j}")

    @classmethod
    def complete(cls, r: int) -> "Motif":
        if r < 2:
            raise DomainError("complete:r needs r >= 2")
        return cls(r, list(itertools.combinations(range(r), 2)), name=f"complete:{r}")

    @classmethod
    def parse(cls, spec: str) -> "Motif":
        """Parse a named builtin or an inline edge list.

        Accepted: ``edge``, ``triangle``, ``star:j``, ``cycle:j``,
        ``complete:r``, or ``edgelist:0-1,1-2,...`` (vertex count inferred).
        """
        spec = spec.strip()
        if spec == "edge":
            return cls.edge()
        if spec == "triangle":
            return cls.triangle()
        if ":" in spec:
            head, _, tail = spec.partition(":")
            if head in ("star", "cycle", "complete"):
                try:
                    arg = int(tail)
                except ValueError as exc:
                    raise FormatError(f"bad motif argument in {spec!r}") from exc
                return getattr(cls, head)(arg)
            if head == "edgelist":
                edges = []
                for part in tail.split(","):
                    a, _, b = part.partition("-")
                    try:
                        edges.append((int(a), int(b)))
                    except ValueError as exc:
                        raise FormatError(f"bad edge {part!r} in {spec!r}") from exc
                nv = 1 + max(max(e) for e in edges)
                return cls(nv, edges, name=spec)
        raise FormatError(f"unknown motif {spec!r}")

    def neighbor_lists(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def degree_sequence(self) -> list[int]:
        return sorted(len(x) for x in self.neighbor_lists())

    def __eq__(self, other):
        return (
            isinstance(other, Motif)
            and self.vertex_count == other.vertex_count
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.vertex_count, self.edges))

    def __repr__(self):
        if self.name:
            return f"Motif({self.name})"
        return f"Motif(v={self.vertex_count}, edges={list(self.edges)})"


# -- structural classification used for fast counting paths -----------------


def classify_motif(h: Motif) -> tuple:
    """Recognize the shapes with closed-form counts.

    Returns one of ("edge",), ("star", j), ("triangle",), ("cycle", j),
    ("complete", r), or ("general",). Isolated vertices only scale counts by
    powers of n and are folded into the classification.
    """
    degs = [len(x) for x in h.neighbor_lists()]
    active = [d for d in degs if d > 0]
    e = h.edge_count
    if e == 1:
        return ("edge",)
    k = len(active)
    if sorted(active) == [1] * (k - 1) + [k - 1] and e == k - 1:
        return ("star", k - 1)
    if k == 3 and e == 3:
        return ("triangle",)
    if all(d == 2 for d in active) and e == k and _is_single_cycle(h):
        return ("cycle", k)
    if e == k * (k - 1) // 2 and all(d == k - 1 for d in active):
        return ("complete", k)
    return ("general",)


def _is_single_cycle(h: Motif) -> bool:
    nbrs = h.neighbor_lists()
    start = next(i for i in range(h.vertex_count) if nbrs[i])
    if len(nbrs[start]) != 2:
        return False
    prev, cur = start, nbrs[start][0]
    seen = {start}
    count = 1
    while cur != start:
        if cur in seen:
            return False
        seen.add(cur)
        nxt = [x for x in nbrs[cur] if x != prev]
        if len(nxt) != 1:
            return False
        prev, cur = cur, nxt[0]
        count += 1
    return count == h.edge_count


# -- homomorphism counting ---------------------------------------------------


def count_homomorphisms(h: Motif, g: Graph) -> int:
    """Number of maps V(H) -> V(G) sending every edge of H to an edge of G.

    Exact brute force with pruning on partial assignments; the guard refuses
    instances with |V(G)|^|V(H)| above 10^9.
    """
    if g.n**h.vertex_count > HOM_MAP_GUARD:
        raise InstanceTooLargeError(
            f"instance too large: |V(G)|^|V(H)| = {g.n}^{h.vertex_count} "
            f"exceeds the {HOM_MAP_GUARD} map guard"
        )
    n = g.n
    nbrs = h.neighbor_lists()
    # assign high-degree vertices first, and prefer vertices with an
    # already-assigned neighbor, so pruning bites early
    order: list[int] = []
    remaining = set(range(h.vertex_count))
    while remaining:
        anchored = [v for v in remaining if any(u in order for u in nbrs[v])]
        pool = anchored if anchored else list(remaining)
        v = max(pool, key=lambda x: len(nbrs[x]))
        order.append(v)
        remaining.remove(v)
    back_nbrs = []
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        back_nbrs.append([pos[u] for u in nbrs[v] if pos[u] < pos[v]])
    full = (1 << n) - 1
    rows = g.rows
    images = [0] * len(order)

    def rec(depth: int) -> int:
        cand = full
        for b in back_nbrs[depth]:
            cand &= rows[images[b]]
            if not cand:
                return 0
        if depth == len(order) - 1:
            return cand.bit_count()
        total = 0
        c = cand
        while c:
            v = (c & -c).bit_length() - 1
            c &= c - 1
            images[depth] = v
            total += rec(depth + 1)
        return total

    return rec(0)


def hom_count_fast(h: Motif, g: Graph) -> int:
    """Homomorphism count using a closed form when the shape allows one."""
    kind = classify_motif(h)
    iso = h.vertex_count - sum(1 for x in h.neighbor_lists() if x)
    scale = g.n**iso
    if kind[0] == "edge":
        return 2 * g.edge_count() * scale
    if kind[0] == "star":
        return sum(d ** kind[1] for d in g.degrees()) * scale
    if kind[0] == "triangle":
        return 6 * g.triangle_count() * scale
    if kind[0] == "cycle":
        import numpy as np

        a = g.adjacency_matrix()
        return round(float(np.trace(np.linalg.matrix_power(a, kind[1])))) * scale
    if kind[0] == "complete":
        return _ordered_clique_count(g, kind[1]) * scale
    return count_homomorphisms(h, g)


def _ordered_clique_count(g: Graph, r: int) -> int:
    rows = g.rows
    full = (1 << g.n) - 1

    def rec(cand: int, depth: int) -> int:
        if depth == r:
            return 1
        total = 0
        c = cand
        while c:
            v = (c & -c).bit_length() - 1
            c &= c - 1
            total += rec(cand & rows[v], depth + 1)
        return total

    count = rec(full, 0)
    return count


def hom_density_graph(h: Motif, g: Graph) -> float:
    """Probability that a uniformly random map V(H) -> V(G) is a homomorphism."""
    return count_homomorphisms(h, g) / g.n**h.vertex_count


def hom_density_graph_fast(h: Motif, g: Graph) -> float:
    return hom_count_fast(h, g) / g.n**h.vertex_count


# -- chromatic number --------------------------------------------------------


def chromatic_number(h: Motif) -> int:
    """Exact chromatic number by branch and bound with a clique lower bound."""
    if h.vertex_count > CHROMATIC_VERTEX_GUARD:
        raise InstanceTooLargeError(
            f"instance too large: chromatic number supports at most "
            f"{CHROMATIC_VERTEX_GUARD} vertices, got {h.vertex_count}"
        )
    nbrs = h.neighbor_lists()
    verts = [v for v in range(h.vertex_count) if nbrs[v]]
    if not verts:
        return 1

    clique = _greedy_clique(nbrs, verts)
    lower = len(clique)
    order = sorted(verts, key=lambda v: -len(nbrs[v]))
    upper = _greedy_coloring_size(nbrs, order)
    for k in range(lower, upper):
        if _colorable(nbrs, order, k):
            return k
    return upper


def _greedy_clique(nbrs, verts):
    best: list[int] = []
    for start in verts:
        clique = [start]
        cand = set(nbrs[start])
        while cand:
            v = max(cand, key=lambda x: len(cand & set(nbrs[x])))
            clique.append(v)
            cand &= set(nbrs[v])
        if len(clique) > len(best):
            best = clique
    return best


def _greedy_coloring_size(nbrs, order):
    colors: dict[int, int] = {}
    for v in order:
        used = {colors[u] for u in nbrs[v] if u in colors}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return 1 + max(colors.values())


def _colorable(nbrs, order, k):
    colors: dict[int, int] = {}

    def rec(idx):
        if idx == len(order):
            return True
        v = order[idx]
        used = {colors[u] for u in nbrs[v] if u in colors}
        cap = min(k, 1 + (max(colors.values()) + 1 if colors else 0))
        for c in range(cap):
            if c in used:
                continue
            colors[v] = c
            if rec(idx + 1):
                return True
            del colors[v]
        return False

    return rec(0)
