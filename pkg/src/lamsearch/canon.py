"""Canonical labeling of incidence assemblies: color refinement with
individualization, canonical certificates, isomorphism witnesses, and
symmetry-group extraction.

The canonical form of a vertex-colored graph is the lexicographically
least adjacency encoding over all leaves of the individualization-
refinement tree.  Initial colors encode the band structure of the
assembly (fixed top rows, open middle rows, columns), so only
symmetry-admissible permutations can relate two assemblies.  The search
also collects the automorphisms it stumbles on (two leaves with equal
encodings), which yields the full symmetry group of a matrix without any
external library.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matrices import BinaryMatrix


class IntegrityError(RuntimeError):
    """A certificate collision that no explicit isomorphism can justify."""


@dataclass(frozen=True)
class Bands:
    """Band structure: groups of interchangeable rows and columns."""

    row_bands: tuple
    col_bands: tuple

    @classmethod
    def single(cls, rows, cols):
        return cls((tuple(range(rows)),), (tuple(range(cols)),))

    @classmethod
    def stacked(cls, fixed_rows, open_rows, cols):
        return cls((tuple(range(fixed_rows)),
                    tuple(range(fixed_rows, fixed_rows + open_rows))),
                   (tuple(range(cols)),))


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    adj: tuple            # tuple of sorted neighbor tuples
    colors: tuple         # initial color id per vertex

    def degree_ok(self):
        return all(all(0 <= u < self.n for u in nb) for nb in self.adj)


@dataclass(frozen=True)
class CanonicalCertificate:
    data: bytes

    def hex(self):
        return self.data.hex()

    @classmethod
    def from_hex(cls, text):
        return cls(bytes.fromhex(text))


@dataclass(frozen=True)
class IsoWitness:
    """Permutation pair mapping a source matrix onto a target matrix:
    target[row_perm[i], col_perm[j]] == source[i, j]."""

    row_perm: tuple
    col_perm: tuple


@dataclass(frozen=True)
class SymmetryGroup:
    generators: tuple     # IsoWitness generators, each fixing the matrix
    order: int


def build_incidence_graph(matrix: BinaryMatrix, bands: Bands) -> LabeledGraph:
    """Vertex per row and per column, an edge per one-cell; colors split
    rows from columns and distinguish every band."""
    n = matrix.rows + matrix.cols
    adj = [[] for _ in range(n)]
    for i in range(matrix.rows):
        for j in matrix.row_support(i):
            adj[i].append(matrix.rows + j)
            adj[matrix.rows + j].append(i)
    colors = [0] * n
    next_color = 0
    seen = set()
    for band in bands.row_bands:
        for i in band:
            colors[i] = next_color
            seen.add(i)
        next_color += 1
    for band in bands.col_bands:
        for j in band:
            colors[matrix.rows + j] = next_color
            seen.add(matrix.rows + j)
        next_color += 1
    if len(seen) != n:
        raise ValueError("band structure does not cover the matrix")
    return LabeledGraph(n, tuple(tuple(sorted(a)) for a in adj), tuple(colors))


def refine_colors(adj, colors):
    """One-dimensional refinement to the coarsest stable partition.

    New color ids are assigned by sorting (old color, sorted neighbor
    colors) signatures, so the result is invariant under relabeling.
    """
    n = len(colors)
    colors = list(colors)
    num = len(set(colors))
    while True:
        sigs = []
        for v in range(n):
            nb = sorted(colors[u] for u in adj[v])
            sigs.append((colors[v], tuple(nb)))
        ordered = sorted(set(sigs))
        remap = {sig: i for i, sig in enumerate(ordered)}
        colors = [remap[sig] for sig in sigs]
        if len(ordered) == num:
            return tuple(colors)
        num = len(ordered)


def _leaf_encoding(adj, colors, n):
    """Adjacency rows under the discrete coloring, as comparable ints."""
    pos = colors  # discrete: color id == canonical position
    rows = [0] * n
    for v in range(n):
        p = pos[v]
        bits = 0
        for u in adj[v]:
            q = pos[u]
            if q > p:
                bits |= 1 << (n - 1 - q)
        rows[p] = bits
    return tuple(rows)


class _CanonSearch:
    def __init__(self, graph: LabeledGraph, want_automorphisms=False):
        self.g = graph
        self.adj = graph.adj
        self.n = graph.n
        self.best = None
        self.best_pos = None
        self.first = None
        self.first_pos = None
        self.autos = []
        self.want_autos = want_automorphisms
        self.leaves = 0

    def run(self):
        start = refine_colors(self.adj, self.g.colors)
        self._descend(start)
        return self

    def _descend(self, colors):
        target = None
        classes = {}
        for v, c in enumerate(colors):
            classes.setdefault(c, []).append(v)
        for c in sorted(classes):
            if len(classes[c]) > 1:
                target = classes[c]
                break
        if target is None:
            self._leaf(colors)
            return
        for v in target:
            nc = [2 * c + 1 for c in colors]
            nc[v] = 2 * colors[v]
            self._descend(refine_colors(self.adj, nc))

    def _leaf(self, colors):
        self.leaves += 1
        enc = _leaf_encoding(self.adj, colors, self.n)
        if self.first is None:
            self.first = enc
            self.first_pos = colors
        elif self.want_autos and enc == self.first:
            # two leaves with equal encodings compose to an automorphism
            vertex_at = [0] * self.n
            for v, p in enumerate(colors):
                vertex_at[p] = v
            perm = tuple(vertex_at[p] for p in self.first_pos)
            self.autos.append(perm)
        if self.best is None or enc < self.best:
            self.best = enc
            self.best_pos = colors


def canonical_form(graph: LabeledGraph):
    """Canonical certificate and labeling (vertex -> canonical position)."""
    search = _CanonSearch(graph).run()
    cert = _certificate_bytes(graph, search.best)
    return cert, tuple(search.best_pos)


def _certificate_bytes(graph, encoding):
    sizes = {}
    for c in graph.colors:
        sizes[c] = sizes.get(c, 0) + 1
    size_vec = [sizes[c] for c in sorted(sizes)]
    head = bytes([len(size_vec)]) + b"".join(s.to_bytes(2, "big") for s in size_vec)
    n = graph.n
    body = b"".join(row.to_bytes((n + 7) // 8, "big") for row in encoding)
    return CanonicalCertificate(head + body)


def graph_certificate(matrix: BinaryMatrix, bands: Bands):
    return canonical_form(build_incidence_graph(matrix, bands))[0]


def _split_perm(perm, rows):
    """Vertex permutation -> (row_perm, col_perm); rows must map to rows."""
    n = len(perm)
    row_perm = []
    col_perm = []
    for v in range(rows):
        if perm[v] >= rows:
            raise IntegrityError("labeling maps a row vertex onto a column vertex")
        row_perm.append(perm[v])
    for v in range(rows, n):
        if perm[v] < rows:
            raise IntegrityError("labeling maps a column vertex onto a row vertex")
        col_perm.append(perm[v] - rows)
    return tuple(row_perm), tuple(col_perm)


def apply_witness(witness: IsoWitness, matrix: BinaryMatrix) -> BinaryMatrix:
    """Scatter rows and columns: result[rp[i], cp[j]] = matrix[i, j]."""
    rows = [0] * matrix.rows
    for i in range(matrix.rows):
        bits = 0
        target_row = [0] * matrix.cols
        for j in matrix.row_support(i):
            target_row[witness.col_perm[j]] = 1
        for b in target_row:
            bits = (bits << 1) | b
        rows[witness.row_perm[i]] = bits
    return BinaryMatrix(matrix.rows, matrix.cols, tuple(rows))


def resort_band_rows(matrix: BinaryMatrix, bands: Bands) -> BinaryMatrix:
    """Sort rows descending within every band except the first (fixed)."""
    rows = list(matrix.row_bits)
    for idx, band in enumerate(bands.row_bands):
        if idx == 0 and len(bands.row_bands) > 1:
            continue
        chunk = sorted((rows[i] for i in band), reverse=True)
        for i, bits in zip(band, chunk):
            rows[i] = bits
    return BinaryMatrix(matrix.rows, matrix.cols, tuple(rows))


def isomorphism(a: BinaryMatrix, b: BinaryMatrix, bands: Bands):
    """An explicit witness mapping a onto b, or None when the canonical
    certificates differ.  The returned witness is verified before return."""
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError("matrices must share dimensions")
    ga = build_incidence_graph(a, bands)
    gb = build_incidence_graph(b, bands)
    cert_a, lab_a = canonical_form(ga)
    cert_b, lab_b = canonical_form(gb)
    if cert_a.data != cert_b.data:
        return None
    vertex_at_b = [0] * gb.n
    for v, p in enumerate(lab_b):
        vertex_at_b[p] = v
    perm = tuple(vertex_at_b[p] for p in lab_a)
    row_perm, col_perm = _split_perm(perm, a.rows)
    witness = IsoWitness(row_perm, col_perm)
    mapped = resort_band_rows(apply_witness(witness, a), bands)
    if mapped != resort_band_rows(b, bands):
        raise IntegrityError("certificate collision: witness does not map source to target")
    return witness


def witness_checks(witness: IsoWitness, source: BinaryMatrix,
                   target: BinaryMatrix, bands: Bands) -> bool:
    if sorted(witness.row_perm) != list(range(source.rows)):
        return False
    if sorted(witness.col_perm) != list(range(source.cols)):
        return False
    mapped = resort_band_rows(apply_witness(witness, source), bands)
    return mapped == resort_band_rows(target, bands)


def symmetry_group(matrix: BinaryMatrix, bands: Bands | None = None) -> SymmetryGroup:
    """Row and column permutations fixing every entry of the matrix.

    Runs the canonical search with automorphism collection, reduces the
    discovered permutations to a generating set, and verifies each
    generator really fixes the matrix.  The order is the size of the
    closure of the generators.
    """
    if bands is None:
        bands = Bands.single(matrix.rows, matrix.cols)
    graph = build_incidence_graph(matrix, bands)
    search = _CanonSearch(graph, want_automorphisms=True).run()
    witnesses = []
    for perm in search.autos:
        row_perm, col_perm = _split_perm(perm, matrix.rows)
        w = IsoWitness(row_perm, col_perm)
        if apply_witness(w, matrix) != matrix:
            raise IntegrityError("automorphism candidate does not fix the matrix")
        witnesses.append(w)
    generators = _reduce_generators(witnesses, matrix.rows, matrix.cols)
    order = _closure_order(generators, matrix.rows, matrix.cols)
    return SymmetryGroup(tuple(generators), order)


def _compose(p, q):
    """(p then q) as position maps: result[i] = q[p[i]]."""
    return tuple(q[x] for x in p)


def _closure(perms, rows, cols):
    ident = (tuple(range(rows)), tuple(range(cols)))
    frontier = [ident]
    seen = {ident}
    gens = [(w.row_perm, w.col_perm) for w in perms]
    while frontier:
        cur = frontier.pop()
        for g in gens:
            nxt = (_compose(cur[0], g[0]), _compose(cur[1], g[1]))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen

def _closure_order(perms, rows, cols):
    return len(_closure(perms, rows, cols))


def _reduce_generators(witnesses, rows, cols):
    chosen = []
    have = {(tuple(range(rows)), tuple(range(cols)))}
    for w in witnesses:
        key = (w.row_perm, w.col_perm)
        if key in have:
            continue
        chosen.append(w)
        have = _closure(chosen, rows, cols)
    return chosen


def group_elements(group: SymmetryGroup, rows, cols):
    return _closure(group.generators, rows, cols)


def matrix_orbit(group: SymmetryGroup, matrix: BinaryMatrix):
    """All matrices reachable by group column permutations, rows resorted.

    This is generator-based orbit search on matrices, so it never
    materializes the group itself.
    """
    col_parts = sorted({w.col_perm for w in group.generators})
    start = matrix.sorted_rows()
    seen = {start.row_bits: start}
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        for cp in col_parts:
            scattered_rows = []
            for i in range(cur.rows):
                target_row = [0] * cur.cols
                for j in cur.row_support(i):
                    target_row[cp[j]] = 1
                bits = 0
                for b in target_row:
                    bits = (bits << 1) | b
                scattered_rows.append(bits)
            nxt = BinaryMatrix(cur.rows, cur.cols,
                               tuple(sorted(scattered_rows, reverse=True)))
            if nxt.row_bits not in seen:
                seen[nxt.row_bits] = nxt
                frontier.append(nxt)
    return set(seen.values())


def apply_group_to_matrix(group: SymmetryGroup, matrix: BinaryMatrix):
    return matrix_orbit(group, matrix)
