"""Incidence matrices and the band decomposition forced by a primitive weight-19 word.

A projective plane of order n has a v x v incidence matrix (v = n^2 + n + 1)
in which every row and column has n + 1 ones and every pair of distinct
rows (or columns) shares exactly one position.  For order 10, a primitive
weight-19 codeword splits the 111 x 111 matrix into row bands of 6/37/68
rows and column bands of 19/92 columns (submatrices A1..A5).  Row sums per
band are 5/3/1 on the left and 6/8/10 on the right; a left column whose
first six rows carry k ones has 9-2k ones in the middle band and k+2 in the
bottom band, while a right column has 4-2k and k+7.
"""

from __future__ import annotations

from dataclasses import dataclass


class InfeasibleCaseError(ValueError):
    """A band completion is inconsistent with the required column sums."""


@dataclass(frozen=True)
class BinaryMatrix:
    """Immutable 0/1 matrix.

    Rows are stored as integers with column 0 in the most significant bit,
    so integer comparison of two rows equals lexicographic comparison of
    the corresponding bit strings.
    """

    rows: int
    cols: int
    row_bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.row_bits) != self.rows:
            raise ValueError("row count does not match row data")
        limit = 1 << self.cols
        for bits in self.row_bits:
            if not 0 <= bits < limit:
                raise ValueError("row value out of range for column count")

    @classmethod
    def from_rows(cls, rows, cols=None):
        """Build from an iterable of rows ('0101', [0,1,0,1] or int masks)."""
        converted = []
        width = cols
        for row in rows:
            if isinstance(row, str):
                bits = int(row, 2) if row else 0
                w = len(row)
            elif isinstance(row, int):
                if width is None:
                    raise ValueError("integer rows require an explicit column count")
                bits, w = row, width
            else:
                cells = list(row)
                if any(c not in (0, 1) for c in cells):
                    raise ValueError("cells must be 0 or 1")
                bits = 0
                for c in cells:
                    bits = (bits << 1) | c
                w = len(cells)
            if width is None:
                width = w
            elif w != width and not isinstance(row, int):
                raise ValueError("ragged rows")
            converted.append(bits)
        if width is None:
            raise ValueError("empty matrix needs an explicit column count")
        return cls(len(converted), width, tuple(converted))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, (0,) * rows)

    def get(self, i, j):
        return (self.row_bits[i] >> (self.cols - 1 - j)) & 1

    def row_tuple(self, i):
        return tuple((self.row_bits[i] >> (self.cols - 1 - j)) & 1 for j in range(self.cols))

    def row_string(self, i):
        return format(self.row_bits[i], "0%db" % self.cols)

    def to_row_strings(self):
        return [self.row_string(i) for i in range(self.rows)]

    def row_sum(self, i):
        return self.row_bits[i].bit_count()

    def row_sums(self):
        return [bits.bit_count() for bits in self.row_bits]

    def col_sum(self, j):
        mask = 1 << (self.cols - 1 - j)
        return sum(1 for bits in self.row_bits if bits & mask)

    def col_sums(self):
        sums = [0] * self.cols
        for bits in self.row_bits:
            j = self.cols - 1
            while bits:
                if bits & 1:
                    sums[j] += 1
                bits >>= 1
                j -= 1
        return sums

    def column_support(self, j):
        """Row indices carrying a one in column j."""
        mask = 1 << (self.cols - 1 - j)
        return [i for i, bits in enumerate(self.row_bits) if bits & mask]

    def row_support(self, i):
        bits = self.row_bits[i]
        return [j for j in range(self.cols) if bits & (1 << (self.cols - 1 - j))]

    def transpose(self):
        out = []
        for j in range(self.cols):
            mask = 1 << (self.cols - 1 - j)
            bits = 0
            for row in self.row_bits:
                bits = (bits << 1) | (1 if row & mask else 0)
            out.append(bits)
        return BinaryMatrix(self.cols, self.rows, tuple(out))

    def stack(self, other):
        if other.cols != self.cols:
            raise ValueError("column mismatch in stack")
        return BinaryMatrix(self.rows + other.rows, self.cols, self.row_bits + other.row_bits)

    def permuted(self, row_perm=None, col_perm=None):
        """Apply permutations: entry (i, j) of the result is entry
        (row_perm[i], col_perm[j]) of the source (identity when omitted)."""
        rp = row_perm if row_perm is not None else range(self.rows)
        if col_perm is None:
            rows = [self.row_bits[i] for i in rp]
        else:
            rows = []
            for i in rp:
                bits = 0
                for j in col_perm:
                    bits = (bits << 1) | self.get(i, j)
                rows.append(bits)
        return BinaryMatrix(self.rows, self.cols, tuple(rows))

    def sorted_rows(self, descending=True):
        return BinaryMatrix(self.rows, self.cols,
                            tuple(sorted(self.row_bits, reverse=descending)))


def intersections(a: int, b: int) -> int:
    """Number of shared one-positions of two row masks."""
    return (a & b).bit_count()


@dataclass(frozen=True)
class PlaneParams:
    order: int
    side: int
    line_size: int

    @classmethod
    def for_order(cls, order):
        if order < 1:
            raise ValueError("order must be positive")
        return cls(order, order * order + order + 1, order + 1)


@dataclass(frozen=True)
class AxiomReport:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self):
        return self.ok


def verify_plane_axioms(m: BinaryMatrix, params: PlaneParams) -> AxiomReport:
    """Check the projective plane axioms on an incidence matrix.

    Every row and column sum must equal n+1 and every pair of distinct rows
    (and columns) must share exactly one position.
    """
    if m.rows != params.side or m.cols != params.side:
        raise ValueError("matrix is not %d x %d" % (params.side, params.side))
    bad = []
    for i, s in enumerate(m.row_sums()):
        if s != params.line_size:
            bad.append("row-sum row=%d got=%d want=%d" % (i + 1, s, params.line_size))
    for j, s in enumerate(m.col_sums()):
        if s != params.line_size:
            bad.append("col-sum col=%d got=%d want=%d" % (j + 1, s, params.line_size))
    for axis, mat in (("rows", m), ("cols", m.transpose())):
        for i in range(mat.rows):
            for i2 in range(i + 1, mat.rows):
                hits = intersections(mat.row_bits[i], mat.row_bits[i2])
                if hits != 1:
                    bad.append("%s %d,%d intersect %d times" % (axis, i + 1, i2 + 1, hits))
    return AxiomReport(not bad, tuple(bad))


# --- weight-19 band decomposition -------------------------------------------

A1_ROWS, A2_ROWS, A3_ROWS = 6, 37, 68
LEFT_COLS, RIGHT_COLS = 19, 92
TOTAL_ROWS = A1_ROWS + A2_ROWS + A3_ROWS
TOTAL_COLS = LEFT_COLS + RIGHT_COLS


def validate_a1(a1: BinaryMatrix):
    """Sanity checks on an A1 band (6 x 19, row sums 5, pairwise <= 1)."""
    if (a1.rows, a1.cols) != (A1_ROWS, LEFT_COLS):
        raise ValueError("A1 must be 6 x 19")
    if a1.row_sums() != [5] * A1_ROWS:
        raise ValueError("A1 rows must each contain five ones")
    for i in range(A1_ROWS):
        for i2 in range(i + 1, A1_ROWS):
            if intersections(a1.row_bits[i], a1.row_bits[i2]) > 1:
                raise ValueError("A1 rows %d,%d intersect more than once" % (i + 1, i2 + 1))


def k_profile(a1: BinaryMatrix):
    """Per-column count of ones among the first six rows.

    A left-band column admits k up to 4 (its middle-band sum 9-2k must stay
    nonnegative); the right band caps k at 2.
    """
    ks = a1.col_sums()
    for j, k in enumerate(ks):
        if 9 - 2 * k < 0:
            raise InfeasibleCaseError("column %d has %d ones in the top band" % (j + 1, k))
    return tuple(ks)


def a2_column_targets(a1: BinaryMatrix):
    """Required number of ones of each left column within the 37 middle rows."""
    return tuple(9 - 2 * k for k in k_profile(a1))


def complete_a3(a1: BinaryMatrix, a2: BinaryMatrix) -> BinaryMatrix:
    """The unique bottom-left band: weight-1 rows in lexicographic order.

    Column j must end up with k_j + 2 ones among the 68 bottom rows, so A3
    consists of k_j + 2 copies of the unit row for each column, emitted in
    column order (which is descending lex order of the rows).
    """
    validate_a1(a1)
    if (a2.rows, a2.cols) != (A2_ROWS, LEFT_COLS):
        raise ValueError("A2 must be 37 x 19")
    targets = a2_column_targets(a1)
    for j, (got, want) in enumerate(zip(a2.col_sums(), targets)):
        if got > want:
            raise InfeasibleCaseError(
                "column %d holds %d ones in the middle band, target %d" % (j + 1, got, want))
        if got < want:
            raise InfeasibleCaseError(
                "column %d cannot reach its sum with weight-1 bottom rows" % (j + 1))
    return a3_for_profile(k_profile(a1))


def a3_for_profile(ks) -> BinaryMatrix:
    rows = []
    for j, k in enumerate(ks):
        unit = 1 << (LEFT_COLS - 1 - j)
        rows.extend([unit] * (k + 2))
    if len(rows) != A3_ROWS:
        raise InfeasibleCaseError("bottom band needs %d rows, profile gives %d"
                                  % (A3_ROWS, len(rows)))
    return BinaryMatrix(A3_ROWS, LEFT_COLS, tuple(rows))


OUTSIDE = frozenset()


def complete_a4(a1: BinaryMatrix):
    """The unique top-right band, plus each column's block membership.

    Any two of the six top rows intersect exactly once in the full matrix;
    pairs that miss each other in the first 19 columns get one shared
    column here (column sum 2).  Those pair columns come first, ordered by
    (i, i'); then each row's remaining ones as weight-1 columns grouped by
    row; finally the all-zero columns.  Block i is the set of columns with
    a one in row i, and zero columns are outside every block.

    Returns (a4, block_of) where block_of[c] is a frozenset of the rows
    (0-based) incident to column c, empty for outside columns.
    """
    validate_a1(a1)
    pairs = []
    for i in range(A1_ROWS):
        for i2 in range(i + 1, A1_ROWS):
            if intersections(a1.row_bits[i], a1.row_bits[i2]) == 0:
                pairs.append((i, i2))
    cols = []
    block_of = []
    for i, i2 in pairs:
        cols.append(frozenset((i, i2)))
        block_of.append(frozenset((i, i2)))
    degree = [sum(1 for p in pairs if i in p) for i in range(A1_ROWS)]
    for i in range(A1_ROWS):
        for _ in range(A1_ROWS - degree[i]):
            cols.append(frozenset((i,)))
            block_of.append(frozenset((i,)))
    while len(cols) < RIGHT_COLS:
        cols.append(OUTSIDE)
        block_of.append(OUTSIDE)
    if len(cols) != RIGHT_COLS:
        raise InfeasibleCaseError("top-right band does not fit in 92 columns")
    rows = []
    for i in range(A1_ROWS):
        bits = 0
        for members in cols:
            bits = (bits << 1) | (1 if i in members else 0)
        rows.append(bits)
    a4 = BinaryMatrix(A1_ROWS, RIGHT_COLS, tuple(rows))
    if a4.row_sums() != [A1_ROWS] * A1_ROWS:
        raise InfeasibleCaseError("top-right band row sums must all be six")
    return a4, tuple(block_of)


def intersection_graph_edges(a1: BinaryMatrix):
    """Pairs of top rows that do NOT meet inside the first 19 columns.

    These are exactly the pairs joined by a column-sum-2 column of the
    top-right band ("blocks i and i' intersect").
    """
    edges = []
    for i in range(A1_ROWS):
        for i2 in range(i + 1, A1_ROWS):
            if intersections(a1.row_bits[i], a1.row_bits[i2]) == 0:
                edges.append((i, i2))
    return edges


def has_weight16_triangle(a1: BinaryMatrix) -> bool:
    """True when three top rows pairwise miss each other in the left band.

    Adding such a triple (mod 2) to the weight-19 word produces a weight-16
    word, which is excluded by earlier searches; cases with this structure
    are dropped from the main search.
    """
    edges = set(intersection_graph_edges(a1))
    for a in range(A1_ROWS):
        for b in range(a + 1, A1_ROWS):
            if (a, b) not in edges:
                continue
            for c in range(b + 1, A1_ROWS):
                if (a, c) in edges and (b, c) in edges:
                    return True
    return False


@dataclass(frozen=True)
class AssemblyContext:
    """Known ones of a partially fixed assembly, indexed both ways.

    columns_known maps a column id to the row ids holding its fixed ones;
    rows_known does the same for fixed rows.  Both refer to the same fixed
    region and stay consistent by construction.
    """

    columns_known: dict
    rows_known: dict

    @classmethod
    def from_fixed_cells(cls, ones, columns=None, rows=None):
        """Build from an iterable of fixed (row, col) one-cells."""
        cols_map, rows_map = {}, {}
        for r, c in ones:
            cols_map.setdefault(c, set()).add(r)
            rows_map.setdefault(r, set()).add(c)
        if columns is not None:
            cols_map = {c: cols_map.get(c, set()) for c in columns}
        if rows is not None:
            rows_map = {r: rows_map.get(r, set()) for r in rows}
        return cls({c: frozenset(v) for c, v in cols_map.items()},
                   {r: frozenset(v) for r, v in rows_map.items()})
