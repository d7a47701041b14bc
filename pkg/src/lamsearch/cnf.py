"""CNF construction: cell-variable bookkeeping and every clause family used
by the search instances.

Variable numbering is fixed for certificate replay: cell variables first,
row-major over the instance's assembly region, then auxiliary variables in
creation order.  Fixed cells become unit clauses instead of being
substituted away, so proofs always refer to the same variable universe.
Clauses that a fixed cell already satisfies are still emitted unless the
instance was created with prune_fixed=True.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class EncodingError(ValueError):
    pass


# clause origin tags
QUADRUPLE = "quadruple"
CARDINALITY = "cardinality"
LEX_GENERIC = "lexGeneric"
LEX_SPECIAL_ROW = "lexSpecialRow"
LEX_SPECIAL_COL = "lexSpecialCol"
INCIDENCE_ROW = "incidenceRow"
INCIDENCE_COL = "incidenceCol"
BLOCKING = "blocking"
UNIT_FIX = "unitFix"

ORIGIN_TAGS = (QUADRUPLE, CARDINALITY, LEX_GENERIC, LEX_SPECIAL_ROW,
               LEX_SPECIAL_COL, INCIDENCE_ROW, INCIDENCE_COL, BLOCKING, UNIT_FIX)


@dataclass
class Region:
    """Rectangular assembly region whose cells carry the low variable ids."""

    rows: tuple
    cols: tuple
    block_of: dict = field(default_factory=dict)  # col id -> block label, optional

    def __post_init__(self):
        self.var_of = {}
        v = 1
        for r in self.rows:
            for c in self.cols:
                self.var_of[(r, c)] = v
                v += 1
        self.cell_of = {v: rc for rc, v in self.var_of.items()}

    @property
    def cell_count(self):
        return len(self.var_of)


class Cnf:
    def __init__(self, region: Region, prune_fixed=False):
        self.region = region
        self.var_count = region.cell_count
        self.clauses = []
        self.origins = []
        self.aux_vars = []
        self.fixed = {}  # var -> bool, from unit fixes
        self.prune_fixed = prune_fixed

    # -- variables ------------------------------------------------------

    def cell(self, row, col):
        try:
            return self.region.var_of[(row, col)]
        except KeyError:
            raise EncodingError("cell (%s, %s) is not in the region" % (row, col))

    def new_aux(self):
        self.var_count += 1
        self.aux_vars.append(self.var_count)
        return self.var_count

    def is_cell_var(self, var):
        return var in self.region.cell_of

    # -- clause plumbing --------------------------------------------------

    def add_clause(self, lits, origin):
        lits = tuple(lits)
        if not lits:
            raise EncodingError("attempted to add an empty clause")
        seen = set()
        for lit in lits:
            if lit == 0 or abs(lit) > self.var_count:
                raise EncodingError("literal %d out of range" % lit)
            if -lit in seen:
                raise EncodingError("clause contains complementary literals")
            seen.add(lit)
        self.clauses.append(lits)
        self.origins.append(origin)
        return lits

    def _fixed_value(self, lit):
        """True/False when the literal's value follows from a unit fix."""
        val = self.fixed.get(abs(lit))
        if val is None:
            return None
        return val if lit > 0 else not val

    def _emit_unless_pruned(self, lits, origin):
        values = [self._fixed_value(l) for l in lits]
        if all(v is False for v in values):
            raise EncodingError("clause is falsified by fixed cells")
        if self.prune_fixed and any(v is True for v in values):
            return False
        self.add_clause(lits, origin)
        return True

    def add_unit_fix(self, row, col, value):
        var = self.cell(row, col)
        prior = self.fixed.get(var)
        if prior is not None:
            if prior != bool(value):
                raise EncodingError("conflicting unit fix for cell (%s, %s)" % (row, col))
            return var
        self.fixed[var] = bool(value)
        self.add_clause((var if value else -var,), UNIT_FIX)
        return var

    def fix_matrix(self, matrix, rows, cols):
        """Unit-fix a rectangular block of cells from a BinaryMatrix."""
        for mi, r in enumerate(rows):
            for mj, c in enumerate(cols):
                self.add_unit_fix(r, c, matrix.get(mi, mj))

    # -- clause families --------------------------------------------------

    def add_quadruple_clauses(self, row_set, col_set):
        """Forbid any two rows from sharing ones in two columns.

        For every i < i' and j < j' adds
        (~a[i,j] | ~a[i,j'] | ~a[i',j] | ~a[i',j']).
        """
        rows = list(row_set)
        cols = list(col_set)
        added = 0
        for x in range(len(rows)):
            for y in range(x + 1, len(rows)):
                i, i2 = rows[x], rows[y]
                for u in range(len(cols)):
                    for w in range(u + 1, len(cols)):
                        j, j2 = cols[u], cols[w]
                        lits = (-self.cell(i, j), -self.cell(i, j2),
                                -self.cell(i2, j), -self.cell(i2, j2))
                        if self._emit_unless_pruned(lits, QUADRUPLE):
                            added += 1
        return added

    def add_exactly_k(self, var_list, k):
        """Sequential-counter ladder forcing exactly k of var_list true.

        Register r[i][j] holds "at least j of the first i variables are
        true"; both implication directions are encoded so the auxiliaries
        are functionally determined by the cells.
        """
        xs = list(var_list)
        n = len(xs)
        if not 0 <= k <= n:
            raise EncodingError("cardinality %d out of range for %d variables" % (k, n))
        if k == 0:
            for x in xs:
                self.add_clause((-x,), CARDINALITY)
            return []
        if k == n:
            for x in xs:
                self.add_clause((x,), CARDINALITY)
            return []
        width = k + 1  # track counts up to k+1 to forbid overshoot
        reg = [[None] * (width + 1) for _ in range(n + 1)]
        aux = []
        for i in range(1, n + 1):
            for j in range(1, min(i, width) + 1):
                reg[i][j] = self.new_aux()
                aux.append(reg[i][j])
        for i in range(1, n + 1):
            x = xs[i - 1]
            for j in range(1, min(i, width) + 1):
                s = reg[i][j]
                below = reg[i - 1][j] if j <= i - 1 else None
                diag = reg[i - 1][j - 1] if j - 1 >= 1 else None
                # up: carry and increment
                if below is not None:
                    self.add_clause((-below, s), CARDINALITY)
                if j == 1:
                    self.add_clause((-x, s), CARDINALITY)
                elif diag is not None:
                    self.add_clause((-x, -diag, s), CARDINALITY)
                # down: s must be justified
                just = [-s]
                if below is not None:
                    just.append(below)
                if j == 1:
                    just.append(x)
                    self.add_clause(tuple(just), CARDINALITY)
                else:
                    if diag is None:
                        # j == i: all of the first i variables are true
                        self.add_clause(tuple(just + [x]), CARDINALITY)
                    else:
                        self.add_clause(tuple(just + [x]), CARDINALITY)
                        self.add_clause(tuple(just + [diag]), CARDINALITY)
        self.add_clause((reg[n][k],), CARDINALITY)
        if width <= n:
            self.add_clause((-reg[n][width],), CARDINALITY)
        return aux

    def add_at_most_k(self, var_list, k):
        """Sequential-counter upper bound (used for partial column caps)."""
        xs = list(var_list)
        n = len(xs)
        if k < 0:
            raise EncodingError("negative cardinality bound")
        if k >= n:
            return []
        if k == 0:
            for x in xs:
                self.add_clause((-x,), CARDINALITY)
            return []
        reg = [[None] * (k + 1) for _ in range(n + 1)]
        aux = []
        for i in range(1, n):
            for j in range(1, min(i, k) + 1):
                reg[i][j] = self.new_aux()
                aux.append(reg[i][j])
        for i in range(1, n + 1):
            x = xs[i - 1]
            if i < n:
                self.add_clause((-x, reg[i][1]), CARDINALITY)
                if i > 1:
                    for j in range(1, min(i - 1, k) + 1):
                        self.add_clause((-reg[i - 1][j], reg[i][j]), CARDINALITY)
                    for j in range(2, min(i, k) + 1):
                        if reg[i - 1][j - 1] is not None:
                            self.add_clause((-x, -reg[i - 1][j - 1], reg[i][j]), CARDINALITY)
            if i > 1 and reg[i - 1][k] is not None:
                self.add_clause((-x, -reg[i - 1][k]), CARDINALITY)
        return aux

    def add_lex_order(self, vector_a, vector_b):
        """Force vector_a >=lex vector_b via a chain of equality auxiliaries."""
        a = list(vector_a)
        b = list(vector_b)
        if len(a) != len(b):
            raise EncodingError("lex vectors must have equal length")
        if not a:
            return []
        n = len(a)
        aux = []
        prev = None  # e[t]: positions 1..t are pairwise equal
        for t in range(n):
            if prev is None:
                self.add_clause((a[t], -b[t]), LEX_GENERIC)
            else:
                self.add_clause((-prev, a[t], -b[t]), LEX_GENERIC)
            if t == n - 1:
                break
            e = self.new_aux()
            aux.append(e)
            if prev is None:
                self.add_clause((-e, -a[t], b[t]), LEX_GENERIC)
                self.add_clause((-e, a[t], -b[t]), LEX_GENERIC)
                self.add_clause((e, -a[t], -b[t]), LEX_GENERIC)
                self.add_clause((e, a[t], b[t]), LEX_GENERIC)
            else:
                self.add_clause((-e, prev), LEX_GENERIC)
                self.add_clause((-e, -a[t], b[t]), LEX_GENERIC)
                self.add_clause((-e, a[t], -b[t]), LEX_GENERIC)
                self.add_clause((e, -prev, -a[t], -b[t]), LEX_GENERIC)
                self.add_clause((e, -prev, a[t], b[t]), LEX_GENERIC)
            prev = e
        return aux

    def add_special_lex_column(self, col_j, col_next, row_range, origin=LEX_SPECIAL_COL):
        """Column ordering for adjacent same-block weight-1 columns.

        Such columns carry exactly two ones within row_range, so it is
        enough to forbid the successor column from holding a one above the
        predecessor's first one:
        (~a[i,j] | ~a[i',j] | ~a[i*,j+1]) for all i* < i' < i in row_range.
        """
        block_of = self.region.block_of
        if block_of:
            bj = block_of.get(col_j)
            bn = block_of.get(col_next)
            if bj is None or len(bj) != 1:
                raise EncodingError("column %s is not a single-block weight-1 column" % (col_j,))
            if bn != bj:
                raise EncodingError(
                    "column %s is the final column of its block" % (col_j,))
        rows = list(row_range)
        added = 0
        for x in range(len(rows)):
            for y in range(x + 1, len(rows)):
                for z in range(y + 1, len(rows)):
                    i_star, i_mid, i_top = rows[x], rows[y], rows[z]
                    self.add_clause((-self.cell(i_top, col_j),
                                     -self.cell(i_mid, col_j),
                                     -self.cell(i_star, col_next)), origin)
                    added += 1
        return added

    def add_special_lex_row(self, row_a, row_b, col_range):
        """Row ordering by leading zeros: if row_a has no one at or before a
        column then row_b has none there either."""
        cols = list(col_range)
        added = 0
        prefix = []
        for c in cols:
            prefix.append(self.cell(row_a, c))
            self.add_clause(tuple(prefix) + (-self.cell(row_b, c),), LEX_SPECIAL_ROW)
            added += 1
        return added

    def add_incidence_clauses(self, ctx, target_cols=(), target_rows=()):
        """Intersection requirements against the fixed part of the assembly.

        For every known column j (with fixed ones at rows C_j) and every
        target column c: (OR_{i in C_j} a[i,c]).  For every known block row
        i (fixed ones at columns R_i) and every target row r:
        (OR_{j in R_i} a[r,j]).
        """
        added = 0
        for j in sorted(ctx.columns_known):
            support = sorted(ctx.columns_known[j])
            if not support:
                raise EncodingError("known column %s has no fixed ones" % (j,))
            for c in sorted(target_cols):
                self.add_clause(tuple(self.cell(i, c) for i in support), INCIDENCE_COL)
                added += 1
        for i in sorted(ctx.rows_known):
            support = sorted(ctx.rows_known[i])
            if not support:
                raise EncodingError("known row %s has no fixed ones" % (i,))
            for r in sorted(target_rows):
                self.add_clause(tuple(self.cell(r, j) for j in support), INCIDENCE_ROW)
                added += 1
        return added

    def add_blocking_clause(self, true_vars):
        """Exclude an assignment by negating its true cell variables."""
        lits = tuple(-v for v in sorted(set(true_vars)))
        if not lits:
            raise EncodingError("blocking an all-zero assignment would add the empty clause")
        for lit in lits:
            if -lit not in self.region.cell_of:
                raise EncodingError("blocking clauses may only mention cell variables")
        return self.add_clause(lits, BLOCKING)

    # -- serialization ----------------------------------------------------

    def emit_dimacs(self, sink):
        """Standard DIMACS text; returns the byte count written."""
        if not self.clauses:
            raise EncodingError("refusing to emit an empty instance")
        count = 0
        count += sink.write("p cnf %d %d\n" % (self.var_count, len(self.clauses)))
        for clause in self.clauses:
            count += sink.write(" ".join(str(l) for l in clause) + " 0\n")
        return count

    def emit_tags(self, sink):
        for tag in self.origins:
            sink.write(tag + "\n")

    def dimacs_string(self):
        import io

        buf = io.StringIO()
        self.emit_dimacs(buf)
        return buf.getvalue()


def parse_dimacs(text):
    """Parse DIMACS text into (num_vars, clauses)."""
    num_vars = None
    num_clauses = None
    clauses = []
    pending = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError("malformed DIMACS header: %r" % line)
            num_vars, num_clauses = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if pending:
        raise ValueError("trailing literals without 0 terminator")
    if num_vars is None:
        raise ValueError("missing DIMACS header")
    if num_clauses is not None and num_clauses != len(clauses):
        raise ValueError("header clause count %d != %d parsed" % (num_clauses, len(clauses)))
    return num_vars, clauses
