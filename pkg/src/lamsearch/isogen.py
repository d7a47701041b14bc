"""Level-based recorded-objects generation of the middle band (A2).

The first five columns of an A2 are forced by the column sums and the
lexicographic row order, which splits the 37 rows into levels (rows
identical in those columns).  Generation proceeds level by level: every
recorded representative of the previous level is extended by all
completions of the next level, each completion is canonicalized, new
certificates are recorded, and repeats are discarded with an explicit
permutation witness onto their representative.  Isomorph removal happens
only at whole-level granularity; the final level then holds exactly one
representative per equivalence class of complete A2s.

enumerate_lex_only is the independent completeness oracle: a direct
combinatorial backtracking search over lexicographically sorted A2s with
no symmetry removal at all (and no SAT machinery).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import canon
from .canon import Bands, IntegrityError
from .cnf import Cnf, Region
from .matrices import A1_ROWS, A2_ROWS, LEFT_COLS, BinaryMatrix, a2_column_targets
from .solver import BLOCK_ONLY, RECORD_AND_BLOCK, CallbackDecision, solver_for_cnf


class MalformedCaseError(ValueError):
    pass


@dataclass(frozen=True)
class LevelPlan:
    sizes: tuple          # rows per level; the zero-pattern level is last
    fixed_columns: BinaryMatrix   # 37 x 5 forced pattern
    k_profile: tuple

    @property
    def level_count(self):
        return len(self.sizes)

    def rows_through(self, level):
        """Number of A2 rows in levels 1..level."""
        return sum(self.sizes[:level])

    def level_of_row(self, row_index):
        acc = 0
        for lvl, size in enumerate(self.sizes, start=1):
            acc += size
            if row_index < acc:
                return lvl
        raise IndexError(row_index)


def build_level_plan(a1: BinaryMatrix) -> LevelPlan:
    """Forced first five columns and the level split they induce."""
    top_row = a1.row_bits[0]
    expected = ((1 << 5) - 1) << (LEFT_COLS - 5)
    if top_row != expected:
        raise MalformedCaseError("top row of the case is not five ones then zeros")
    from .matrices import k_profile

    ks = k_profile(a1)
    sizes = [9 - 2 * ks[j] for j in range(5)]
    zero_rows = A2_ROWS - sum(sizes)
    if zero_rows < 0:
        raise MalformedCaseError("level sizes exceed the middle band")
    sizes.append(zero_rows)
    rows = []
    for j in range(5):
        pattern = 1 << (4 - j)
        rows.extend([pattern] * sizes[j])
    rows.extend([0] * zero_rows)
    return LevelPlan(tuple(sizes), BinaryMatrix(A2_ROWS, 5, tuple(rows)), ks)


# --- CNF construction -------------------------------------------------------


def build_a2_cnf(a1: BinaryMatrix, plan: LevelPlan, upto_level,
                 prune_fixed=False) -> Cnf:
    """Instance over the top band plus A2 levels 1..upto_level.

    Column sums are exact on the final level and upper bounds before it;
    everything else (pairwise intersections, row sums, forced pattern,
    in-level row ordering) is identical at every level.
    """
    if not 1 <= upto_level <= plan.level_count:
        raise MalformedCaseError("level %r out of range" % (upto_level,))
    n_rows = plan.rows_through(upto_level)
    rows = tuple(range(1, A1_ROWS + n_rows + 1))
    cols = tuple(range(1, LEFT_COLS + 1))
    cnf = Cnf(Region(rows, cols), prune_fixed=prune_fixed)
    cnf.fix_matrix(a1, rows=range(1, A1_ROWS + 1), cols=cols)
    for r in range(n_rows):
        row_id = A1_ROWS + 1 + r
        for j in range(5):
            cnf.add_unit_fix(row_id, j + 1, plan.fixed_columns.get(r, j))
    cnf.add_quadruple_clauses(rows, cols)
    for r in range(n_rows):
        row_id = A1_ROWS + 1 + r
        cnf.add_exactly_k([cnf.cell(row_id, c) for c in cols], 3)
    # in-level lexicographic order (descending); cross-level order follows
    # from the forced pattern
    for r in range(n_rows - 1):
        if plan.level_of_row(r) == plan.level_of_row(r + 1):
            cnf.add_lex_order([cnf.cell(A1_ROWS + 1 + r, c) for c in cols],
                              [cnf.cell(A1_ROWS + 2 + r, c) for c in cols])
    targets = a2_column_targets(a1)
    final = upto_level == plan.level_count
    for j in range(5, LEFT_COLS):
        cells = [cnf.cell(A1_ROWS + 1 + r, j + 1) for r in range(n_rows)]
        if final:
            cnf.add_exactly_k(cells, targets[j])
        else:
            cnf.add_at_most_k(cells, targets[j])
    return cnf


def assembly_matrix(a1: BinaryMatrix, a2_row_bits) -> BinaryMatrix:
    return BinaryMatrix(A1_ROWS + len(a2_row_bits), LEFT_COLS,
                        a1.row_bits + tuple(a2_row_bits))


def assembly_bands(n_a2_rows) -> Bands:
    return Bands.stacked(A1_ROWS, n_a2_rows, LEFT_COLS)


# --- recorded-objects generation ----------------------------------------------


@dataclass
class RecordedPartial:
    rep_id: str
    level: int
    a2_rows: tuple              # row masks of the partial middle band
    certificate: canon.CanonicalCertificate
    labeling: tuple             # canonical labeling of its assembly graph


@dataclass
class DiscardedPartial:
    level: int
    a2_rows: tuple
    rep_id: str
    witness: canon.IsoWitness


@dataclass
class GenerationLog:
    recorded_by_level: list = field(default_factory=list)
    discarded: list = field(default_factory=list)
    models_seen: int = 0
    discard_sink: object = None

    @property
    def final_recorded(self):
        return self.recorded_by_level[-1] if self.recorded_by_level else []

    def note_discard(self, entry: DiscardedPartial):
        if self.discard_sink is not None:
            self.discard_sink.write(entry)
        else:
            self.discarded.append(entry)


def generate_levelwise(a1: BinaryMatrix, solver_factory=None,
                       discard_sink=None, level_hook=None) -> GenerationLog:
    """Run the level-by-level generation for one case.

    solver_factory(cnf) may be provided to control solver construction
    (budgets, proof sinks); it defaults to the deterministic embedded
    solver.  level_hook(level, cnf, solver) is called after each level's
    enumeration, mainly so callers can persist proofs.
    """
    plan = build_level_plan(a1)
    factory = solver_factory or (lambda cnf: solver_for_cnf(cnf))
    log = GenerationLog(discard_sink=discard_sink)
    parents = [RecordedPartial("L0-0", 0, (), None, None)]
    for level in range(1, plan.level_count + 1):
        cnf = build_a2_cnf(a1, plan, level)
        solver = factory(cnf)
        n_rows = plan.rows_through(level)
        prev_rows = plan.rows_through(level - 1)
        registry = {}
        order = []
        bands = assembly_bands(n_rows)

        def on_model(proj_true, _registry=registry, _order=order,
                     _level=level, _n=n_rows, _bands=bands, _cnf=cnf):
            row_masks = _rows_from_model(_cnf, proj_true, _n)
            assembly = assembly_matrix(a1, row_masks)
            graph = canon.build_incidence_graph(assembly, _bands)
            cert, labeling = canon.canonical_form(graph)
            log.models_seen += 1
            key = cert.data
            hit = _registry.get(key)
            if hit is None:
                rep = RecordedPartial("L%d-%d" % (_level, len(_order)), _level,
                                      row_masks, cert, labeling)
                _registry[key] = rep
                _order.append(rep)
                return CallbackDecision(RECORD_AND_BLOCK)
            witness = _compose_witness(labeling, hit, assembly, a1, _bands)
            log.note_discard(DiscardedPartial(_level, row_masks, hit.rep_id, witness))
            return CallbackDecision(BLOCK_ONLY)

        for parent in parents:
            assumptions = _prefix_assumptions(cnf, parent.a2_rows, prev_rows)
            solver.enumerate_all(callback=on_model, assumptions=assumptions)
        if level_hook is not None:
            level_hook(level, cnf, solver)
        log.recorded_by_level.append(order)
        parents = order
        if not parents:
            # nothing recorded at this level: deeper levels stay empty
            for _ in range(level + 1, plan.level_count + 1):
                log.recorded_by_level.append([])
            break
    return log


def _rows_from_model(cnf, true_cells, n_rows):
    masks = []
    for r in range(n_rows):
        bits = 0
        for j in range(LEFT_COLS):
            var = cnf.cell(A1_ROWS + 1 + r, j + 1)
            bits = (bits << 1) | (1 if var in true_cells else 0)
        masks.append(bits)
    return tuple(masks)


def _prefix_assumptions(cnf, prefix_rows, prev_rows):
    assert len(prefix_rows) == prev_rows
    lits = []
    for r in range(prev_rows):
        mask = prefix_rows[r]
        for j in range(LEFT_COLS):
            var = cnf.cell(A1_ROWS + 1 + r, j + 1)
            bit = (mask >> (LEFT_COLS - 1 - j)) & 1
            lits.append(var if bit else -var)
    return tuple(lits)


def _compose_witness(labeling, rep: RecordedPartial, assembly, a1, bands):
    n = assembly.rows + assembly.cols
    vertex_at_rep = [0] * n
    for v, p in enumerate(rep.labeling):
        vertex_at_rep[p] = v
    perm = tuple(vertex_at_rep[p] for p in labeling)
    row_perm = []
    col_perm = []
    for v in range(assembly.rows):
        if perm[v] >= assembly.rows:
            raise IntegrityError("certificate collision: row maps to column")
        row_perm.append(perm[v])
    for v in range(assembly.rows, n):
        if perm[v] < assembly.rows:
            raise IntegrityError("certificate collision: column maps to row")
        col_perm.append(perm[v] - assembly.rows)
    witness = canon.IsoWitness(tuple(row_perm), tuple(col_perm))
    target = assembly_matrix(a1, rep.a2_rows)
    if not canon.witness_checks(witness, assembly, target, bands):
        raise IntegrityError(
            "certificate collision: witness fails to map the completion "
            "onto representative %s" % rep.rep_id)
    return witness


# --- lex-only oracle enumeration ---------------------------------------------------


def enumerate_lex_only(a1: BinaryMatrix, on_solution=None, limit=None,
                       solver_factory=None):
    """Every lexicographically sorted A2, with no symmetry removal.

    Enumerates the complete middle-band instance by blocking-clause
    restarts, record-nothing style: none of the level bookkeeping,
    certificate, or witness machinery is involved, so this is the
    completeness oracle for the recorded-objects generation.  Returns
    (count, complete); complete is False when `limit` stopped the run.
    """
    plan = build_level_plan(a1)
    cnf = build_a2_cnf(a1, plan, plan.level_count)
    factory = solver_factory or (lambda c: solver_for_cnf(c))
    solver = factory(cnf)
    count = 0

    def on_model(proj_true):
        nonlocal count
        count += 1
        if on_solution is not None:
            on_solution(BinaryMatrix(A2_ROWS, LEFT_COLS,
                                     _rows_from_model(cnf, proj_true, A2_ROWS)))
        return CallbackDecision(BLOCK_ONLY)

    _, final = solver.enumerate_all(callback=on_model, max_models=limit)
    return count, final.status == "UNSAT"


def dedup_certificates(a1: BinaryMatrix, limit=None):
    """Certificates of the lex-only stream, deduplicated (oracle side)."""
    certs = set()

    def on_solution(a2):
        assembly = assembly_matrix(a1, a2.row_bits)
        certs.add(canon.graph_certificate(assembly, assembly_bands(A2_ROWS)).data)

    total, complete = enumerate_lex_only(a1, on_solution=on_solution, limit=limit)
    if not complete:
        raise RuntimeError("lex-only enumeration aborted at limit %r" % (limit,))
    return total, certs


# --- certificate-free cross-check ----------------------------------------------------


def verify_mutual_nonisomorphism(a1: BinaryMatrix, recorded) -> bool:
    """No recorded A2 lies in the top-band symmetry orbit of another.

    Uses only explicit group permutations applied to matrices (never the
    canonical-form machinery): isomorphic A2s under the same top band must
    be related by a symmetry of that band up to row order.
    """
    group = canon.symmetry_group(a1)
    keyed = {}
    mats = []
    for idx, rec in enumerate(recorded):
        m = rec if isinstance(rec, BinaryMatrix) else \
            BinaryMatrix(A2_ROWS, LEFT_COLS, tuple(rec))
        m = m.sorted_rows()
        if m.row_bits in keyed:
            return False
        keyed[m.row_bits] = idx
        mats.append(m)
    for idx, m in enumerate(mats):
        for member in canon.matrix_orbit(group, m):
            other = keyed.get(member.row_bits)
            if other is not None and other != idx:
                return False
    return True
