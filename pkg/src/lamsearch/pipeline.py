"""The three-stage search: top-band (A1) enumeration and classification,
per-case middle-band (A2) generation, and the main block-completion stage
with non-extension certificates.

Case numbering is deterministic: the representative of an isomorphism
class is its lexicographically greatest enumerated member, and cases are
numbered 1..66 in descending lexicographic order of those representatives.
A shipped mapping table aligns this numbering with the historical case
numbers used in the literature; all exclusion lists are keyed through it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from . import canon, isogen
from .canon import Bands
from .cnf import Cnf, Region
from .matrices import (
    A1_ROWS,
    A2_ROWS,
    LEFT_COLS,
    RIGHT_COLS,
    BinaryMatrix,
    complete_a4,
    a3_for_profile,
    has_weight16_triangle,
    intersection_graph_edges,
    k_profile,
    validate_a1,
)
from .solver import solver_for_cnf

EXPECTED_A1_SOLUTIONS = 3366
EXPECTED_A1_CLASSES = 66

# exclusion lists in literature numbering
NO_A2_CASES = frozenset({4, 10, 14, 19, 28, 29, 30, 31, 35, 40, 44, 45, 59, 61, 62})
WEIGHT16_CASES = frozenset({32, 38, 54, 57, 64})
THEORETICAL_CASES = frozenset({52})


class PipelineIntegrityError(RuntimeError):
    pass


class ExtensionFoundSignal(RuntimeError):
    """A block completion extended to more of the incidence matrix.

    This contradicts the nonexistence result, so it is surfaced loudly
    rather than swallowed; it also fires on deliberately planted toy
    fixtures that do extend.
    """

    def __init__(self, message, completion=None, model=None):
        super().__init__(message)
        self.completion = completion
        self.model = model


def build_a1_cnf(prune_fixed=False) -> Cnf:
    """Top-band instance: row sums five, no pair of rows intersecting
    twice, rows and columns in descending lexicographic order."""
    rows = tuple(range(1, A1_ROWS + 1))
    cols = tuple(range(1, LEFT_COLS + 1))
    cnf = Cnf(Region(rows, cols), prune_fixed=prune_fixed)
    cnf.add_quadruple_clauses(rows, cols)
    for r in rows:
        cnf.add_exactly_k([cnf.cell(r, c) for c in cols], 5)
    for r in rows[:-1]:
        cnf.add_lex_order([cnf.cell(r, c) for c in cols],
                          [cnf.cell(r + 1, c) for c in cols])
    for c in cols[:-1]:
        cnf.add_lex_order([cnf.cell(r, c) for r in rows],
                          [cnf.cell(r, c + 1) for r in rows])
    return cnf


def _matrix_from_model(cnf, model, rows, cols):
    bits = []
    for r in rows:
        acc = 0
        for c in cols:
            acc = (acc << 1) | (1 if cnf.cell(r, c) in model else 0)
        bits.append(acc)
    return BinaryMatrix(len(rows), len(cols), tuple(bits))


@dataclass
class A1Solution:
    index: int
    matrix: BinaryMatrix
    certificate: canon.CanonicalCertificate
    labeling: tuple
    case_id: int | None = None
    witness: canon.IsoWitness | None = None


@dataclass
class CaseContext:
    case_id: int
    a1: BinaryMatrix
    a3: BinaryMatrix
    a4: BinaryMatrix
    block_of: tuple
    level_plan: isogen.LevelPlan
    certificate: canon.CanonicalCertificate
    literature_id: int | None = None
    excluded: str | None = None          # None | noA2s | weight16 | theoretical
    _symmetry: canon.SymmetryGroup | None = field(default=None, repr=False)

    @property
    def symmetry_group(self):
        if self._symmetry is None:
            self._symmetry = canon.symmetry_group(self.a1)
        return self._symmetry

    @property
    def ks(self):
        return k_profile(self.a1)

    @property
    def active(self):
        return self.excluded is None


@dataclass
class A1StageResult:
    solutions: list          # all A1Solution, enumeration order
    cases: list              # CaseContext, case_id order
    proof_steps: int = 0

    @property
    def total(self):
        return len(self.solutions)

    @property
    def class_count(self):
        return len(self.cases)


def run_a1_stage(proof=None, case_map=None, check_counts=True) -> A1StageResult:
    """Enumerate every doubly-lex-sorted top band, classify up to
    isomorphism, and build the case table with permutation witnesses."""
    cnf = build_a1_cnf()
    solver = solver_for_cnf(cnf, proof=proof)
    models, _ = solver.enumerate_all()
    rows = tuple(range(1, A1_ROWS + 1))
    cols = tuple(range(1, LEFT_COLS + 1))
    bands = Bands.single(A1_ROWS, LEFT_COLS)
    solutions = []
    for i, model in enumerate(models):
        matrix = _matrix_from_model(cnf, model, rows, cols)
        graph = canon.build_incidence_graph(matrix, bands)
        cert, labeling = canon.canonical_form(graph)
        solutions.append(A1Solution(i, matrix, cert, labeling))
    by_cert = {}
    for sol in solutions:
        by_cert.setdefault(sol.certificate.data, []).append(sol)
    if check_counts:
        if len(solutions) != EXPECTED_A1_SOLUTIONS:
            raise PipelineIntegrityError(
                "top-band enumeration found %d solutions, expected %d"
                % (len(solutions), EXPECTED_A1_SOLUTIONS))
        if len(by_cert) != EXPECTED_A1_CLASSES:
            raise PipelineIntegrityError(
                "top-band classification found %d classes, expected %d"
                % (len(by_cert), EXPECTED_A1_CLASSES))
    reps = []
    for cert_data, members in by_cert.items():
        rep = max(members, key=lambda s: s.matrix.row_bits)
        reps.append(rep)
    reps.sort(key=lambda s: s.matrix.row_bits, reverse=True)
    cases = []
    for case_id, rep in enumerate(reps, start=1):
        rep.case_id = case_id
        validate_a1(rep.matrix)
        ks = k_profile(rep.matrix)
        a4, block_of = complete_a4(rep.matrix)
        ctx = CaseContext(
            case_id=case_id,
            a1=rep.matrix,
            a3=a3_for_profile(ks),
            a4=a4,
            block_of=block_of,
            level_plan=isogen.build_level_plan(rep.matrix),
            certificate=rep.certificate,
        )
        cases.append(ctx)
    rep_by_cert = {c.certificate.data: c for c in cases}
    rep_solution = {s.case_id: s for s in reps}
    for sol in solutions:
        case = rep_by_cert[sol.certificate.data]
        sol.case_id = case.case_id
        rep_sol = rep_solution[case.case_id]
        if sol is rep_sol:
            continue
        sol.witness = _compose_a1_witness(sol, rep_sol, bands)
    annotate_cases(cases, case_map)
    return A1StageResult(solutions, cases)


def _compose_a1_witness(sol: A1Solution, rep: A1Solution, bands):
    n = A1_ROWS + LEFT_COLS
    vertex_at_rep = [0] * n
    for v, p in enumerate(rep.labeling):
        vertex_at_rep[p] = v
    perm = tuple(vertex_at_rep[p] for p in sol.labeling)
    row_perm = tuple(perm[v] for v in range(A1_ROWS))
    col_perm = tuple(perm[A1_ROWS + j] - A1_ROWS for j in range(LEFT_COLS))
    witness = canon.IsoWitness(row_perm, col_perm)
    if not canon.witness_checks(witness, sol.matrix, rep.matrix, bands):
        raise PipelineIntegrityError(
            "solution %d: certificate matched case %d but no witness maps it"
            % (sol.index, rep.case_id))
    return witness


# --- case-map data ------------------------------------------------------------


def load_case_map():
    """The shipped alignment between this numbering and the literature's."""
    try:
        text = resources.files("lamsearch.data").joinpath("case_map.json").read_text()
    except FileNotFoundError:
        return None
    return json.loads(text)


def annotate_cases(cases, case_map=None):
    if case_map is None:
        case_map = load_case_map()
    if case_map is None:
        return cases
    entries = {e["case"]: e for e in case_map["cases"]}
    for ctx in cases:
        entry = entries.get(ctx.case_id)
        if entry is None:
            continue
        stored_rows = entry.get("a1_rows")
        if stored_rows and tuple(stored_rows) != tuple(ctx.a1.to_row_strings()):
            raise PipelineIntegrityError(
                "case %d representative drifted from the shipped mapping table"
                % ctx.case_id)
        ctx.literature_id = entry.get("literature")
        lit = ctx.literature_id
        if lit in WEIGHT16_CASES:
            ctx.excluded = "weight16"
        elif lit in THEORETICAL_CASES:
            ctx.excluded = "theoretical"
        elif lit in NO_A2_CASES:
            ctx.excluded = "noA2s"
        else:
            ctx.excluded = None
    return cases


def literature_case(cases, literature_id) -> CaseContext:
    for ctx in cases:
        if ctx.literature_id == literature_id:
            return ctx
    raise KeyError("no case maps to literature number %r" % (literature_id,))
