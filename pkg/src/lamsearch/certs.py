"""Certificate formats and independent verification.

This module deliberately shares no clause-database code with the solver:
the forward proof checker below keeps its own watch structure and its own
unit propagation, so a solver bug cannot certify itself.  Supported
artifacts: DRAT proofs (text and binary renderings), solution-record
files (JSON lines), and the augmented-instance unsatisfiability check
that certifies an enumeration found every solution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .canon import Bands, IsoWitness, apply_witness, resort_band_rows
from .matrices import BinaryMatrix


class ProofSyntaxError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else "%s (line %d)" % (message, line))
        self.line = line


ADD = "a"
DELETE = "d"


@dataclass
class DratProof:
    steps: list  # of (ADD | DELETE, tuple_of_literals)

    @property
    def terminal_empty(self):
        return any(kind == ADD and not cl for kind, cl in self.steps)


def parse_drat_text(text) -> DratProof:
    steps = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        kind = ADD
        body = line
        if line.startswith("d ") or line == "d":
            kind = DELETE
            body = line[1:].strip()
        try:
            lits = [int(t) for t in body.split()]
        except ValueError:
            raise ProofSyntaxError("unparsable proof line %r" % raw, ln)
        if not lits or lits[-1] != 0:
            raise ProofSyntaxError("proof line missing 0 terminator", ln)
        if any(l == 0 for l in lits[:-1]):
            raise ProofSyntaxError("stray 0 inside clause", ln)
        steps.append((kind, tuple(lits[:-1])))
    return DratProof(steps)


def emit_drat_text(proof: DratProof, sink):
    for kind, clause in proof.steps:
        head = "d " if kind == DELETE else ""
        sink.write(head + " ".join(str(l) for l in clause) + " 0\n")


def _varint_bytes(value):
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _lit_to_unsigned(lit):
    return (abs(lit) << 1) | (1 if lit < 0 else 0)


def _unsigned_to_lit(u):
    var = u >> 1
    return -var if u & 1 else var


def emit_drat_binary(proof: DratProof, sink):
    for kind, clause in proof.steps:
        sink.write(b"a" if kind == ADD else b"d")
        for lit in clause:
            sink.write(_varint_bytes(_lit_to_unsigned(lit)))
        sink.write(b"\x00")


def parse_drat_binary(data) -> DratProof:
    steps = []
    i = 0
    n = len(data)
    while i < n:
        tag = data[i:i + 1]
        i += 1
        if tag == b"a":
            kind = ADD
        elif tag == b"d":
            kind = DELETE
        else:
            raise ProofSyntaxError("unknown binary step tag %r at byte %d" % (tag, i - 1))
        clause = []
        while True:
            if i >= n:
                raise ProofSyntaxError("truncated binary proof")
            if data[i] == 0:
                i += 1
                break
            value = 0
            shift = 0
            while True:
                if i >= n:
                    raise ProofSyntaxError("truncated varint in binary proof")
                byte = data[i]
                i += 1
                value |= (byte & 0x7F) << shift
                shift += 7
                if not byte & 0x80:
                    break
            clause.append(_unsigned_to_lit(value))
        steps.append((kind, tuple(clause)))
    return DratProof(steps)


# --- forward checking ---------------------------------------------------------


@dataclass
class CheckResult:
    ok: bool
    failed_step: int | None = None
    empty_derived: bool = False
    message: str = ""

    def __bool__(self):
        return self.ok


class _CheckerState:
    """Clause store with watched-literal propagation, independent of the
    solver's implementation."""

    def __init__(self, num_vars):
        self.nvars = num_vars
        self.value = {}              # var -> bool
        self.trail = []
        self.root_size = 0
        self.clause_lits = []        # id -> tuple
        self.alive = []
        self.watch_map = {}          # literal -> set of clause ids
        self.occs = {}               # literal -> set of clause ids (alive)
        self.unit_queue = []         # alive unit clause ids
        self.by_key = {}             # sorted tuple -> list of ids (for deletion)
        self.root_conflict = False
        self._prop_head = 0

    # clause bookkeeping

    def _watch(self, lit, ci):
        self.watch_map.setdefault(lit, set()).add(ci)

    def _unwatch(self, lit, ci):
        bucket = self.watch_map.get(lit)
        if bucket is not None:
            bucket.discard(ci)

    def add_clause(self, clause):
        clause = tuple(clause)
        ci = len(self.clause_lits)
        self.clause_lits.append(clause)
        self.alive.append(True)
        for lit in set(clause):
            self.occs.setdefault(lit, set()).add(ci)
        self.by_key.setdefault(tuple(sorted(clause)), []).append(ci)
        if not clause:
            self.root_conflict = True
        elif len(clause) == 1:
            self.unit_queue.append(ci)
        else:
            self._watch(clause[0], ci)
            self._watch(clause[1], ci)
        return ci

    def delete_clause(self, clause):
        key = tuple(sorted(clause))
        ids = self.by_key.get(key, [])
        while ids:
            ci = ids[-1]
            if self.alive[ci]:
                break
            ids.pop()
        if not ids:
            return False
        ci = ids.pop()
        if len(clause) <= 1:
            # deletions of unit clauses are recorded but not applied,
            # matching common forward checkers
            return True
        self.alive[ci] = False
        stored = self.clause_lits[ci]
        self._unwatch(stored[0], ci)
        self._unwatch(stored[1], ci)
        for lit in set(stored):
            bucket = self.occs.get(lit)
            if bucket is not None:
                bucket.discard(ci)
        return True

    # assignment and propagation

    def lit_value(self, lit):
        val = self.value.get(abs(lit))
        if val is None:
            return None
        return val if lit > 0 else not val

    def enqueue(self, lit):
        """Assign a literal true; returns False on immediate conflict."""
        val = self.lit_value(lit)
        if val is not None:
            return val
        self.value[abs(lit)] = lit > 0
        self.trail.append(lit)
        return True

    def propagate(self):
        """Exhaustive unit propagation; True when a conflict was found."""
        head = self._prop_head
        while head < len(self.trail):
            lit = self.trail[head]
            head += 1
            falsified = -lit
            for ci in list(self.watch_map.get(falsified, ())):
                if not self.alive[ci]:
                    self._unwatch(falsified, ci)
                    continue
                cl = self.clause_lits[ci]
                w0, w1 = cl[0], cl[1]
                if w0 == falsified:
                    w0, w1 = w1, w0
                if self.lit_value(w0) is True:
                    continue
                replacement = None
                for cand in cl[2:]:
                    if cand != w0 and self.lit_value(cand) is not False:
                        replacement = cand
                        break
                if replacement is not None:
                    self.clause_lits[ci] = (w0, replacement) + tuple(
                        l for l in cl if l not in (w0, replacement))
                    self._unwatch(falsified, ci)
                    self._watch(replacement, ci)
                    continue
                v0 = self.lit_value(w0)
                if v0 is False:
                    self._prop_head = head
                    return True
                if not self.enqueue(w0):
                    self._prop_head = head
                    return True
        self._prop_head = head
        return False

    def settle_roots(self):
        """Propagate root units permanently; True on root conflict."""
        while self.unit_queue:
            ci = self.unit_queue.pop()
            if not self.alive[ci]:
                continue
            lit = self.clause_lits[ci][0]
            if not self.enqueue(lit):
                self.root_conflict = True
        if self.root_conflict:
            return True
        if self.propagate():
            self.root_conflict = True
            return True
        self.root_size = len(self.trail)
        return False

    def rollback(self):
        for lit in self.trail[self.root_size:]:
            del self.value[abs(lit)]
        del self.trail[self.root_size:]
        self._prop_head = self.root_size

    def rup(self, clause):
        """Reverse unit propagation: does assuming the negation conflict?"""
        if self.root_conflict:
            return True
        for lit in clause:
            if not self.enqueue(-lit):
                self.rollback()
                return True
        conflict = self.propagate()
        self.rollback()
        return conflict

    def rat(self, clause):
        """Resolution asymmetric tautology on the first literal."""
        if not clause:
            return False
        pivot = clause[0]
        clause_set = set(clause)
        for ci in list(self.occs.get(-pivot, ())):
            if not self.alive[ci]:
                continue
            other = self.clause_lits[ci]
            resolvent = list(clause)
            tautology = False
            for lit in other:
                if lit == -pivot:
                    continue
                if -lit in clause_set:
                    tautology = True
                    break
                if lit not in clause_set:
                    resolvent.append(lit)
            if tautology:
                continue
            if not self.rup(resolvent):
                return False
        return True


def check_drat(num_vars, clauses, proof: DratProof, require_empty=False) -> CheckResult:
    """Forward RUP/RAT check of a proof against a clause database.

    Additions must be RUP against the accumulated database (with RAT on
    the first literal as fallback); deletions are honored.  Incremental
    proofs that derive assumption-negation clauses instead of the empty
    clause check fine with require_empty=False.
    """
    state = _CheckerState(num_vars)
    for cl in clauses:
        state.add_clause(cl)
    state.settle_roots()
    empty_seen = state.root_conflict
    for index, (kind, clause) in enumerate(proof.steps):
        if kind == DELETE:
            state.delete_clause(clause)
            continue
        seen_lits = set()
        tautology = False
        deduped = []
        for lit in clause:
            if -lit in seen_lits:
                tautology = True
                break
            if lit not in seen_lits:
                seen_lits.add(lit)
                deduped.append(lit)
        if tautology:
            continue  # trivially valid, nothing worth storing
        clause = tuple(deduped)
        if not state.rup(clause):
            if not clause or not state.rat(clause):
                return CheckResult(False, index, empty_seen,
                                   "step %d is neither RUP nor RAT" % index)
        if not clause:
            empty_seen = True
        state.add_clause(clause)
        if state.settle_roots():
            # the database is now refutable by propagation alone, which
            # itself witnesses unsatisfiability
            empty_seen = True
    if require_empty and not empty_seen:
        return CheckResult(False, None, False, "proof never derives the empty clause")
    return CheckResult(True, None, empty_seen)


def blocking_clauses_for(solutions):
    """One positive-literal blocking clause per solution (true-var sets)."""
    out = []
    for sol in solutions:
        lits = tuple(-v for v in sorted(sol))
        if not lits:
            raise ValueError("cannot block an empty solution")
        out.append(lits)
    return out


def verify_augmented_unsat(num_vars, base_clauses, solutions, proof: DratProof,
                           cell_vars=None) -> CheckResult:
    """Certify that an enumeration is exhaustive.

    Every claimed solution must satisfy the base instance (three-valued
    over the cell variables: literals on auxiliary variables count as
    undetermined); the proof must then refute the base instance augmented
    with one blocking clause per solution.  Acceptance means no further
    solutions exist.
    """
    cells = set(cell_vars) if cell_vars is not None else None
    for i, sol in enumerate(solutions):
        sol_set = set(sol)
        for cl in base_clauses:
            falsified = True
            for lit in cl:
                var = abs(lit)
                if cells is not None and var not in cells:
                    falsified = False  # undetermined literal may rescue it
                    break
                if (lit > 0 and lit in sol_set) or (lit < 0 and var not in sol_set):
                    falsified = False
                    break
            if falsified:
                return CheckResult(False, None, False,
                                   "solution %d does not satisfy the base instance" % i)
    augmented = list(base_clauses) + blocking_clauses_for(solutions)
    return check_drat(num_vars, augmented, proof, require_empty=True)


def verify_incremental_unsat(num_vars, base_clauses, assumption_sets,
                             proof: DratProof) -> CheckResult:
    """Check an incremental-assumption certificate.

    Such proofs never derive the empty clause; instead each assumption set
    (a completion under test) must have its negation derived.  Acceptance
    requires every proof step to check and every expected negation clause
    to appear among the additions.
    """
    res = check_drat(num_vars, base_clauses, proof, require_empty=False)
    if not res.ok:
        return res
    additions = {tuple(sorted(cl)) for kind, cl in proof.steps if kind == ADD}
    for i, assumptions in enumerate(assumption_sets):
        expected = tuple(sorted(-l for l in assumptions))
        if expected not in additions:
            return CheckResult(False, None, res.empty_derived,
                               "negation of assumption set %d is not derived" % i)
    return CheckResult(True, None, res.empty_derived)


# --- solution records -----------------------------------------------------------


@dataclass
class SolutionRecord:
    stage: str                     # "A1" | "A2-level-<l>" | "main"
    case_id: int | None
    record_id: str
    rows: tuple                    # matrix rows as 0/1 strings
    certificate: str               # hex
    witness: dict | None = None    # {"rep": id, "row_perm": [...], "col_perm": [...]}
    extra: dict = field(default_factory=dict)

    def matrix(self) -> BinaryMatrix:
        return BinaryMatrix.from_rows(list(self.rows))

    def to_json(self):
        data = {
            "stage": self.stage,
            "case": self.case_id,
            "id": self.record_id,
            "rows": list(self.rows),
            "cert": self.certificate,
            "witness": self.witness,
        }
        if self.extra:
            data["extra"] = self.extra
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, line):
        data = json.loads(line)
        return cls(stage=data["stage"], case_id=data["case"], record_id=data["id"],
                   rows=tuple(data["rows"]), certificate=data["cert"],
                   witness=data.get("witness"), extra=data.get("extra", {}))


def write_records(records, sink):
    for rec in records:
        sink.write(rec.to_json() + "\n")


def read_records(text):
    return [SolutionRecord.from_json(line)
            for line in text.splitlines() if line.strip()]


def bands_for_record(record: SolutionRecord) -> Bands:
    m = record.matrix()
    if record.stage == "A1" or m.rows <= 6:
        return Bands.single(m.rows, m.cols)
    return Bands.stacked(6, m.rows - 6, m.cols)


def verify_solution_records(records, representatives) -> CheckResult:
    """Check every witnessed record against its representative.

    Applies the stored permutations, resorts rows within open bands, and
    compares bit for bit; no canonical-form machinery is involved.
    """
    reps = {rec.record_id: rec for rec in representatives}
    for rec in records:
        if rec.witness is None:
            continue
        rep = reps.get(rec.witness.get("rep"))
        if rep is None:
            return CheckResult(False, None, False,
                               "record %s references unknown representative" % rec.record_id)
        source = rec.matrix()
        target = rep.matrix()
        if (source.rows, source.cols) != (target.rows, target.cols):
            return CheckResult(False, None, False,
                               "record %s has mismatched shape" % rec.record_id)
        row_perm = tuple(rec.witness.get("row_perm", ()))
        col_perm = tuple(rec.witness.get("col_perm", ()))
        if sorted(row_perm) != list(range(source.rows)) or \
                sorted(col_perm) != list(range(source.cols)):
            return CheckResult(False, None, False,
                               "record %s carries a malformed witness" % rec.record_id)
        bands = bands_for_record(rec)
        mapped = resort_band_rows(
            apply_witness(IsoWitness(row_perm, col_perm), source), bands)
        if mapped != resort_band_rows(target, bands):
            return CheckResult(False, None, False,
                               "record %s witness does not reproduce its representative"
                               % rec.record_id)
    return CheckResult(True, None, False)
