"""Embedded CDCL solver with all-solutions enumeration, assumption-based
incremental solving, programmatic clause injection, proof emission, and a
free-variable cube splitter.

The solver is deliberately self-contained and deterministic: two watched
literals, first-UIP conflict learning, and a fixed branching order over the
cell variables so that enumeration order and emitted proofs are
reproducible run to run.  Every learned clause, injected blocking clause,
and derived assumption-negation clause is appended to the attached proof
sink in order, which makes a whole enumeration run forward-checkable
against the instance augmented with its blocking clauses.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass


class SolverError(Exception):
    pass


class BudgetExceededError(SolverError):
    """Conflict budget exhausted; the solver state remains usable."""


class AdapterError(SolverError):
    """External solver produced unusable output."""


SAT = "SAT"
UNSAT = "UNSAT"
ABORTED = "ABORTED"

RECORD_AND_BLOCK = "recordAndBlock"
BLOCK_ONLY = "blockOnly"


@dataclass
class Result:
    status: str
    model: frozenset | None = None          # true variable ids (full model)
    derived: tuple | None = None            # clause derived on assumption failure
    assumption_failure: bool = False


@dataclass
class CallbackDecision:
    verdict: str = RECORD_AND_BLOCK
    blocking_vars: tuple | None = None      # defaults to the projected true cells


class ProofWriter:
    """DRAT text sink; one addition or deletion per line, insertion order."""

    def __init__(self, sink):
        self.sink = sink
        self.steps = 0

    def add(self, clause):
        self.sink.write(" ".join(str(l) for l in clause) + " 0\n")
        self.steps += 1

    def delete(self, clause):
        self.sink.write("d " + " ".join(str(l) for l in clause) + " 0\n")
        self.steps += 1

    def add_empty(self):
        self.sink.write("0\n")
        self.steps += 1


class Solver:
    def __init__(self, num_vars, clauses, projection=None, aux_vars=(),
                 proof=None, decision_order=None, default_phase=False,
                 conflict_budget=None):
        self.nvars = num_vars
        self.proof = proof
        self.solve_started = False
        self.conflicts = 0
        self.conflict_budget = conflict_budget
        self.projection = tuple(projection) if projection is not None else tuple(
            range(1, num_vars + 1))
        self.aux_vars = frozenset(aux_vars)
        self.default_phase = bool(default_phase)
        n = num_vars
        self._off = n
        self.litval = [0] * (2 * n + 1)       # index lit + nvars -> -1/0/1
        self.watches = [[] for _ in range(2 * n + 1)]
        self.clauses = []
        self.root_units = []                  # indices of unit clauses
        self.trail = []
        self.trail_lim = []                   # trail length at each decision
        self.order_lim = []                   # saved order head per decision
        self.reason = [None] * (n + 1)
        self.level = [0] * (n + 1)
        self.qhead = 0
        self.order = list(decision_order) if decision_order else list(range(1, n + 1))
        if sorted(self.order) != list(range(1, n + 1)):
            raise SolverError("decision order must be a permutation of the variables")
        self.order_head = 0
        self.root_conflict = False
        self._occ = None
        # phase saving: deterministic, and crucial for enumeration (the
        # search returns to the neighborhood of the last model after each
        # blocking restart instead of re-deriving it from scratch)
        self.saved_phase = [self.default_phase] * (n + 1)
        for cl in clauses:
            self._attach(tuple(cl))

    # -- clause attachment -------------------------------------------------

    def attach_proof(self, proof):
        if self.solve_started:
            raise SolverError("proof sink must be attached before the first solve")
        self.proof = proof

    def _attach(self, cl):
        """Watch a new clause; unit clauses go to the root-unit queue."""
        if not cl:
            self.root_conflict = True
            return None
        ci = len(self.clauses)
        self.clauses.append(list(cl))
        if len(cl) == 1:
            self.root_units.append(ci)
        else:
            self.watches[cl[0] + self._off].append(ci)
            self.watches[cl[1] + self._off].append(ci)
        return ci

    # -- assignment bookkeeping ---------------------------------------------

    @property
    def decision_level(self):
        return len(self.trail_lim)

    def value(self, lit):
        return self.litval[lit + self._off]

    def _assign(self, lit, reason_ci):
        self.litval[lit + self._off] = 1
        self.litval[-lit + self._off] = -1
        v = abs(lit)
        self.level[v] = self.decision_level
        self.reason[v] = reason_ci
        self.saved_phase[v] = lit > 0
        self.trail.append(lit)

    def backtrack(self, target_level):
        if self.decision_level <= target_level:
            return
        limit = self.trail_lim[target_level]
        litval = self.litval
        off = self._off
        for lit in reversed(self.trail[limit:]):
            litval[lit + off] = 0
            litval[-lit + off] = 0
            self.reason[abs(lit)] = None
        del self.trail[limit:]
        self.qhead = min(self.qhead, limit)
        self.order_head = self.order_lim[target_level]
        del self.trail_lim[target_level:]
        del self.order_lim[target_level:]

    def _new_decision_level(self, lit):
        self.trail_lim.append(len(self.trail))
        self.order_lim.append(self.order_head)
        self._assign(lit, None)

    def _enqueue_root_units(self):
        """Queue level-0 units; returns a conflicting clause index or None."""
        for ci in self.root_units:
            lit = self.clauses[ci][0]
            val = self.litval[lit + self._off]
            if val == -1:
                return ci
            if val == 0:
                self._assign(lit, ci)
        return None

    # -- propagation -----------------------------------------------------------

    def propagate(self):
        """Unit propagation; returns a conflicting clause index or None."""
        litval = self.litval
        watches = self.watches
        clauses = self.clauses
        off = self._off
        trail = self.trail
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            wl = watches[false_lit + off]
            keep = []
            conflict = None
            i = 0
            nw = len(wl)
            while i < nw:
                ci = wl[i]
                i += 1
                cl = clauses[ci]
                if cl[0] == false_lit:
                    cl[0] = cl[1]
                    cl[1] = false_lit
                first = cl[0]
                if litval[first + off] == 1:
                    keep.append(ci)
                    continue
                moved = False
                for k in range(2, len(cl)):
                    lk = cl[k]
                    if litval[lk + off] != -1:
                        cl[1] = lk
                        cl[k] = false_lit
                        watches[lk + off].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(ci)
                if litval[first + off] == -1:
                    conflict = ci
                    keep.extend(wl[i:])
                    break
                self._assign(first, ci)
            watches[false_lit + off] = keep
            if conflict is not None:
                return conflict
        return None

    # -- conflict analysis --------------------------------------------------------

    def _analyze(self, confl):
        """First-UIP learning; returns (learnt clause, backjump level)."""
        learnt = [0]
        seen = bytearray(self.nvars + 1)
        level = self.level
        trail = self.trail
        counter = 0
        p = None
        idx = len(trail) - 1
        cur = self.decision_level
        while True:
            cl = self.clauses[confl]
            for q in (cl if p is None else cl[1:]):
                v = abs(q)
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            v = abs(p)
            idx -= 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[v]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        bj = 0
        pos = 1
        for k in range(1, len(learnt)):
            lv = level[abs(learnt[k])]
            if lv > bj:
                bj = lv
                pos = k
        learnt[1], learnt[pos] = learnt[pos], learnt[1]
        return learnt, bj

    def _record_learnt(self, learnt):
        ci = self._attach(tuple(learnt))
        if self.proof:
            self.proof.add(learnt)
        return ci

    def _conclude_unsat(self):
        if self.proof:
            self.proof.add_empty()
        self.root_conflict = True
        return Result(UNSAT)

    # -- decisions -------------------------------------------------------------------

    def _next_decision(self):
        litval = self.litval
        off = self._off
        order = self.order
        head = self.order_head
        n = len(order)
        while head < n and litval[order[head] + off] != 0:
            head += 1
        self.order_head = head
        if head == n:
            return None
        v = order[head]
        return v if self.saved_phase[v] else -v

    # -- main search --------------------------------------------------------------------

    def _bump_conflicts(self):
        self.conflicts += 1
        if self.conflict_budget is not None and self.conflicts > self.conflict_budget:
            raise BudgetExceededError("conflict budget %d exceeded" % self.conflict_budget)

    def solve(self, assumptions=()):
        """Run search to SAT or UNSAT under the given assumption literals.

        UNSAT under assumptions derives (and records in the proof) the
        clause negating the assumption set; UNSAT outright emits the empty
        clause.
        """
        self.solve_started = True
        assumptions = tuple(assumptions)
        seen = set()
        for a in assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise SolverError("assumption literal %d out of range" % a)
            if -a in seen:
                raise SolverError("complementary assumption literals")
            seen.add(a)
        self.backtrack(0)
        if self.root_conflict:
            return Result(UNSAT)
        if self._enqueue_root_units() is not None:
            return self._conclude_unsat()
        while True:
            confl = self.propagate()
            if confl is not None:
                self._bump_conflicts()
                if self.decision_level == 0:
                    return self._conclude_unsat()
                learnt, bj = self._analyze(confl)
                self.backtrack(bj)
                ci = self._record_learnt(learnt)
                val = self.value(learnt[0])
                if val == 0:
                    self._assign(learnt[0], ci)
                elif val == -1 and self.decision_level == 0:
                    return self._conclude_unsat()
                continue
            if self.decision_level < len(assumptions):
                a = assumptions[self.decision_level]
                val = self.value(a)
                if val == -1:
                    derived = tuple(-x for x in assumptions)
                    if self.proof:
                        self.proof.add(derived)
                    self._attach(derived)
                    return Result(UNSAT, derived=derived, assumption_failure=True)
                if val == 1:
                    # already implied: open an empty level to keep indexing aligned
                    self.trail_lim.append(len(self.trail))
                    self.order_lim.append(self.order_head)
                    continue
                self._new_decision_level(a)
                continue
            lit = self._next_decision()
            if lit is None:
                off = self._off
                model = frozenset(v for v in range(1, self.nvars + 1)
                                  if self.litval[v + off] == 1)
                return Result(SAT, model=model)
            self._new_decision_level(lit)

    # -- programmatic clause injection ----------------------------------------------------

    def inject_clause(self, clause, keep_levels=0, origin_proof=True):
        """Add a clause mid-search, rewinding only as far as necessary.

        The solver first backtracks to keep_levels (its assumption prefix
        during enumeration).  If the clause is still falsified there it
        rewinds to the root; a clause falsified at the root marks the
        instance unsatisfiable for subsequent solves.
        """
        clause = tuple(clause)
        if not clause:
            raise SolverError("cannot inject an empty clause")
        if origin_proof and self.proof:
            self.proof.add(clause)
        self.backtrack(keep_levels)
        if all(self.value(l) == -1 for l in clause):
            self.backtrack(0)
        lits = sorted(clause, key=lambda l: (self.value(l) == -1, -self.level[abs(l)]))
        ci = self._attach(tuple(lits))
        v0 = self.value(lits[0])
        if v0 == -1:
            # falsified even at the root: every model is excluded
            self.root_conflict = True
            if self.proof:
                self.proof.add_empty()
        elif v0 == 0 and (len(lits) == 1 or self.value(lits[1]) == -1):
            self._assign(lits[0], ci)
        return ci

    def add_blocking_clause(self, true_vars, keep_levels=0):
        """Block every assignment extending the given true cells."""
        clause = tuple(-v for v in sorted(true_vars))
        if not clause:
            raise SolverError("refusing to block an empty assignment")
        self.inject_clause(clause, keep_levels=keep_levels)
        return clause

    # -- enumeration ---------------------------------------------------------------------------

    def enumerate_all(self, callback=None, assumptions=(), max_models=None):
        """Enumerate models, blocking each via its projected true cells.

        The callback receives the frozenset of true projection variables
        and returns a CallbackDecision; models with verdict recordAndBlock
        are collected and returned along with the terminating Result.
        Restarts are warm: the clause database persists across models.
        With max_models the run stops early and reports status ABORTED.
        """
        recorded = []
        assumptions = tuple(assumptions)
        off = self._off
        seen = 0
        while True:
            if max_models is not None and seen >= max_models:
                return recorded, Result(ABORTED)
            res = self.solve(assumptions)
            if res.status != SAT:
                return recorded, res
            seen += 1
            proj_true = frozenset(v for v in self.projection
                                  if self.litval[v + off] == 1)
            decision = callback(proj_true) if callback else CallbackDecision()
            blocking = decision.blocking_vars if decision.blocking_vars is not None \
                else tuple(sorted(proj_true))
            for v in blocking:
                if v in self.aux_vars:
                    raise SolverError("auxiliary variables may not be blocked")
            if decision.verdict == RECORD_AND_BLOCK:
                recorded.append(proj_true)
            elif decision.verdict != BLOCK_ONLY:
                raise SolverError("unknown callback verdict %r" % (decision.verdict,))
            if not blocking:
                # the all-false projection: every assignment extends it, so
                # the enumeration is already complete
                self.root_conflict = True
                return recorded, Result(UNSAT)
            self.add_blocking_clause(blocking, keep_levels=len(assumptions))

    # -- audits ------------------------------------------------------------------------------------

    def check_model(self, model):
        """True when every clause holds under the given set of true vars."""
        for cl in self.clauses:
            for lit in cl:
                if (lit > 0 and lit in model) or (lit < 0 and -lit not in model):
                    break
            else:
                return False
        return True

    # -- cube splitting ------------------------------------------------------------------------------

    def split_cubes(self, free_var_floor):
        """Recursive decision splitting with a free-variable cutoff.

        Splits on the most-occurring unassigned cell variable; a branch
        stops when its count of unassigned non-auxiliary variables drops
        below the floor or the branch is fully decided or refuted.  The
        returned cubes partition the surviving search space.
        """
        if free_var_floor < 0:
            raise SolverError("free variable floor must be nonnegative")
        if self._occ is None:
            occ = [0] * (self.nvars + 1)
            for cl in self.clauses:
                for lit in cl:
                    occ[abs(lit)] += 1
            self._occ = occ
        self.solve_started = True
        self.backtrack(0)
        if self.root_conflict or self._enqueue_root_units() is not None:
            return []
        if self.propagate() is not None:
            self.root_conflict = True
            return []
        cell_vars = [v for v in range(1, self.nvars + 1) if v not in self.aux_vars]
        occ = self._occ
        cubes = []
        decisions = []
        off = self._off

        def descend():
            confl = self.propagate()
            if confl is not None:
                self._bump_conflicts()
                return
            free = [v for v in cell_vars if self.litval[v + off] == 0]
            if not free or len(free) < free_var_floor:
                cubes.append(tuple(decisions))
                return
            pick = max(free, key=lambda v: (occ[v], -v))
            branches = (pick, -pick) if self.default_phase else (-pick, pick)
            for lit in branches:
                level = self.decision_level
                self._new_decision_level(lit)
                decisions.append(lit)
                descend()
                decisions.pop()
                self.backtrack(level)

        descend()
        self.backtrack(0)
        return cubes


def write_cubes(cubes, sink):
    for cube in cubes:
        sink.write("a " + " ".join(str(l) for l in cube) + " 0\n")


def read_cubes(text):
    cubes = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] != "a" or parts[-1] != "0":
            raise ValueError("malformed cube line: %r" % line)
        cubes.append(tuple(int(t) for t in parts[1:-1]))
    return cubes


def external_solve(dimacs_path, solver_command, drat_path=None):
    """Run an external DIMACS solver and parse its s/v output.

    Returns Result(SAT, model) or Result(UNSAT); on UNSAT the proof file
    the solver wrote to drat_path (when given) is left in place for
    checking.
    """
    cmd = shlex.split(solver_command) + [str(dimacs_path)]
    if drat_path is not None:
        cmd.append(str(drat_path))
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, check=False)
    except OSError as exc:
        raise AdapterError("failed to run %r: %s" % (cmd, exc))
    verdict = None
    model = set()
    for line in proc.stdout.splitlines():
        if line.startswith("s "):
            token = line.split(None, 1)[1].strip()
            if token == "SATISFIABLE":
                verdict = SAT
            elif token == "UNSATISFIABLE":
                verdict = UNSAT
            else:
                raise AdapterError("unrecognized verdict line: %r" % line)
        elif line.startswith("v "):
            for tok in line.split()[1:]:
                lit = int(tok)
                if lit > 0:
                    model.add(lit)
    if verdict is None:
        raise AdapterError("solver produced no verdict (exit code %d)" % proc.returncode)
    if verdict == SAT:
        return Result(SAT, model=frozenset(model))
    return Result(UNSAT)


def solver_for_cnf(cnf, proof=None, decision_order=None, conflict_budget=None,
                   default_phase=False):
    """Build a Solver from a Cnf, projecting onto its cell variables."""
    projection = tuple(sorted(cnf.region.cell_of))
    return Solver(cnf.var_count, cnf.clauses, projection=projection,
                  aux_vars=cnf.aux_vars, proof=proof,
                  decision_order=decision_order,
                  conflict_budget=conflict_budget, default_phase=default_phase)
