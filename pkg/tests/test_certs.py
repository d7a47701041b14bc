import io

import pytest

from lamsearch.certs import (
    ADD,
    DELETE,
    CheckResult,
    DratProof,
    ProofSyntaxError,
    SolutionRecord,
    blocking_clauses_for,
    check_drat,
    emit_drat_binary,
    emit_drat_text,
    parse_drat_binary,
    parse_drat_text,
    read_records,
    verify_augmented_unsat,
    verify_solution_records,
    write_records,
)
from lamsearch.cnf import Cnf, Region
from lamsearch.solver import ProofWriter, Solver, solver_for_cnf


def exactly_one_of_three():
    cnf = Cnf(Region((1,), (1, 2, 3)))
    cnf.add_exactly_k([1, 2, 3], 1)
    return cnf


class TestFormats:
    def test_text_round_trip(self):
        proof = DratProof([(ADD, (1, -2)), (DELETE, (3,)), (ADD, ())])
        buf = io.StringIO()
        emit_drat_text(proof, buf)
        assert parse_drat_text(buf.getvalue()).steps == proof.steps

    def test_binary_round_trip(self):
        proof = DratProof([(ADD, (1, -2, 300)), (DELETE, (-4, 5)), (ADD, ())])
        buf = io.BytesIO()
        emit_drat_binary(proof, buf)
        assert parse_drat_binary(buf.getvalue()).steps == proof.steps

    def test_text_binary_equivalence(self):
        proof = DratProof([(ADD, (7, -1)), (ADD, ())])
        t = io.StringIO()
        b = io.BytesIO()
        emit_drat_text(proof, t)
        emit_drat_binary(proof, b)
        assert parse_drat_text(t.getvalue()).steps == parse_drat_binary(b.getvalue()).steps

    def test_malformed_line_reports_position(self):
        with pytest.raises(ProofSyntaxError) as err:
            parse_drat_text("1 2 0\nbroken\n")
        assert err.value.line == 2

    def test_missing_terminator(self):
        with pytest.raises(ProofSyntaxError):
            parse_drat_text("1 2\n")


class TestCheckDrat:
    def test_direct_contradiction_accepts_empty(self):
        proof = DratProof([(ADD, ())])
        res = check_drat(1, [(1,), (-1,)], proof, require_empty=True)
        assert res.ok and res.empty_derived

    def test_unsupported_step_rejected(self):
        # on (x|y)(~x|~y) the unit {x} is neither RUP nor RAT
        proof = DratProof([(ADD, (1,))])
        res = check_drat(2, [(1, 2), (-1, -2)], proof)
        assert not res.ok
        assert res.failed_step == 0

    def test_rup_chain(self):
        # (a|b)(a|~b)(~a|c)(~a|~c) refutes via {a} then {}
        base = [(1, 2), (1, -2), (-1, 3), (-1, -3)]
        proof = DratProof([(ADD, (1,)), (ADD, ())])
        assert check_drat(3, base, proof, require_empty=True).ok

    def test_empty_clause_on_satisfiable_base_rejected(self):
        res = check_drat(2, [(1, 2)], DratProof([(ADD, ())]))
        assert not res.ok and res.failed_step == 0

    def test_deletion_is_honored(self):
        base = [(1, 2), (-1, 2), (-2, 3), (-2, -3)]
        with_clause = check_drat(3, base, DratProof([(ADD, (2,)), (ADD, ())]),
                                 require_empty=True)
        assert with_clause.ok
        # deleting (-2, 3) first removes the support for the empty clause
        gone = check_drat(3, base, DratProof([(DELETE, (-2, 3)),
                                              (ADD, (2,)), (ADD, ())]),
                          require_empty=True)
        assert not gone.ok

    def test_rat_addition_accepted(self):
        # classic: adding a definition clause by RAT on a fresh variable
        base = [(1, 2)]
        proof = DratProof([(ADD, (3, 1)), (ADD, (-3, 2))])
        res = check_drat(3, base, proof)
        assert res.ok

    def test_tautology_step_skipped(self):
        base = [(1, 2)]
        proof = DratProof([(ADD, (1, -1))])
        assert check_drat(2, base, proof).ok


class TestSolverRoundTrip:
    def test_unsat_proof_checks(self):
        base = [(1, 2), (1, -2), (-1, 2), (-1, -2)]
        buf = io.StringIO()
        s = Solver(2, base, proof=ProofWriter(buf))
        assert s.solve().status == "UNSAT"
        proof = parse_drat_text(buf.getvalue())
        assert check_drat(2, base, proof, require_empty=True).ok

    def test_pigeonhole_proof_checks(self):
        from test_solver import pigeonhole

        clauses, n = pigeonhole(4, 3)
        buf = io.StringIO()
        s = Solver(n, clauses, proof=ProofWriter(buf))
        assert s.solve().status == "UNSAT"
        proof = parse_drat_text(buf.getvalue())
        assert check_drat(n, clauses, proof, require_empty=True).ok

    def test_enumeration_proof_checks_against_augmented(self):
        cnf = exactly_one_of_three()
        buf = io.StringIO()
        s = solver_for_cnf(cnf, proof=ProofWriter(buf))
        models, _ = s.enumerate_all()
        assert len(models) == 3
        proof = parse_drat_text(buf.getvalue())
        solutions = [sorted(m) for m in models]
        res = verify_augmented_unsat(cnf.var_count, cnf.clauses, solutions, proof,
                                     cell_vars=cnf.region.cell_of)
        assert res.ok

    def test_dropping_a_solution_breaks_verification(self):
        cnf = exactly_one_of_three()
        buf = io.StringIO()
        s = solver_for_cnf(cnf, proof=ProofWriter(buf))
        models, _ = s.enumerate_all()
        proof = parse_drat_text(buf.getvalue())
        solutions = [sorted(m) for m in models][:-1]
        res = verify_augmented_unsat(cnf.var_count, cnf.clauses, solutions, proof,
                                     cell_vars=cnf.region.cell_of)
        assert not res.ok

    def test_invalid_solution_rejected_before_proof(self):
        cnf = exactly_one_of_three()
        res = verify_augmented_unsat(cnf.var_count, cnf.clauses,
                                     [(1, 2)], DratProof([(ADD, ())]))
        assert not res.ok and "solution" in res.message

    def test_assumption_proofs_check_without_empty_clause(self):
        cnf = Cnf(Region((1,), (1, 2, 3, 4)))
        cnf.add_exactly_k([1, 2, 3, 4], 2)
        buf = io.StringIO()
        s = solver_for_cnf(cnf, proof=ProofWriter(buf))
        models, final = s.enumerate_all(assumptions=(1,))
        assert final.assumption_failure
        proof = parse_drat_text(buf.getvalue())
        augmented = list(cnf.clauses) + blocking_clauses_for(
            [sorted(m) for m in models])
        res = check_drat(cnf.var_count, augmented, proof)
        assert res.ok
        # the derived negation of the assumption set is present
        assert (ADD, (-1,)) in proof.steps


class TestTamperSensitivity:
    """Single-literal flips must break incremental certificates.

    An incremental proof is accepted only when every step checks and the
    negation of every assumption set is among the additions, so flipping
    any literal either invalidates a step or removes a required clause.
    (Plain refutation proofs ending in a unit learnt are NOT tamper-tight
    in this sense: both polarities of that unit are propagation-refutable
    at that point, so flipping it yields a different but valid proof.)
    """

    def _fixture(self):
        base = [(1, 2), (-1, -2)]
        assumption_sets = [(1, 2), (-1, -2)]
        buf = io.StringIO()
        s = Solver(2, base, proof=ProofWriter(buf))
        for assumptions in assumption_sets:
            res = s.solve(assumptions)
            assert res.status == "UNSAT" and res.assumption_failure
        return base, assumption_sets, parse_drat_text(buf.getvalue())

    def test_accepted_then_every_mutation_rejected(self):
        from lamsearch.certs import verify_incremental_unsat

        base, sets, proof = self._fixture()
        assert verify_incremental_unsat(2, base, sets, proof).ok
        mutations = 0
        for si, (kind, clause) in enumerate(proof.steps):
            if kind != ADD or not clause:
                continue
            for li in range(len(clause)):
                mutated = list(clause)
                mutated[li] = -mutated[li]
                steps = list(proof.steps)
                steps[si] = (ADD, tuple(mutated))
                res = verify_incremental_unsat(2, base, sets, DratProof(steps))
                assert not res.ok, "mutation at step %d literal %d survived" % (si, li)
                mutations += 1
        assert mutations >= 4


class TestSolutionRecords:
    def _record(self, rid, rows, witness=None):
        return SolutionRecord(stage="A1", case_id=1, record_id=rid,
                              rows=tuple(rows), certificate="00", witness=witness)

    def test_json_round_trip(self):
        rec = self._record("r1", ["101", "010"],
                           witness={"rep": "r0", "row_perm": [0, 1], "col_perm": [0, 1, 2]})
        buf = io.StringIO()
        write_records([rec], buf)
        back = read_records(buf.getvalue())
        assert back == [rec]

    def test_identity_witness_accepts(self):
        rep = self._record("r0", ["110", "001"])
        rec = self._record("r1", ["110", "001"],
                           witness={"rep": "r0", "row_perm": [0, 1], "col_perm": [0, 1, 2]})
        assert verify_solution_records([rec], [rep]).ok

    def test_row_swap_witness(self):
        rep = self._record("r0", ["110", "001"])
        rec = self._record("r1", ["001", "110"],
                           witness={"rep": "r0", "row_perm": [1, 0], "col_perm": [0, 1, 2]})
        assert verify_solution_records([rec], [rep]).ok

    def test_corrupted_witness_rejected(self):
        rep = self._record("r0", ["110", "001"])
        rec = self._record("r1", ["001", "110"],
                           witness={"rep": "r0", "row_perm": [1, 0], "col_perm": [0, 2, 1]})
        res = verify_solution_records([rec], [rep])
        assert not res.ok and "r1" in res.message

    def test_malformed_permutation_rejected(self):
        rep = self._record("r0", ["110", "001"])
        rec = self._record("r1", ["001", "110"],
                           witness={"rep": "r0", "row_perm": [0, 0], "col_perm": [0, 1, 2]})
        assert not verify_solution_records([rec], [rep]).ok

    def test_unknown_representative_rejected(self):
        rec = self._record("r1", ["10"], witness={"rep": "nope",
                                                  "row_perm": [0], "col_perm": [0, 1]})
        assert not verify_solution_records([rec], []).ok
