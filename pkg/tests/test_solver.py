import io
import itertools
import sys

import pytest

from lamsearch.cnf import Cnf, Region
from lamsearch.solver import (
    SAT,
    UNSAT,
    AdapterError,
    BLOCK_ONLY,
    BudgetExceededError,
    CallbackDecision,
    ProofWriter,
    Solver,
    SolverError,
    external_solve,
    read_cubes,
    solver_for_cnf,
    write_cubes,
)

from oracles import brute_models


def exactly_one_of_three():
    region = Region((1,), (1, 2, 3))
    cnf = Cnf(region)
    cnf.add_exactly_k([1, 2, 3], 1)
    return cnf


def toy_solver(clauses, num_vars, **kw):
    return Solver(num_vars, clauses, **kw)


class TestSolveOnce:
    def test_unit(self):
        s = toy_solver([(1,)], 1)
        res = s.solve()
        assert res.status == SAT and 1 in res.model

    def test_direct_conflict_under_assumption(self):
        s = toy_solver([(1,)], 1)
        res = s.solve(assumptions=(-1,))
        assert res.status == UNSAT
        assert res.assumption_failure
        assert res.derived == (1,)

    def test_forced_model_under_assumption(self):
        s = solver_for_cnf(exactly_one_of_three())
        res = s.solve(assumptions=(1,))
        assert res.status == SAT
        assert res.model & {1, 2, 3} == {1}

    def test_unsat_emits_empty_clause(self):
        buf = io.StringIO()
        s = toy_solver([(1,), (-1,)], 1, proof=ProofWriter(buf))
        assert s.solve().status == UNSAT
        assert buf.getvalue().strip().splitlines()[-1] == "0"

    def test_budget(self):
        # pigeonhole 4 into 3 needs real conflicts
        clauses, n = pigeonhole(4, 3)
        s = toy_solver(clauses, n, conflict_budget=1)
        with pytest.raises(BudgetExceededError):
            s.solve()
        # restartable: lifting the budget finishes the search
        s.conflict_budget = None
        assert s.solve().status == UNSAT

    def test_model_soundness_random_instances(self):
        import random

        rng = random.Random(7)
        for trial in range(30):
            n = rng.randint(3, 9)
            clauses = []
            for _ in range(rng.randint(3, 25)):
                width = rng.randint(1, 3)
                vs = rng.sample(range(1, n + 1), width)
                clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
            s = toy_solver(clauses, n)
            res = s.solve()
            want = brute_models(n, clauses)
            if res.status == SAT:
                assert s.check_model(res.model)
                assert want
            else:
                assert not want


def pigeonhole(pigeons, holes):
    var = {}
    n = 0
    for p in range(pigeons):
        for h in range(holes):
            n += 1
            var[(p, h)] = n
    clauses = [tuple(var[(p, h)] for h in range(holes)) for p in range(pigeons)]
    for h in range(holes):
        for p1 in range(pigeons):
            for p2 in range(p1 + 1, pigeons):
                clauses.append((-var[(p1, h)], -var[(p2, h)]))
    return clauses, n


class TestEnumerate:
    def test_exactly_one_of_three(self):
        s = solver_for_cnf(exactly_one_of_three())
        models, final = s.enumerate_all()
        assert sorted((m & {1, 2, 3} for m in models), key=sorted) == [{1}, {2}, {3}]
        assert final.status == UNSAT

    def test_covers_bruteforce_on_random_instances(self):
        # blocking uses positive literals only, so enumerated models form an
        # antichain whose upward closure is the full model set
        import random

        rng = random.Random(11)
        for trial in range(25):
            n = rng.randint(3, 8)
            clauses = []
            for _ in range(rng.randint(2, 18)):
                vs = rng.sample(range(1, n + 1), rng.randint(1, 3))
                clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
            s = toy_solver(clauses, n)
            models, _ = s.enumerate_all()
            want = set(brute_models(n, clauses))
            got = set(models)
            assert got <= want
            for m in want:
                assert any(m >= g for g in got)
            for a in got:
                assert not any(a > b for b in got)

    def test_matches_bruteforce_on_weight_fixed_instances(self):
        # with a cardinality ladder every model has the same weight, so
        # positive-literal blocking excludes exactly one model at a time
        import random

        rng = random.Random(13)
        for trial in range(10):
            n = rng.randint(4, 7)
            k = rng.randint(1, n - 1)
            region = Region((1,), tuple(range(1, n + 1)))
            cnf = Cnf(region)
            cnf.add_exactly_k(list(range(1, n + 1)), k)
            for _ in range(rng.randint(0, 4)):
                vs = rng.sample(range(1, n + 1), 2)
                cnf.add_clause((-vs[0], -vs[1]), "quadruple")
            s = solver_for_cnf(cnf)
            models, _ = s.enumerate_all()
            cells = set(range(1, n + 1))
            want = brute_models(cnf.var_count, cnf.clauses, projection=cells)
            assert sorted(models, key=sorted) == want

    def test_callback_block_only_filters(self):
        s = solver_for_cnf(exactly_one_of_three())

        def cb(proj):
            if proj == frozenset({1}):
                return CallbackDecision(verdict=BLOCK_ONLY)
            return CallbackDecision()

        models, _ = s.enumerate_all(callback=cb)
        assert sorted((m & {1, 2, 3} for m in models), key=sorted) == [{2}, {3}]

    def test_enumeration_under_assumptions(self):
        cnf = Cnf(Region((1,), (1, 2, 3, 4)))
        cnf.add_exactly_k([1, 2, 3, 4], 2)
        s = solver_for_cnf(cnf)
        models, final = s.enumerate_all(assumptions=(1,))
        got = sorted((m & {1, 2, 3, 4} for m in models), key=sorted)
        assert got == [{1, 2}, {1, 3}, {1, 4}]
        assert final.assumption_failure
        assert final.derived == (-1,)
        # the database still enumerates the remaining models afterwards
        models2, _ = s.enumerate_all(assumptions=(-1,))
        assert sorted((m & {1, 2, 3, 4} for m in models2), key=sorted) == [{2, 3}, {2, 4}, {3, 4}]

    def test_blocking_clauses_in_proof(self):
        buf = io.StringIO()
        cnf = exactly_one_of_three()
        s = solver_for_cnf(cnf, proof=ProofWriter(buf))
        s.enumerate_all()
        lines = [l for l in buf.getvalue().splitlines() if not l.startswith("d")]
        for blocked in ("-1 0", "-2 0", "-3 0"):
            assert any(l == blocked for l in lines)
        assert lines[-1] == "0"

    def test_fully_forced_single_model(self):
        s = toy_solver([(1,), (2,)], 2)
        models, final = s.enumerate_all()
        assert [sorted(m) for m in models] == [[1, 2]]
        assert final.status == UNSAT


class TestDeterminism:
    def test_same_proof_twice(self):
        def run():
            buf = io.StringIO()
            clauses, n = pigeonhole(4, 3)
            s = toy_solver(clauses, n, proof=ProofWriter(buf))
            s.solve()
            return buf.getvalue()

        assert run() == run()

    def test_same_enumeration_order(self):
        def run():
            s = solver_for_cnf(exactly_one_of_three())
            models, _ = s.enumerate_all()
            return [tuple(sorted(m & {1, 2, 3})) for m in models]

        assert run() == run()


class TestCubes:
    def test_floor_above_var_count_single_empty_cube(self):
        s = solver_for_cnf(exactly_one_of_three())
        cubes = s.split_cubes(50)
        assert cubes == [()]

    def test_cubes_partition_models(self):
        cnf = exactly_one_of_three()
        s = solver_for_cnf(cnf)
        cubes = s.split_cubes(0)
        seen = []
        for cube in cubes:
            worker = solver_for_cnf(exactly_one_of_three())
            models, _ = worker.enumerate_all(assumptions=cube)
            seen.extend(m & {1, 2, 3} for m in models)
        assert sorted(seen, key=sorted) == [{1}, {2}, {3}]
        # disjoint: no model may appear twice
        assert len(seen) == len({frozenset(m) for m in seen})

    def test_cube_union_equals_enumeration_on_toy_band(self):
        # two rows of three cells, one true per row, rows must differ
        region = Region((1, 2), (1, 2, 3))
        cnf = Cnf(region)
        cnf.add_exactly_k([cnf.cell(1, j) for j in (1, 2, 3)], 1)
        cnf.add_exactly_k([cnf.cell(2, j) for j in (1, 2, 3)], 1)
        cnf.add_quadruple_clauses((1, 2), (1, 2, 3))
        full, _ = solver_for_cnf(cnf).enumerate_all()
        want = sorted((m for m in full), key=sorted)
        got = []
        for cube in solver_for_cnf(cnf).split_cubes(3):
            worker = solver_for_cnf(cnf)
            models, _ = worker.enumerate_all(assumptions=cube)
            got.extend(models)
        assert sorted(got, key=sorted) == want

    def test_cube_file_round_trip(self):
        cubes = [(-1, 2), (3,), ()]
        buf = io.StringIO()
        write_cubes(cubes, buf)
        assert read_cubes(buf.getvalue()) == cubes


class TestExternalAdapter:
    def test_sat_via_fake_solver(self, tmp_path):
        dimacs = tmp_path / "f.cnf"
        dimacs.write_text("p cnf 1 1\n1 0\n")
        script = tmp_path / "solver.py"
        script.write_text(
            "import sys\nprint('s SATISFIABLE')\nprint('v 1 0')\n")
        res = external_solve(dimacs, "%s %s" % (sys.executable, script))
        assert res.status == SAT and res.model == frozenset({1})

    def test_unsat_with_proof_file(self, tmp_path):
        dimacs = tmp_path / "f.cnf"
        dimacs.write_text("p cnf 1 2\n1 0\n-1 0\n")
        script = tmp_path / "solver.py"
        script.write_text(
            "import sys\nopen(sys.argv[2], 'w').write('0\\n')\n"
            "print('s UNSATISFIABLE')\n")
        proof = tmp_path / "f.drat"
        res = external_solve(dimacs, "%s %s" % (sys.executable, script), proof)
        assert res.status == UNSAT
        assert proof.read_text() == "0\n"

    def test_malformed_output(self, tmp_path):
        dimacs = tmp_path / "f.cnf"
        dimacs.write_text("p cnf 1 1\n1 0\n")
        script = tmp_path / "solver.py"
        script.write_text("print('no verdict here')\n")
        with pytest.raises(AdapterError):
            external_solve(dimacs, "%s %s" % (sys.executable, script))


class TestGuards:
    def test_aux_blocking_rejected(self):
        cnf = exactly_one_of_three()
        s = solver_for_cnf(cnf)

        def cb(proj):
            return CallbackDecision(blocking_vars=(cnf.aux_vars[0],))

        with pytest.raises(SolverError):
            s.enumerate_all(callback=cb)

    def test_proof_attach_after_solve_rejected(self):
        s = toy_solver([(1,)], 1)
        s.solve()
        with pytest.raises(SolverError):
            s.attach_proof(ProofWriter(io.StringIO()))
