import pytest

from lamsearch.matrices import (
    BinaryMatrix,
    InfeasibleCaseError,
    PlaneParams,
    a2_column_targets,
    complete_a3,
    complete_a4,
    has_weight16_triangle,
    intersection_graph_edges,
    k_profile,
    verify_plane_axioms,
)

from oracles import fano_matrix, gf_plane_matrix


# A valid A1: the lexicographically greatest 6x19 band (four rows through
# the first column, two more through the second).
A1_TOP = BinaryMatrix.from_rows([
    "1111100000000000000",
    "1000011110000000000",
    "1000000001111000000",
    "1000000000000111100",
    "0100010001000100010",
    "0100001000100010001",
])


def a2_rows_for(a1, rows):
    return BinaryMatrix.from_rows(rows, cols=19)


class TestBinaryMatrix:
    def test_round_trip(self):
        m = BinaryMatrix.from_rows(["101", "010"])
        assert m.to_row_strings() == ["101", "010"]
        assert m.get(0, 0) == 1 and m.get(0, 1) == 0
        assert m.row_sums() == [2, 1]
        assert m.col_sums() == [1, 1, 1]

    def test_lex_order_matches_int_order(self):
        m = BinaryMatrix.from_rows(["110", "101"])
        assert m.row_bits[0] > m.row_bits[1]

    def test_transpose_and_stack(self):
        m = BinaryMatrix.from_rows(["10", "11"])
        t = m.transpose()
        assert t.to_row_strings() == ["11", "01"]
        s = m.stack(BinaryMatrix.from_rows(["01"]))
        assert s.rows == 3 and s.row_string(2) == "01"

    def test_permuted(self):
        m = BinaryMatrix.from_rows(["10", "01"])
        swapped = m.permuted(row_perm=[1, 0])
        assert swapped.to_row_strings() == ["01", "10"]
        cols = m.permuted(col_perm=[1, 0])
        assert cols.to_row_strings() == ["01", "10"]

    def test_validation(self):
        with pytest.raises(ValueError):
            BinaryMatrix.from_rows([[0, 2]])
        with pytest.raises(ValueError):
            BinaryMatrix(2, 2, (1,))


class TestPlaneAxioms:
    def test_fano_accepted(self):
        fano = fano_matrix()
        assert verify_plane_axioms(fano, PlaneParams.for_order(2)).ok

    def test_order3_accepted(self):
        m = gf_plane_matrix(3)
        assert verify_plane_axioms(m, PlaneParams.for_order(3)).ok

    def test_zero_matrix_rejected_with_row_report(self):
        report = verify_plane_axioms(BinaryMatrix.zeros(7, 7), PlaneParams.for_order(2))
        assert not report.ok
        assert any(v.startswith("row-sum row=1") for v in report.violations)

    def test_single_bit_flips_all_rejected(self):
        fano = fano_matrix()
        params = PlaneParams.for_order(2)
        for i in range(7):
            for j in range(7):
                rows = list(fano.row_bits)
                rows[i] ^= 1 << (fano.cols - 1 - j)
                flipped = BinaryMatrix(7, 7, tuple(rows))
                report = verify_plane_axioms(flipped, params)
                assert not report.ok
        # a flip that keeps sums impossible, so some pairwise report must
        # appear whenever sums survive; spot-check one double flip
        rows = list(fano.row_bits)
        sup = fano.row_support(0)
        rows[0] ^= (1 << (6 - sup[0])) | (1 << (6 - ((sup[0] + 1) % 7)))
        # not asserting sums here; just that the checker runs on it
        verify_plane_axioms(BinaryMatrix(7, 7, tuple(rows)), params)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            verify_plane_axioms(BinaryMatrix.zeros(6, 7), PlaneParams.for_order(2))


class TestProfile:
    def test_k_profile_of_top_case(self):
        ks = k_profile(A1_TOP)
        assert ks[:5] == (4, 3, 1, 1, 1)
        assert sum(ks) == 30
        assert a2_column_targets(A1_TOP)[:5] == (1, 3, 7, 7, 7)

    def test_overfull_column_rejected(self):
        bad = BinaryMatrix.from_rows(
            ["1111100000000000000"] * 5 + ["0000011111000000000"])
        # five rows sharing five columns: k=5 in column 1
        with pytest.raises(Exception):
            k_profile(bad)


class TestCompleteA3:
    def test_column_targets_reached_in_lex_order(self):
        targets = a2_column_targets(A1_TOP)
        ks = k_profile(A1_TOP)
        rows = []
        deficit = list(targets)
        for r in range(37):
            picks = sorted(range(19), key=lambda j: (-deficit[j], j))[:3]
            row = [0] * 19
            for j in picks:
                assert deficit[j] > 0
                deficit[j] -= 1
                row[j] = 1
            rows.append(row)
        a2 = BinaryMatrix.from_rows(rows)
        a3 = complete_a3(A1_TOP, a2)
        assert a3.rows == 68 and a3.cols == 19
        assert a3.row_sums() == [1] * 68
        assert list(a3.row_bits) == sorted(a3.row_bits, reverse=True)
        for j in range(19):
            assert a3.col_sum(j) == ks[j] + 2
        # permuting rows of the middle band changes nothing
        a2_perm = BinaryMatrix(37, 19, tuple(reversed(a2.row_bits)))
        assert complete_a3(A1_TOP, a2_perm) == a3

    def test_overfull_column_is_infeasible(self):
        rows = [[0] * 19 for _ in range(37)]
        for r in range(37):
            rows[r][2] = 1  # column 3 takes 37 ones, far beyond its target
            rows[r][6 + (r % 13)] = 1
            rows[r][(7 + r) % 19] = 1
        with pytest.raises(InfeasibleCaseError):
            complete_a3(A1_TOP, BinaryMatrix.from_rows(rows))


class TestCompleteA4:
    def test_shape_and_row_sums(self):
        a4, block_of = complete_a4(A1_TOP)
        assert (a4.rows, a4.cols) == (6, 92)
        assert a4.row_sums() == [6] * 6
        assert len(block_of) == 92

    def test_top_case_has_no_pair_columns(self):
        # every pair of rows of A1_TOP meets inside the first 19 columns
        assert intersection_graph_edges(A1_TOP) == []
        a4, block_of = complete_a4(A1_TOP)
        assert all(len(b) != 2 for b in block_of)
        assert a4.col_sums()[:36] == [1] * 36
        assert all(len(block_of[c]) == 0 for c in range(36, 92))

    def test_pair_columns_come_first_in_pair_order(self):
        # rows 5 and 6 miss each other in the left band here
        a1 = BinaryMatrix.from_rows([
            "1111100000000000000",
            "1000011110000000000",
            "1000000001111000000",
            "1000000000000111100",
            "0100010001000100010",
            "0010001000100010001",
        ])
        edges = intersection_graph_edges(a1)
        assert (4, 5) in edges
        a4, block_of = complete_a4(a1)
        for idx, pair in enumerate(edges):
            assert block_of[idx] == frozenset(pair)
        assert a4.col_sums()[:len(edges)] == [2] * len(edges)

    def test_deterministic(self):
        assert complete_a4(A1_TOP) == complete_a4(A1_TOP)

    def test_block_labels_partition(self):
        a4, block_of = complete_a4(A1_TOP)
        for c in range(92):
            assert block_of[c] == frozenset(a4.column_support(c))


class TestWeight16:
    def test_triangle_detection(self):
        assert not has_weight16_triangle(A1_TOP)
