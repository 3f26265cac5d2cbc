import random

import pytest

from gridrec.bicluster import (
    Bicluster,
    BiclusterParams,
    bibit_enumerate,
    bimax_enumerate,
    brute_force_maximal_biclusters,
    sample_biclusters,
    verify_all_ones,
)
from gridrec.ingest import BinaryMatrix


def matrix_from_strings(rows):
    """Rows as bit strings, char j = item j ('1100' means items {0, 1})."""
    n_items = len(rows[0])
    masks = [sum(1 << j for j, ch in enumerate(r) if ch == "1") for r in rows]
    n_users = len(rows)
    return BinaryMatrix(
        n_users,
        n_items,
        masks,
        list(range(1, n_users + 1)),
        list(range(1, n_items + 1)),
        {u + 1: u for u in range(n_users)},
        {i + 1: i for i in range(n_items)},
    )


def random_matrix(rng, side, density):
    rows = ["".join("1" if rng.random() < density else "0" for _ in range(side)) for _ in range(side)]
    return matrix_from_strings(rows)


def as_sets(biclusters):
    return {(b.users, b.items) for b in biclusters}


class TestBimax:
    def test_all_ones_2x2(self):
        m = matrix_from_strings(["11", "11"])
        out = bimax_enumerate(m, BiclusterParams("bimax", 1, 1))
        assert as_sets(out) == {(frozenset({0, 1}), frozenset({0, 1}))}

    def test_identity_3x3_no_2x2(self):
        m = matrix_from_strings(["100", "010", "001"])
        assert bimax_enumerate(m, BiclusterParams("bimax", 2, 2)) == []

    def test_hand_instance(self):
        m = matrix_from_strings(["1100", "1110", "0110"])
        out = bimax_enumerate(m, BiclusterParams("bimax", 2, 2))
        assert as_sets(out) == {
            (frozenset({0, 1}), frozenset({0, 1})),
            (frozenset({1, 2}), frozenset({1, 2})),
        }

    def test_matches_oracle_spot(self):
        rng = random.Random(7)
        for _ in range(20):
            m = random_matrix(rng, 8, 0.4)
            p = BiclusterParams("bimax", 2, 2)
            assert as_sets(bimax_enumerate(m, p)) == as_sets(brute_force_maximal_biclusters(m, p))

    def test_all_emitted_are_all_ones_and_maximal(self):
        rng = random.Random(3)
        m = random_matrix(rng, 10, 0.5)
        out = bimax_enumerate(m, BiclusterParams("bimax", 1, 1))
        for b in out:
            assert verify_all_ones(m, b)
            # no row can be added
            for u in set(range(m.n_users)) - b.users:
                assert not all(m.entry(u, i) for i in b.items)
            # no column can be added
            for i in set(range(m.n_items)) - b.items:
                assert not all(m.entry(u, i) for u in b.users)

    def test_deterministic_order(self):
        rng = random.Random(11)
        m = random_matrix(rng, 9, 0.4)
        p = BiclusterParams("bimax", 1, 1)
        assert bimax_enumerate(m, p) == bimax_enumerate(m, p)

    def test_cap_respected(self):
        m = matrix_from_strings(["111", "111", "111"])
        out = bimax_enumerate(m, BiclusterParams("bimax", 1, 1, max_enumerate=1))
        assert len(out) == 1

    def test_zero_cap_rejected(self):
        with pytest.raises(ValueError):
            BiclusterParams("bimax", 1, 1, max_enumerate=0)


class TestBibit:
    def test_pair_and_pattern(self):
        m = matrix_from_strings(["1100", "1101"])
        out = bibit_enumerate(m, BiclusterParams("bibit", 1, 2))
        assert as_sets(out) == {(frozenset({0, 1}), frozenset({0, 1}))}

    def test_disjoint_supports(self):
        m = matrix_from_strings(["1010", "0101"])
        assert bibit_enumerate(m, BiclusterParams("bibit", 1, 1)) == []

    def test_three_equal_rows(self):
        m = matrix_from_strings(["1110", "1110", "1110"])
        out = bibit_enumerate(m, BiclusterParams("bibit", 3, 3))
        assert as_sets(out) == {(frozenset({0, 1, 2}), frozenset({0, 1, 2}))}

    def test_single_row_rejected(self):
        m = matrix_from_strings(["111"])
        with pytest.raises(ValueError):
            bibit_enumerate(m, BiclusterParams("bibit", 1, 1))

    def test_item_set_is_and_of_rows(self):
        rng = random.Random(5)
        m = random_matrix(rng, 12, 0.5)
        for b in bibit_enumerate(m, BiclusterParams("bibit", 1, 1)):
            assert verify_all_ones(m, b)
            pattern = (1 << m.n_items) - 1
            for u in b.users:
                pattern &= m.rows[u]
            assert b.items == frozenset(j for j in range(m.n_items) if (pattern >> j) & 1)


class TestOracle:
    def test_all_zeros(self):
        m = matrix_from_strings(["000", "000"])
        assert brute_force_maximal_biclusters(m, BiclusterParams("bimax", 1, 1)) == []

    def test_single_row(self):
        m = matrix_from_strings(["111"])
        out = brute_force_maximal_biclusters(m, BiclusterParams("bimax", 1, 2))
        assert as_sets(out) == {(frozenset({0}), frozenset({0, 1, 2}))}

    def test_size_cap(self):
        m = matrix_from_strings(["1" * 17] * 2)
        with pytest.raises(ValueError):
            brute_force_maximal_biclusters(m, BiclusterParams("bimax", 1, 1))


class TestSampling:
    def biclusters(self, k):
        return [Bicluster(frozenset({i}), frozenset({i})) for i in range(k)]

    def test_identity_selection(self):
        bs = self.biclusters(400)
        assert sample_biclusters(bs, 400, seed=0) == bs

    def test_determinism(self):
        bs = self.biclusters(10_000)
        assert sample_biclusters(bs, 400, 5) == sample_biclusters(bs, 400, 5)

    def test_seeds_differ(self):
        bs = self.biclusters(10_000)
        a = sample_biclusters(bs, 400, 1)
        b = sample_biclusters(bs, 400, 2)
        assert len(a) == len(b) == 400
        assert a != b

    def test_stable_index_order(self):
        bs = self.biclusters(100)
        picked = sample_biclusters(bs, 30, 3)
        idx = [next(i for i, b in enumerate(bs) if b == p) for p in picked]
        assert idx == sorted(idx)

    def test_insufficient(self):
        with pytest.raises(ValueError, match="min_rows"):
            sample_biclusters(self.biclusters(3), 4, 0)
