import numpy as np
import pytest

from adiarank.errors import DimensionError, ParseError, RangeError, StructureError
from adiarank.instances import (
    COUPLING_VALUES,
    FIELD_VALUES,
    LADDER16_EDGES,
    IsingInstance,
    SpinConfig,
    classical_energy,
    generate_ladder16,
    generate_random_chain,
    parse,
    serialize,
)


def chain(couplings, fields, delta=1.0):
    edges = tuple((i, i + 1, c) for i, c in enumerate(couplings))
    return IsingInstance(len(fields), edges, tuple(fields), delta=delta)


class TestClassicalEnergy:
    def test_single_bond(self):
        inst = chain([1.0], [0.0, 0.0])
        assert classical_energy(inst, SpinConfig((1, 1))) == 1.0

    def test_field_only(self):
        inst = IsingInstance(1, (), (0.5,))
        assert classical_energy(inst, SpinConfig((-1,))) == -0.5

    def test_three_site(self):
        inst = chain([1.0, -1.0], [0.0, 0.0, 0.0])
        assert classical_energy(inst, SpinConfig((1, -1, -1))) == -2.0

    def test_length_mismatch(self):
        inst = chain([1.0], [0.0, 0.0])
        with pytest.raises(DimensionError):
            classical_energy(inst, SpinConfig((1, 1, 1)))

    def test_global_flip_symmetry_without_fields(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            couplings = rng.choice(COUPLING_VALUES, n - 1)
            inst = chain(list(couplings), [0.0] * n)
            config = SpinConfig(tuple(int(s) for s in rng.choice([1, -1], n)))
            assert classical_energy(inst, config) == pytest.approx(
                classical_energy(inst, config.flipped()), abs=1e-12
            )

    def test_single_flip_energy_delta(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            inst = generate_random_chain(int(rng.integers(2, 15)), int(rng.integers(1e6)))
            values = [int(s) for s in rng.choice([1, -1], inst.n_sites)]
            config = SpinConfig(tuple(values))
            i = int(rng.integers(inst.n_sites))
            neighbour_term = sum(
                c * values[b] if a == i else (c * values[a] if b == i else 0.0)
                for a, b, c in inst.edges
            )
            predicted = -2.0 * values[i] * (inst.fields[i] + neighbour_term)
            flipped = list(values)
            flipped[i] = -flipped[i]
            actual = classical_energy(inst, SpinConfig(tuple(flipped))) - classical_energy(
                inst, config
            )
            assert actual == pytest.approx(predicted, abs=1e-12)


class TestValidation:
    def test_coupling_range(self):
        with pytest.raises(RangeError):
            chain([1.5], [0.0, 0.0])

    def test_field_range(self):
        with pytest.raises(RangeError):
            chain([0.5], [0.0, 2.5])

    def test_duplicate_edge(self):
        with pytest.raises(StructureError):
            IsingInstance(2, ((0, 1, 0.5), (1, 0, 0.5)), (0.0, 0.0))

    def test_chain_needs_consecutive_edges(self):
        with pytest.raises(StructureError):
            IsingInstance(3, ((0, 2, 0.5), (0, 1, 0.5)), (0.0, 0.0, 0.0))

    def test_delta_positive(self):
        with pytest.raises(RangeError):
            chain([0.5], [0.0, 0.0], delta=0.0)

    def test_spin_values(self):
        with pytest.raises(RangeError):
            SpinConfig((1, 0))


class TestGenerators:
    def test_chain_values_in_sets(self):
        inst = generate_random_chain(100, 12345)
        assert inst.n_sites == 100
        assert len(inst.edges) == 99
        assert all(e[2] in COUPLING_VALUES for e in inst.edges)
        assert all(h in FIELD_VALUES for h in inst.fields)

    def test_smallest_chain(self):
        inst = generate_random_chain(2, 9)
        assert len(inst.edges) == 1 and len(inst.fields) == 2

    def test_determinism(self):
        assert generate_random_chain(40, 77) == generate_random_chain(40, 77)
        assert generate_ladder16(77) == generate_ladder16(77)

    def test_length_below_two_rejected(self):
        with pytest.raises(ValueError):
            generate_random_chain(1, 0)

    def test_ladder_topology_fixed(self):
        a, b = generate_ladder16(1), generate_ladder16(2)
        assert a.n_sites == 16
        pairs = lambda inst: [(i, j) for i, j, _ in inst.edges]
        assert pairs(a) == pairs(b) == list(LADDER16_EDGES)
        assert a != b  # values differ
        assert len(LADDER16_EDGES) == 19  # 8 rungs + 11 retained leg links

    def test_generator_marginals(self):
        # over >= 10^4 draws each J magnitude ~ 1/10, h = 0 ~ 1/11 (3 sigma)
        draws = 500
        n = 21
        couplings, zeros = [], 0
        for seed in range(draws):
            inst = generate_random_chain(n, 900000 + seed)
            couplings.extend(e[2] for e in inst.edges)
            zeros += sum(1 for h in inst.fields if h == 0.0)
        n_couplings = draws * (n - 1)
        n_fields = draws * n
        assert n_couplings >= 10**4
        for value in COUPLING_VALUES:
            count = sum(1 for c in couplings if c == value)
            p = 1.0 / 10.0
            sigma = np.sqrt(n_couplings * p * (1 - p))
            assert abs(count - n_couplings * p) < 3 * sigma
        p = 1.0 / 11.0
        sigma = np.sqrt(n_fields * p * (1 - p))
        assert abs(zeros - n_fields * p) < 3 * sigma


class TestSerialization:
    def test_round_trip_random(self):
        for seed in range(5):
            inst = generate_random_chain(17, seed)
            assert parse(serialize(inst)) == inst
        lad = generate_ladder16(3)
        assert parse(serialize(lad)) == lad

    def test_round_trip_preserves_floats(self):
        inst = chain([0.1234567890123456], [0.0, -1.9999999999999998])
        assert parse(serialize(inst)) == inst

    def test_range_error_on_bad_coupling(self):
        text = "ising v1 N=2 topology=chain delta=1.0\nh 0 0.0\nh 1 0.0\nJ 0 1 1.5\n"
        with pytest.raises(RangeError):
            parse(text)

    def test_duplicate_edge_rejected(self):
        text = (
            "ising v1 N=2 topology=chain delta=1.0\n"
            "h 0 0.0\nh 1 0.0\nJ 0 1 0.5\nJ 1 0 0.5\n"
        )
        with pytest.raises(StructureError):
            parse(text)

    def test_parse_error_names_line(self):
        text = "ising v1 N=2 topology=chain delta=1.0\nh 0 0.0\nh 1 bad\n"
        with pytest.raises(ParseError) as err:
            parse(text)
        assert err.value.line == 3

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse("h 0 0.0\n")

    def test_duplicate_field_line(self):
        text = "ising v1 N=1 topology=chain delta=1.0\nh 0 0.0\nh 0 0.1\n"
        with pytest.raises(ParseError):
            parse(text)
