import numpy as np
import pytest
import scipy.linalg

from adiarank.errors import NumericalBlowupError
from adiarank.instances import IsingInstance, SpinConfig, generate_random_chain
from adiarank.mps import apply_two_site, dense_vector, product_init
from adiarank.oracle import ground_state_chain_dp
from adiarank.schedule import AnnealSchedule, default_schedule, parse_schedule
from adiarank.tebd import (
    Classification,
    RunRecord,
    TebdStepper,
    classify_chi_star,
    extract_boundary,
    success_hull,
    tebd_anneal,
    two_site_gate,
)

from oracles import dense_schrodinger, expm_taylor


def fm_chain(n, fields=-0.1):
    edges = tuple((i, i + 1, -1.0) for i in range(n - 1))
    return IsingInstance(n, edges, (fields,) * n)


TRAP_SEED = 226  # frozen chi* = 2 chain of length 8 (rank-1 fails on the grid)


class TestSchedule:
    def test_linear_midpoint(self):
        sched = default_schedule(1.0)
        assert sched.at(0.5) == (0.5, 0.5)

    def test_monotone(self):
        sched = default_schedule(10.0)
        ts = np.linspace(0, 10, 41)
        a_vals = [sched.at(t)[0] for t in ts]
        b_vals = [sched.at(t)[1] for t in ts]
        assert all(x >= y - 1e-15 for x, y in zip(a_vals, a_vals[1:]))
        assert all(x <= y + 1e-15 for x, y in zip(b_vals, b_vals[1:]))

    def test_user_knots_preserved(self):
        text = "0.0 1.0 0.05\n0.3 0.8 0.4\n1.0 0.0 1.0\n"
        sched = parse_schedule(text)
        assert sched.samples == ((0.0, 1.0, 0.05), (0.3, 0.8, 0.4), (1.0, 0.0, 1.0))
        assert sched.at(0.3) == (0.8, 0.4)

    def test_endpoint_dominance_enforced(self):
        with pytest.raises(ValueError):
            AnnealSchedule(1.0, ((0.0, 1.0, 0.5), (1.0, 0.0, 1.0)))
        with pytest.raises(ValueError):
            AnnealSchedule(1.0, ((0.0, 1.0, 0.0), (1.0, 0.5, 1.0)))

    def test_bad_total_time(self):
        with pytest.raises(ValueError):
            default_schedule(0.0)


class TestTwoSiteGate:
    def test_zero_hamiltonian_gives_identity(self):
        gate = two_site_gate(np.zeros((4, 4)), 0.3)
        assert np.allclose(gate, np.eye(4), atol=1e-14)

    def test_diagonal_hamiltonian_gives_phases(self):
        diag = np.diag([0.3, -0.7, 1.1, 0.0])
        gate = two_site_gate(diag, 0.25)
        assert np.allclose(gate, np.diag(np.exp(-1j * 0.25 * diag.diagonal())), atol=1e-14)

    def test_matches_scaling_and_squaring(self):
        rng = np.random.default_rng(4)
        for dim in (4, 16):
            h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            h = h + h.conj().T
            gate = two_site_gate(h, 0.17)
            assert np.allclose(gate, scipy.linalg.expm(-1j * 0.17 * h), atol=1e-12)
            assert np.allclose(gate, expm_taylor(-1j * 0.17 * h), atol=1e-12)

    def test_unitary(self):
        rng = np.random.default_rng(5)
        h = rng.standard_normal((4, 4))
        h = h + h.T
        gate = two_site_gate(h, 0.9)
        assert np.max(np.abs(gate.conj().T @ gate - np.eye(4))) < 1e-12

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            two_site_gate(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.1)


class TestTebdAnneal:
    def test_rank_one_solves_fm_chain(self):
        inst = fm_chain(8)
        _, record = tebd_anneal(inst, default_schedule(80.0), 1, 0.02)
        assert record.success
        assert record.readout.values == (1,) * 8

    def test_sudden_quench_fails(self):
        inst = generate_random_chain(8, TRAP_SEED)
        truth = ground_state_chain_dp(inst)
        assert truth.degeneracy == 1
        _, record = tebd_anneal(inst, default_schedule(0.5), 4, 0.02, ground_truth=truth)
        assert not record.success

    def test_full_rank_matches_dense_integration(self):
        inst = generate_random_chain(8, 3)
        schedule = default_schedule(20.0)
        state, record = tebd_anneal(inst, schedule, 16, 0.01)
        psi = dense_schrodinger(inst, schedule, dense_vector(product_init(inst)))
        fidelity = abs(np.vdot(psi, dense_vector(state))) ** 2
        assert fidelity >= 0.999
        assert record.max_discarded_weight < 1e-12

    def test_residual_nonnegative_and_energy_real(self):
        inst = generate_random_chain(10, 31)
        _, record = tebd_anneal(inst, default_schedule(30.0), 2, 0.02)
        assert record.residual >= -1e-8

    def test_norm_and_truncation_accounting(self):
        # pre-renormalisation theta deficit stays within accumulated weight
        inst = generate_random_chain(8, 17)
        schedule = default_schedule(20.0)
        stepper = TebdStepper(inst, 2, 0.02)
        state = product_init(inst, 2)
        accumulated = 0.0
        hams = stepper._hx, stepper._hz
        for k in range(1000):
            a, b = schedule.at((k + 0.5) * 0.02)
            ham = a * hams[0] + b * hams[1]
            eigvals, eigvecs = np.linalg.eigh(ham)
            for bonds, tau in (
                (stepper._odd, 0.01), (stepper._even, 0.02), (stepper._odd, 0.01)
            ):
                for bond in bonds:
                    gate = (eigvecs[bond] * np.exp(-1j * tau * eigvals[bond])) @ (
                        eigvecs[bond].conj().T
                    )
                    discarded, theta_norm = apply_two_site(state, bond, gate, 2)
                    accumulated += discarded
                    assert abs(theta_norm**2 - 1.0) <= accumulated + 1e-8
            assert state.norm() == pytest.approx(1.0, abs=1e-10)

    def test_blowup_reports_step(self):
        inst = generate_random_chain(4, 2)

        class BrokenSchedule:
            total_time = 1.0

            def at(self, t):
                return np.nan, np.nan

        with pytest.raises(NumericalBlowupError):
            tebd_anneal(inst, BrokenSchedule(), 2, 0.1)


class TestTrotterOrder:
    def test_second_order_convergence(self):
        inst = generate_random_chain(8, 12)
        schedule = default_schedule(8.0)
        psi = dense_schrodinger(
            inst, schedule, dense_vector(product_init(inst)), rtol=1e-11, atol=1e-13
        )
        deviations = []
        dts = (0.04, 0.02, 0.01)
        for dt in dts:
            state, _ = tebd_anneal(inst, schedule, 16, dt)
            overlap = abs(np.vdot(psi, dense_vector(state)))
            deviations.append(np.sqrt(max(2.0 - 2.0 * overlap, 1e-30)))
        slope = np.polyfit(np.log(dts), np.log(deviations), 1)[0]
        assert 1.7 <= slope <= 2.3


class TestChiStar:
    def test_fm_chain_is_rank_one(self):
        inst = fm_chain(8)
        cls = classify_chi_star(inst, t0=40.0)
        assert cls.chi_star == 1
        assert cls.t_star[1] == 40.0

    def test_trap_instance_needs_rank_two(self):
        inst = generate_random_chain(8, TRAP_SEED)
        cls = classify_chi_star(inst, t0=40.0)
        assert cls.chi_star == 2
        assert cls.t_star[1] is None

    def test_result_independent_of_higher_ranks(self):
        inst = generate_random_chain(8, TRAP_SEED)
        small = classify_chi_star(inst, chi_list=(1, 2), t0=40.0)
        assert small.chi_star == 2

    def test_known_records_are_reused(self):
        inst = fm_chain(6)
        first = classify_chi_star(inst, chi_list=(1,), t0=30.0)
        known = {
            (r.chi, round(r.sweep_time, 9)): r for r in first.records
        }
        again = classify_chi_star(inst, chi_list=(1,), t0=30.0, known_records=known)
        assert again.records[0] is known[(1, 30.0)]

    def test_unclassified_is_a_value(self):
        # sudden quenches on a nondegenerate instance never succeed
        inst = generate_random_chain(8, TRAP_SEED)
        cls = classify_chi_star(inst, chi_list=(1,), time_list=(0.2, 0.4))
        assert cls.unclassified
        assert cls.chi_star is None


class TestSuccessHull:
    def _record(self, chi, sweep_time, success):
        return RunRecord(
            instance_id="synthetic", chi=chi, sweep_time=sweep_time, dt=0.02,
            success=success, final_energy=0.0, ground_energy=0.0,
            residual=0.0, max_discarded_weight=0.0,
            readout=SpinConfig((1,)),
        )

    def test_planted_monotone_boundary_recovered_exactly(self):
        times = (10.0, 20.0, 40.0, 80.0)
        planted = {1: None, 2: 40.0, 3: 20.0, 4: 10.0}
        records = [
            self._record(chi, t, planted[chi] is not None and t >= planted[chi])
            for chi in (1, 2, 3, 4)
            for t in times
        ]
        boundary, violations, no_hull = extract_boundary(records)
        assert boundary == planted
        assert violations == []
        assert not no_hull

    def test_all_failure_grid_flags_no_hull(self):
        records = [self._record(chi, t, False) for chi in (1, 2) for t in (1.0, 2.0)]
        boundary, violations, no_hull = extract_boundary(records)
        assert no_hull
        assert boundary == {1: None, 2: None}

    def test_monotonicity_violation_flagged_not_repaired(self):
        records = [
            self._record(2, 10.0, True),
            self._record(2, 20.0, False),
            self._record(2, 40.0, True),
        ]
        boundary, violations, _ = extract_boundary(records)
        assert boundary[2] == 10.0
        assert violations == [(2, 10.0, 20.0)]

    def test_small_real_grid(self):
        inst = fm_chain(4)
        table = success_hull(inst, (1, 2), (10.0, 20.0), dt=0.02)
        assert len(table.records) == 4
        assert table.boundary[1] == 10.0
        assert not table.no_hull

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            success_hull(fm_chain(4), (), (10.0,))


class TestChiMonotonicity:
    # Curated instances only: rank caps beyond the exact trajectory rank give
    # byte-equivalent runs, so the 1e-8 slack is meaningful.  On generic
    # instances the chi-truncation paths diverge at the Trotter-error scale
    # and global monotonicity does NOT hold (and is not asserted).
    CURATED_SEEDS = (301, 302, 304)  # N = 3 chains: bond rank is capped at 2

    def test_residual_improves_with_rank_on_adiabatic_instances(self):
        for seed in self.CURATED_SEEDS:
            inst = generate_random_chain(3, seed)
            schedule = default_schedule(30.0)
            psi = dense_schrodinger(inst, schedule, dense_vector(product_init(inst)))
            truth = ground_state_chain_dp(inst)
            ground_weight = sum(
                abs(psi[sum((1 << (2 - i)) for i, v in enumerate(c.values) if v < 0)]) ** 2
                for c in truth.configs
            )
            assert ground_weight > 0.9  # dense oracle confirms adiabaticity
            residuals = []
            for chi in (1, 2, 3, 4):
                _, record = tebd_anneal(inst, schedule, chi, 0.02, ground_truth=truth)
                residuals.append(record.residual)
            assert residuals[0] > residuals[1]  # rank 1 is strictly worse here
            for lo, hi in zip(residuals[1:], residuals[:-1]):
                assert lo <= hi + 1e-8
