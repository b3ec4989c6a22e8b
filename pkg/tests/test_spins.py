import numpy as np
import pytest

from adiarank.errors import DimensionError
from adiarank.instances import IsingInstance, SpinConfig, generate_random_chain
from adiarank.oracle import ground_state_chain_dp
from adiarank.schedule import AnnealSchedule, constant_schedule, default_schedule
from adiarank.spins import (
    ClassicalSpinState,
    DynamicsParams,
    effective_field,
    gradient_descent_anneal,
    llg_step,
    metropolis_anneal,
    metropolis_sweep,
    minus_x_state,
    sign_readout,
    spin_energy,
)

from oracles import gibbs_sphere_average, gibbs_sphere_bin_probs, batch_mean_stderr


def single_spin(h):
    return IsingInstance(1, (), (h,))


def state_of(*vectors):
    return ClassicalSpinState(np.array(vectors, dtype=float))


class TestEffectiveField:
    def test_field_term_only(self):
        grad = effective_field(single_spin(0.7), (0.0, 1.0), state_of([0, 0, 1]))
        assert np.allclose(grad, [[0.0, 0.0, 0.7]])

    def test_transverse_only(self):
        inst = generate_random_chain(4, 0)
        state = minus_x_state(4)
        grad = effective_field(inst, (1.0, 0.0), state)
        assert np.allclose(grad, [[1.0, 0.0, 0.0]] * 4)

    def test_mixed_two_site(self):
        inst = IsingInstance(2, ((0, 1, 1.0),), (0.0, 0.0))
        state = state_of([0, 0, 1], [0, 0, -1])
        grad = effective_field(inst, (0.5, 0.5), state)
        assert np.allclose(grad, [[0.5, 0, -0.5], [0.5, 0, 0.5]])

    def test_size_mismatch(self):
        with pytest.raises(DimensionError):
            effective_field(single_spin(0.1), (1.0, 0.0), minus_x_state(2))


class TestLlgDeterministic:
    def test_free_precession_matches_closed_form(self):
        # B_eff = +z from h = -1, A = 0: n(t) rotates about z at unit rate
        inst = single_spin(-1.0)
        point = (0.0, 1.0)
        errors = {}
        for dt in (0.02, 0.01):
            params = DynamicsParams(gamma=0.0, temperature=0.0, dt=dt)
            state = state_of([1.0, 0.0, 0.0])
            worst = 0.0
            steps = int(round(2.0 / dt))
            for k in range(1, steps + 1):
                state = llg_step(state, inst, point, params)
                t = k * dt
                exact = np.array([np.cos(t), -np.sin(t), 0.0])
                worst = max(worst, np.linalg.norm(state.vectors[0] - exact))
            errors[dt] = worst
        assert errors[0.01] < 1e-4
        # halving dt divides the accumulated error by ~4 (second order)
        assert 3.0 < errors[0.02] / errors[0.01] < 5.0

    def test_damped_spin_relaxes_to_field_direction(self):
        inst = single_spin(-1.0)  # H = -n^z, minimum at +z
        point = (0.0, 1.0)
        params = DynamicsParams(gamma=0.5, temperature=0.0, dt=0.01)
        state = state_of([np.sin(2.5), 0.0, np.cos(2.5)])
        energies = [spin_energy(inst, point, state)]
        for _ in range(3000):
            state = llg_step(state, inst, point, params)
            energies.append(spin_energy(inst, point, state))
        assert state.vectors[0, 2] > 0.999
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-12)

    def test_norm_preserved(self):
        inst = generate_random_chain(6, 8)
        params = DynamicsParams(gamma=0.3, temperature=0.4, dt=0.01, seed=5)
        rng = np.random.default_rng(5)
        state = minus_x_state(6)
        for k in range(200):
            state = llg_step(state, inst, (0.5, 0.5), params, rng, k)
            assert state.norm_deviation() <= 1e-9

    def test_energy_conserved_without_damping(self):
        # gamma = 0, T = 0: H drift per step is O(dt^2)
        inst = generate_random_chain(5, 3)
        point = (0.6, 0.4)
        drifts = {}
        for dt in (0.02, 0.01, 0.005):
            params = DynamicsParams(gamma=0.0, temperature=0.0, dt=dt)
            rng = np.random.default_rng(1)
            vectors = rng.standard_normal((5, 3))
            vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
            state = ClassicalSpinState(vectors)
            e0 = spin_energy(inst, point, state)
            worst = 0.0
            prev = e0
            for _ in range(int(round(1.0 / dt))):
                state = llg_step(state, inst, point, params)
                e = spin_energy(inst, point, state)
                worst = max(worst, abs(e - prev))
                prev = e
            drifts[dt] = worst
        # fitted second-order constant: drift(dt) <= C dt^2 with stable C
        c_est = max(v / dt**2 for dt, v in drifts.items())
        for dt, v in drifts.items():
            assert v <= 1.5 * c_est * dt**2


@pytest.mark.slow
class TestLlgThermal:
    def test_single_spin_gibbs_average(self):
        # long-run <n^z> against direct sphere quadrature, 3 sigma (batch means)
        field, gamma, temp = 1.0, 0.5, 0.2
        inst = single_spin(-field)
        params = DynamicsParams(gamma=gamma, temperature=temp, dt=0.005, seed=42)
        rng = np.random.default_rng(42)
        coupling = inst.coupling_matrix()
        state = state_of([0.0, 0.0, 1.0])
        n_steps = 10**6
        burn = n_steps // 10
        samples = np.empty(n_steps - burn)
        for k in range(n_steps):
            state = llg_step(state, inst, (0.0, 1.0), params, rng, k, coupling)
            if k >= burn:
                samples[k - burn] = state.vectors[0, 2]
        mean, stderr = batch_mean_stderr(samples)
        exact = gibbs_sphere_average(field, temp)
        assert abs(mean - exact) < 3.0 * stderr


class TestGradientDescent:
    def test_fm_chain_reaches_ground_state(self):
        n = 8
        edges = tuple((i, i + 1, -1.0) for i in range(n - 1))
        inst = IsingInstance(n, edges, (-0.1,) * n)
        truth = ground_state_chain_dp(inst)
        config, _ = gradient_descent_anneal(inst, default_schedule(40.0), steps=2000)
        assert truth.contains(config)

    def test_z_axis_is_fixed_point_without_transverse_drive(self):
        inst = generate_random_chain(6, 2)
        schedule = constant_schedule(10.0, 0.0, 1.0)
        start = np.zeros((6, 3))
        start[:, 2] = [1, -1, 1, 1, -1, 1]
        config, _ = gradient_descent_anneal(
            inst, schedule, steps=500, state0=ClassicalSpinState(start)
        )
        assert config.values == (1, -1, 1, 1, -1, 1)

    def test_mean_field_trap_instance_fails(self):
        # frozen chi* = 2 instance: rank-1 TEBD fails on it at every grid time
        # (see test_tebd.py) and so does noiseless gradient descent
        inst = generate_random_chain(8, 226)
        truth = ground_state_chain_dp(inst)
        config, _ = gradient_descent_anneal(inst, default_schedule(80.0), steps=4000)
        assert not truth.contains(config)


class TestMetropolis:
    def test_needs_positive_temperature(self):
        inst = single_spin(0.5)
        with pytest.raises(ValueError):
            metropolis_anneal(
                inst, default_schedule(1.0), 10, DynamicsParams(temperature=0.0)
            )

    def test_single_spin_detailed_balance(self):
        # empirical n^z histogram at fixed (A, B) vs Gibbs quadrature, 3 sigma
        field, temp = 1.0, 0.5
        inst = single_spin(-field)
        rng = np.random.default_rng(7)
        state = state_of([0.0, 0.0, 1.0])
        edges = np.linspace(-1.0, 1.0, 9)
        sweeps, burn = 40000, 2000
        samples = []
        for k in range(sweeps):
            metropolis_sweep(state, inst, (0.0, 1.0), temp, rng)
            if k >= burn:
                samples.append(state.vectors[0, 2])
        counts, _ = np.histogram(samples, bins=edges)
        probs = gibbs_sphere_bin_probs(field, temp, edges)
        total = len(samples)
        # fresh-direction proposals decorrelate fast; allow a small ESS margin
        ess = total / 4.0
        for count, p in zip(counts, probs):
            sigma = np.sqrt(ess * p * (1 - p))
            assert abs(count / total * ess - ess * p) < 3.5 * sigma

    def test_high_temperature_accepts_everything(self):
        inst = generate_random_chain(10, 1)
        params = DynamicsParams(temperature=1e6, dt=0.01, seed=3)
        _, stats = metropolis_anneal(
            inst, default_schedule(10.0), 200, params, return_stats=True
        )
        assert stats["acceptance_rate"] > 0.99

    def test_fm_chain_low_temperature_ground_state(self):
        n = 6
        edges = tuple((i, i + 1, -1.0) for i in range(n - 1))
        inst = IsingInstance(n, edges, (-0.1,) * n)
        truth = ground_state_chain_dp(inst)
        hits = 0
        for seed in range(100):
            params = DynamicsParams(temperature=0.1, dt=0.01, seed=seed)
            config = metropolis_anneal(inst, default_schedule(30.0), 1500, params)
            hits += int(truth.contains(config))
        assert hits > 90


class TestReadout:
    def test_sign_readout_ties_to_plus(self):
        state = state_of([1.0, 0.0, 0.0], [0.0, 0.0, -0.2], [0.0, 0.0, 0.3])
        assert sign_readout(state) == SpinConfig((1, -1, 1))
