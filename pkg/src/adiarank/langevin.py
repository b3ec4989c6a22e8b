"""Dissipative, noisy Langevin dynamics over the fixed-rank MPS manifold.

Experimental.  One step is operator-split into
(a) a unitary substep: one second-order Trotter step at fixed chi (the same
    stepper as the TEBD engine, so the gamma = T = 0 limit reproduces it
    float-for-float),
(b) a dissipative substep: a left-to-right sweep of single-site gradient
    updates C <- C - gamma*dt*(H_eff C - E C) in the centre gauge, where the
    tangent-space Gram matrix is the identity and H_eff comes from MPO
    environments, and
(c) a noise substep: the same sweep adding an isotropic tangent-space
    Gaussian kick, variance 2*gamma*T*dt per complex mode (gamma*T*dt per
    real component), with the parallel component projected out.

Each sweep ends with re-canonicalisation and renormalisation.  The scheme is
one member of the family of rank-restricted Langevin flows; it is validated
through its limits: the TEBD limit above, the single-spin LLG limit (where
the Bloch vector follows the classical equation for the doubled classical
energy 2<H> at the same gamma), and monotone energy descent at T = 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowupError
from .hamiltonian import LocalTerms
from .instances import IsingInstance
from .mps import MpsState, canonicalize, product_init
from .oracle import GroundTruth, solve
from .schedule import AnnealSchedule
from .tebd import RunRecord, TebdStepper, _finish_run


@dataclass(frozen=True)
class LangevinMpsParams:
    """Damping, temperature, step size, seed and Gram regularisation."""

    gamma: float = 0.0
    temperature: float = 0.0
    dt: float = 0.01
    seed: int = 0
    epsilon: float = 1e-10

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _right_environments(tensors, mpo):
    """envs[k] carries legs (bra bond, mpo bond, ket bond) left of site k."""
    n = len(tensors)
    envs = [None] * (n + 1)
    envs[n] = np.ones((1, 1, 1), dtype=complex)
    for k in range(n - 1, -1, -1):
        t = tensors[k]
        # (l, s, r) x (r', b, r) -> (l, s, r', b)
        work = np.tensordot(t, envs[k + 1], axes=(2, 2))
        # x W (a, b, s', s) -> (l, r', a, s')
        work = np.tensordot(work, mpo[k], axes=([1, 3], [3, 1]))
        # x conj(t) (l', s', r') -> (l, a, l') -> (l', a, l)
        envs[k] = np.tensordot(work, t.conj(), axes=([3, 1], [1, 2])).transpose(2, 1, 0)
    return envs


def _advance_left(env, tensor, w):
    """Left environment update with a left-canonical site tensor."""
    # env (l', a, l) x tensor (l, s, r) -> (l', a, s, r)
    work = np.tensordot(env, tensor, axes=(2, 0))
    # x W (a, b, s', s) -> (l', r, b, s')
    work = np.tensordot(work, w, axes=([1, 2], [0, 3]))
    # x conj(tensor) (l', s', r') -> (r', b, r)
    return np.tensordot(tensor.conj(), work, axes=([0, 1], [0, 3])).transpose(0, 2, 1)


def _apply_h_eff(left, w, right, c):
    # c (l, s, r) x right (r', b, r) -> (l, s, r', b)
    work = np.tensordot(c, right, axes=(2, 2))
    # x W (a, b, s', s) -> (l, r', a, s')
    work = np.tensordot(work, w, axes=([1, 3], [3, 1]))
    # x left (l', a, l) -> (r', s', l') -> (l', s', r')
    out = np.tensordot(work, left, axes=([0, 2], [2, 1]))
    return out.transpose(2, 1, 0)


def _gradient_noise_sweep(
    state: MpsState,
    terms: LocalTerms,
    schedule_point,
    rate: float,
    noise_std: float,
    rng,
    epsilon: float,
):
    """One centre-gauge sweep: gradient step (rate > 0) or noise kick (std > 0)."""
    a, b = schedule_point
    mpo = terms.mpo(a, b)
    tensors = [t.copy() for t in state.tensors]
    n = len(tensors)
    rights = _right_environments(tensors, mpo)
    left = np.ones((1, 1, 1), dtype=complex)
    center = tensors[0]
    for k in range(n):
        if rate > 0.0:
            h_c = _apply_h_eff(left, mpo[k], rights[k + 1], center)
            energy = float(np.real(np.vdot(center, h_c)))
            center = center - rate * (h_c - energy * center)
        if noise_std > 0.0:
            kick = noise_std * (
                rng.standard_normal(center.shape)
                + 1j * rng.standard_normal(center.shape)
            )
            kick -= np.vdot(center, kick) * center
            center = center + kick
        norm = np.linalg.norm(center)
        if not norm > np.sqrt(epsilon) or not np.isfinite(norm):
            raise NumericalBlowupError(
                "tangent-space update collapsed the state", bond=max(k - 1, 0)
            )
        center = center / norm
        if k < n - 1:
            chi_l, d, chi_r = center.shape
            q, r = np.linalg.qr(center.reshape(chi_l * d, chi_r))
            tensors[k] = q.reshape(chi_l, d, q.shape[1])
            left = _advance_left(left, tensors[k], mpo[k])
            center = np.tensordot(r, tensors[k + 1], axes=(1, 0))
        else:
            tensors[k] = center
    state.tensors = tensors
    canonicalize(state)


def langevin_step(
    state: MpsState,
    instance: IsingInstance,
    schedule_point,
    params: LangevinMpsParams,
    rng: np.random.Generator | None = None,
    stepper: TebdStepper | None = None,
    terms: LocalTerms | None = None,
) -> MpsState:
    """One operator-split Langevin step at fixed (A, B) (in place).

    Drivers doing many steps should pass a persistent ``rng``, ``stepper``
    and ``terms``.
    """
    if stepper is None:
        stepper = TebdStepper(instance, state.chi_max, params.dt, terms=terms)
    terms = stepper.terms
    a, b = schedule_point
    stepper.step(state, a, b)
    if params.gamma > 0.0:
        _gradient_noise_sweep(
            state, terms, schedule_point, params.gamma * params.dt, 0.0, None,
            params.epsilon,
        )
        if params.temperature > 0.0:
            if rng is None:
                rng = np.random.default_rng(params.seed)
            std = np.sqrt(params.gamma * params.temperature * params.dt)
            _gradient_noise_sweep(
                state, terms, schedule_point, 0.0, std, rng, params.epsilon
            )
    if not np.all(np.isfinite(state.tensors[0])):
        raise NumericalBlowupError("non-finite site tensor after Langevin step")
    return state


def langevin_anneal(
    instance: IsingInstance,
    schedule: AnnealSchedule,
    chi: int,
    params: LangevinMpsParams,
    ground_truth: GroundTruth | None = None,
    instance_id: str = "",
) -> RunRecord:
    """Full annealing sweep of langevin_step; same readout rule as TEBD.

    At gamma = T = 0 the run follows the TEBD engine float-for-float.
    """
    total = schedule.total_time
    n_steps = max(1, round(total / params.dt))
    dt_eff = total / n_steps
    stepper = TebdStepper(instance, chi, dt_eff)
    if ground_truth is None:
        ground_truth = solve(instance)
    rng = np.random.default_rng(params.seed)
    state = product_init(instance, chi)
    dissipative = params.gamma > 0.0
    noise_std = np.sqrt(params.gamma * params.temperature * dt_eff)
    max_discarded = 0.0
    packed = stepper.use_padded
    if packed:
        stepper.pack(state)
    for k in range(n_steps):
        point = schedule.at((k + 0.5) * dt_eff)
        try:
            if packed:
                max_discarded = max(max_discarded, stepper.step_packed(*point))
            else:
                max_discarded = max(max_discarded, stepper.step(state, *point))
            if dissipative:
                if packed:
                    state = stepper.unpack()
                _gradient_noise_sweep(
                    state, stepper.terms, point, params.gamma * dt_eff, 0.0, None,
                    params.epsilon,
                )
                if params.temperature > 0.0:
                    _gradient_noise_sweep(
                        state, stepper.terms, point, 0.0, noise_std, rng,
                        params.epsilon,
                    )
                if packed:
                    stepper.pack(state)
        except NumericalBlowupError as err:
            raise NumericalBlowupError(str(err), step=k) from err
    if packed:
        state = stepper.unpack()
    return _finish_run(
        state, instance, stepper.terms, ground_truth, instance_id,
        chi, total, dt_eff, max_discarded, "langevin", params.seed,
    )
