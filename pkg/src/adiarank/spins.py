"""Classical O(3) spin-coherent dynamics.

Three engines over the mean-field energy

    H(n; A, B) = A * delta * sum_i n^x_i
               + B * (sum_<ij> J_ij n^z_i n^z_j + sum_i h_i n^z_i)

* stochastic Landau-Lifshitz-Gilbert integration (Heun, Stratonovich),
* its zero-noise strong-dissipation limit (pure gradient descent), and
* single-site Metropolis dynamics with fresh uniform sphere proposals.

Sign convention: ``effective_field`` returns the gradient dH/dn_i; the
integrators evolve with B_eff = -dH/dn so that damping relaxes each spin
toward the locally minimising direction.  The thermal noise enters the
precession term only, which makes the long-run single-spin statistics match
the Gibbs measure exp(-H/T) on the sphere (fluctuation-dissipation).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalBlowupError
from .instances import IsingInstance, SpinConfig

NORM_TOL = 1e-9


@dataclass(frozen=True)
class DynamicsParams:
    """Damping, temperature, step size and seed for the stochastic engines."""

    gamma: float = 0.1
    temperature: float = 0.0
    dt: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


class ClassicalSpinState:
    """N unit 3-vectors; renormalised to |n_i| = 1 after every step."""

    def __init__(self, vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != 3:
            raise DimensionError("expected an (N, 3) array of spin vectors")
        self.vectors = vectors

    @property
    def n_sites(self) -> int:
        return self.vectors.shape[0]

    def copy(self) -> "ClassicalSpinState":
        return ClassicalSpinState(self.vectors.copy())

    def norm_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.vectors, axis=1) - 1.0)))


def minus_x_state(n_sites: int) -> ClassicalSpinState:
    """All spins along -x: the classical ground state of the driving term."""
    vectors = np.zeros((n_sites, 3))
    vectors[:, 0] = -1.0
    return ClassicalSpinState(vectors)


def uniform_random_state(n_sites: int, rng: np.random.Generator) -> ClassicalSpinState:
    vectors = rng.standard_normal((n_sites, 3))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return ClassicalSpinState(vectors)


def sign_readout(state: ClassicalSpinState) -> SpinConfig:
    """sign(n^z) per site, ties broken to +1."""
    return SpinConfig(tuple(1 if z >= 0 else -1 for z in state.vectors[:, 2]))


def _check_sizes(instance: IsingInstance, state: ClassicalSpinState):
    if state.n_sites != instance.n_sites:
        raise DimensionError(
            f"state has {state.n_sites} spins, instance has {instance.n_sites}"
        )


def effective_field(
    instance: IsingInstance,
    schedule_point: tuple[float, float],
    state: ClassicalSpinState,
    coupling_matrix: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient dH/dn_i = (A*delta, 0, B*(sum_j J_ij n^z_j + h_i))."""
    _check_sizes(instance, state)
    a, b = schedule_point
    if coupling_matrix is None:
        coupling_matrix = instance.coupling_matrix()
    grad = np.zeros_like(state.vectors)
    grad[:, 0] = a * instance.delta
    grad[:, 2] = b * (coupling_matrix @ state.vectors[:, 2] + np.asarray(instance.fields))
    return grad


def spin_energy(
    instance: IsingInstance,
    schedule_point: tuple[float, float],
    state: ClassicalSpinState,
    coupling_matrix: np.ndarray | None = None,
) -> float:
    """Mean-field energy H(n; A, B)."""
    _check_sizes(instance, state)
    a, b = schedule_point
    if coupling_matrix is None:
        coupling_matrix = instance.coupling_matrix()
    nz = state.vectors[:, 2]
    target = 0.5 * nz @ (coupling_matrix @ nz) + np.dot(instance.fields, nz)
    return float(a * instance.delta * np.sum(state.vectors[:, 0]) + b * target)


def _llg_rhs(vectors, grad, gamma, eta):
    beff = -grad
    rhs = np.cross(vectors, beff)
    if gamma != 0.0:
        rhs -= gamma * np.cross(vectors, np.cross(vectors, beff))
    if eta is not None:
        rhs += np.cross(vectors, eta)
    return rhs


def llg_step(
    state: ClassicalSpinState,
    instance: IsingInstance,
    schedule_point: tuple[float, float],
    params: DynamicsParams,
    rng: np.random.Generator | None = None,
    step_index: int = 0,
    coupling_matrix: np.ndarray | None = None,
) -> ClassicalSpinState:
    """One Heun (Stratonovich) step of the stochastic LLG equation.

    The Gaussian field increment is held fixed across predictor and
    corrector; its per-component variance is 2*gamma*T/dt.  Drivers doing
    many steps should pass a persistent ``rng``.
    """
    _check_sizes(instance, state)
    if coupling_matrix is None:
        coupling_matrix = instance.coupling_matrix()
    dt, gamma, temp = params.dt, params.gamma, params.temperature
    eta = None
    if gamma * temp > 0.0:
        if rng is None:
            rng = np.random.default_rng(params.seed)
        eta = rng.normal(0.0, np.sqrt(2.0 * gamma * temp / dt), size=state.vectors.shape)
    n0 = state.vectors
    f1 = _llg_rhs(n0, effective_field(instance, schedule_point, state, coupling_matrix), gamma, eta)
    predictor = ClassicalSpinState(n0 + dt * f1)
    f2 = _llg_rhs(
        predictor.vectors,
        effective_field(instance, schedule_point, predictor, coupling_matrix),
        gamma,
        eta,
    )
    new = n0 + 0.5 * dt * (f1 + f2)
    if not np.all(np.isfinite(new)):
        raise NumericalBlowupError("non-finite spin vector", step=step_index)
    new /= np.linalg.norm(new, axis=1, keepdims=True)
    return ClassicalSpinState(new)


def llg_anneal(
    instance: IsingInstance,
    schedule,
    params: DynamicsParams,
    n_steps: int | None = None,
    record_every: int = 0,
) -> tuple[SpinConfig, list[tuple[float, np.ndarray]]]:
    """Integrate the stochastic LLG along an annealing schedule.

    Returns the sign readout and, when ``record_every`` > 0, trajectory
    snapshots (t, vectors).
    """
    total = schedule.total_time
    if n_steps is None:
        n_steps = max(1, round(total / params.dt))
    dt = total / n_steps
    run_params = DynamicsParams(params.gamma, params.temperature, dt, params.seed)
    rng = np.random.default_rng(params.seed)
    coupling = instance.coupling_matrix()
    state = minus_x_state(instance.n_sites)
    trajectory = []
    for k in range(n_steps):
        point = schedule.at((k + 0.5) * dt)
        state = llg_step(state, instance, point, run_params, rng, k, coupling)
        if record_every and (k + 1) % record_every == 0:
            trajectory.append(((k + 1) * dt, state.vectors.copy()))
    return sign_readout(state), trajectory


def gradient_descent_anneal(
    instance: IsingInstance,
    schedule,
    steps: int,
    gamma: float = 1.0,
    state0: ClassicalSpinState | None = None,
    record_every: int = 0,
) -> tuple[SpinConfig, list[tuple[float, np.ndarray]]]:
    """Strong-dissipation limit: no precession, no noise, pure descent.

    Integrates dn/dt = -gamma * (dH/dn)_perp with the Heun corrector along
    the schedule and reads out sign(n^z).
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    total = schedule.total_time
    dt = total / steps
    coupling = instance.coupling_matrix()
    state = state0.copy() if state0 is not None else minus_x_state(instance.n_sites)
    trajectory = []

    def rhs(vectors, point):
        wrapped = ClassicalSpinState(vectors)
        grad = effective_field(instance, point, wrapped, coupling)
        return -gamma * np.cross(vectors, np.cross(vectors, -grad))

    for k in range(steps):
        point = schedule.at((k + 0.5) * dt)
        f1 = rhs(state.vectors, point)
        f2 = rhs(state.vectors + dt * f1, point)
        new = state.vectors + 0.5 * dt * (f1 + f2)
        if not np.all(np.isfinite(new)):
            raise NumericalBlowupError("non-finite spin vector", step=k)
        new /= np.linalg.norm(new, axis=1, keepdims=True)
        state = ClassicalSpinState(new)
        if record_every and (k + 1) % record_every == 0:
            trajectory.append(((k + 1) * dt, state.vectors.copy()))
    return sign_readout(state), trajectory


def metropolis_sweep(
    state: ClassicalSpinState,
    instance: IsingInstance,
    schedule_point: tuple[float, float],
    temperature: float,
    rng: np.random.Generator,
    coupling_matrix: np.ndarray | None = None,
) -> int:
    """One in-place sweep of single-site fresh-direction proposals.

    Returns the number of accepted moves.
    """
    _check_sizes(instance, state)
    a, b = schedule_point
    if coupling_matrix is None:
        coupling_matrix = instance.coupling_matrix()
    vectors = state.vectors
    accepted = 0
    proposals = rng.standard_normal((instance.n_sites, 3))
    norms = np.linalg.norm(proposals, axis=1)
    norms[norms < 1e-12] = 1.0
    proposals /= norms[:, None]
    randoms = rng.random(instance.n_sites)
    for i in range(instance.n_sites):
        zloc = b * (coupling_matrix[i] @ vectors[:, 2] + instance.fields[i])
        old, new = vectors[i], proposals[i]
        delta = a * instance.delta * (new[0] - old[0]) + zloc * (new[2] - old[2])
        if delta <= 0.0 or randoms[i] < np.exp(-delta / temperature):
            vectors[i] = new
            accepted += 1
    return accepted


def metropolis_anneal(
    instance: IsingInstance,
    schedule,
    sweeps: int,
    params: DynamicsParams,
    state0: ClassicalSpinState | None = None,
    return_stats: bool = False,
):
    """Metropolis annealing over O(3) vectors; schedule advanced per sweep."""
    if params.temperature <= 0:
        raise ValueError("metropolis_anneal needs T > 0; use gradient descent at T = 0")
    if sweeps < 1:
        raise ValueError("sweeps must be positive")
    rng = np.random.default_rng(params.seed)
    coupling = instance.coupling_matrix()
    state = state0.copy() if state0 is not None else minus_x_state(instance.n_sites)
    total_accepted = 0
    for k in range(sweeps):
        point = schedule.at((k + 0.5) / sweeps * schedule.total_time)
        total_accepted += metropolis_sweep(
            state, instance, point, params.temperature, rng, coupling
        )
    config = sign_readout(state)
    if return_stats:
        return config, {
            "acceptance_rate": total_accepted / (sweeps * instance.n_sites),
            "final_state": state,
        }
    return config
