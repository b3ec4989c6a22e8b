"""Trotterised adiabatic evolution at fixed Schmidt rank, and its classifiers.

One time step applies the second-order splitting

    odd bonds (dt/2)  ->  even bonds (dt)  ->  odd bonds (dt/2)

with every bond gate exp(-i dt h_bond) built from the instantaneous (A, B) at
the step midpoint.  One-site terms are folded into the bond gates
half-left/half-right (boundary sites put full weight on their single bond).
Every gate is followed by truncation to the fixed rank chi and
renormalisation.  This zero-noise, zero-dissipation evolution is the
classifier engine: chi* is the smallest rank whose readout reaches the exact
Ising minimum for any sweep time on the grid.

The default sweep-time unit T0 = 10 * N (dimensionless) and the default
dt = 0.02 are configuration choices, not published values.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBlowupError
from .hamiltonian import LocalTerms
from .instances import IsingInstance, SpinConfig
from .mps import (
    RANK_EPS,
    MpsState,
    apply_two_site,
    canonicalize,
    expectation_energy,
    product_init,
    readout_config,
)
from .oracle import GroundTruth, solve
from .schedule import AnnealSchedule, default_schedule

DEFAULT_DT = 0.02
DEFAULT_T0_FACTOR = 10.0
DEFAULT_CHI_LIST = (1, 2, 3, 4)
DEFAULT_TIME_MULTIPLIERS = (1, 2, 4, 8)
ENERGY_FALLBACK_TOL = 1e-6


@dataclass
class RunRecord:
    """Outcome of one (instance, chi, sweep time) annealing run."""

    instance_id: str
    chi: int
    sweep_time: float
    dt: float
    success: bool
    final_energy: float
    ground_energy: float
    residual: float
    max_discarded_weight: float
    readout: SpinConfig
    engine: str = "tebd"
    seed: int | None = None


def two_site_gate(h_bond: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i dt h) for a Hermitian local term, unitary to machine precision."""
    h = np.asarray(h_bond, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("local Hamiltonian must be a square matrix")
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("local Hamiltonian must be Hermitian")
    eigvals, eigvecs = np.linalg.eigh(h)
    return (eigvecs * np.exp(-1j * dt * eigvals)) @ eigvecs.conj().T


def _batched_gates(eigvals, eigvecs, dt):
    phases = np.exp(-1j * dt * eigvals)
    return np.matmul(eigvecs * phases[:, None, :], eigvecs.conj().transpose(0, 2, 1))


class TebdStepper:
    """Reusable Trotter stepper for one (instance, chi, dt).

    The whole sweep runs on zero-padded fixed-chi arrays so each parity layer
    is one set of batched numpy calls; padded directions carry exactly zero
    Schmidt weight and never influence the physical state.  The bond update
    avoids SVDs: the kept right singular vectors and weights come from a
    Hermitian eigendecomposition of theta^dagger theta, and the left tensor is
    recovered inverse-free by contracting the gated pair with them.
    """

    def __init__(self, instance: IsingInstance, chi: int, dt: float,
                 terms: LocalTerms | None = None):
        if chi < 1:
            raise ValueError("chi must be at least 1")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.instance = instance
        self.chi = chi
        self.dt = dt
        self.terms = terms if terms is not None else LocalTerms(instance)
        n = self.terms.n_sites
        self.n_sites = n
        if n > 1:
            hx = self.terms.bond_hamiltonians(1.0, 0.0)
            hz = self.terms.bond_hamiltonians(0.0, 1.0)
            # the Pauli stacks are real symmetric; keep them real for eigh speed
            if abs(hx.imag).max() == 0.0 and abs(hz.imag).max() == 0.0:
                hx, hz = hx.real, hz.real
            self._hx, self._hz = hx, hz
            self._odd = np.arange(1, n - 1, 2)
            self._even = np.arange(0, n - 1, 2)
        else:
            self._hx = self._hz = None
        self._tensors = None  # (n, chi, d, chi) padded site tensors
        self._lam_left = None  # (n, chi) spectrum left of each site

    # -- padded-representation plumbing -------------------------------------

    def pack(self, state: MpsState) -> None:
        """Load an MpsState into the padded work arrays."""
        chi, d = self.chi, self.terms.phys_dim
        n = self.n_sites
        if state.n_sites != n:
            raise ValueError("state does not match the instance layout")
        self._tensors = np.zeros((n, chi, d, chi), dtype=complex)
        self._lam_left = np.zeros((n, chi))
        self._lam_left[0, 0] = 1.0
        for k, tensor in enumerate(state.tensors):
            chi_l, _, chi_r = tensor.shape
            if chi_l > chi or chi_r > chi:
                raise ValueError(f"state rank exceeds chi={chi} at site {k}")
            self._tensors[k, :chi_l, :, :chi_r] = tensor
            if k > 0:
                spec = state.spectra[k - 1]
                self._lam_left[k, : len(spec)] = spec

    def unpack(self) -> MpsState:
        """Extract an MpsState, trimming exactly-negligible padded directions."""
        chi = self.chi
        ranks = [1] * (self.n_sites + 1)
        for k in range(1, self.n_sites):
            alive = np.nonzero(self._lam_left[k] > RANK_EPS)[0]
            ranks[k] = int(alive[-1]) + 1 if len(alive) else 1
        tensors = []
        spectra = []
        for k in range(self.n_sites):
            tensors.append(self._tensors[k, : ranks[k], :, : ranks[k + 1]].copy())
            if k > 0:
                spectra.append(self._lam_left[k, : ranks[k]].copy())
        return MpsState(tensors, spectra, chi, layout=_layout_of(self.instance))

    # -- time stepping -------------------------------------------------------

    def _layer(self, bonds: np.ndarray, gates: np.ndarray) -> float:
        """Apply one parity layer of bond gates; returns max discarded weight."""
        chi, d = self.chi, self.terms.phys_dim
        b1 = self._tensors[bonds].reshape(-1, chi * d, chi)
        b2 = self._tensors[bonds + 1].reshape(-1, chi, d * chi)
        pair = np.matmul(b1, b2)  # (m, chi*d, d*chi)
        m = pair.shape[0]
        work = pair.reshape(m, chi, d, d, chi).transpose(0, 2, 3, 1, 4)
        work = np.matmul(gates[bonds], work.reshape(m, d * d, chi * chi))
        pair = (
            work.reshape(m, d, d, chi, chi)
            .transpose(0, 3, 1, 2, 4)
            .reshape(m, chi, d * d * chi)
        )
        theta = (self._lam_left[bonds, :, None] * pair).reshape(m, chi * d, d * chi)
        gram = np.matmul(theta.conj().transpose(0, 2, 1), theta)
        try:
            evals, evecs = np.linalg.eigh(gram)  # ascending
        except np.linalg.LinAlgError as err:
            raise NumericalBlowupError(f"bond eigensolve failed: {err}") from err
        weights = np.maximum(evals[:, ::-1], 0.0)  # descending lambda^2
        total = weights.sum(axis=1)
        kept = weights[:, :chi].sum(axis=1)
        if not np.all(kept > 0.0) or not np.all(np.isfinite(kept)):
            bad = int(bonds[int(np.argmin(kept))])
            raise NumericalBlowupError("norm collapse during bond update", bond=bad)
        right_vecs = evecs[:, :, ::-1][:, :, :chi]  # top-chi columns
        new_b1 = np.matmul(pair.reshape(m, chi * d, d * chi), right_vecs)
        new_b1 /= np.sqrt(kept)[:, None, None]
        self._tensors[bonds] = new_b1.reshape(m, chi, d, chi)
        self._tensors[bonds + 1] = (
            right_vecs.conj().transpose(0, 2, 1).reshape(m, chi, d, chi)
        )
        self._lam_left[bonds + 1] = np.sqrt(weights[:, :chi] / kept[:, None])
        return float(np.max(1.0 - kept / total))

    def step_packed(self, a: float, b: float) -> float:
        """One second-order Trotter step at fixed (A, B) on the packed state.

        Layer order: odd bonds (dt/2), even bonds (dt), odd bonds (dt/2);
        returns the max discarded weight over all bond updates.
        """
        if not (np.isfinite(a) and np.isfinite(b)):
            raise NumericalBlowupError(f"non-finite schedule point ({a}, {b})")
        hams = a * self._hx + b * self._hz
        try:
            eigvals, eigvecs = np.linalg.eigh(hams)
        except np.linalg.LinAlgError as err:
            raise NumericalBlowupError(f"gate eigensolve failed: {err}") from err
        worst = 0.0
        if len(self._odd):
            half = _batched_gates(eigvals, eigvecs, 0.5 * self.dt)
            worst = self._layer(self._odd, half)
        full = _batched_gates(eigvals, eigvecs, self.dt)
        worst = max(worst, self._layer(self._even, full))
        if len(self._odd):
            worst = max(worst, self._layer(self._odd, half))
        return worst

    @property
    def use_padded(self) -> bool:
        # padding to chi wastes work once chi exceeds the typical true rank
        return self._hx is not None and self.chi <= 8

    def step(self, state: MpsState, a: float, b: float) -> float:
        """One Trotter step on an MpsState; returns max discarded weight."""
        if not (np.isfinite(a) and np.isfinite(b)):
            raise NumericalBlowupError(f"non-finite schedule point ({a}, {b})")
        if self._hx is None:  # single site: exact one-site exponential
            gate = two_site_gate(self.terms.site_op(0, a, b), self.dt)
            state.tensors[0] = np.tensordot(
                state.tensors[0], gate, axes=(1, 1)
            ).transpose(0, 2, 1)
            return 0.0
        if not self.use_padded:
            return _step_sequential(state, self, a, b)
        self.pack(state)
        worst = self.step_packed(a, b)
        out = self.unpack()
        state.tensors = out.tensors
        state.spectra = out.spectra
        return worst


def _layout_of(instance: IsingInstance):
    from .mps import LAYOUT_CHAIN, LAYOUT_HYPER
    from .instances import LADDER16

    return LAYOUT_HYPER if instance.topology == LADDER16 else LAYOUT_CHAIN


def _step_sequential(state: MpsState, stepper: TebdStepper, a: float, b: float) -> float:
    """Reference implementation of one Trotter step via per-bond updates."""
    hams = a * stepper._hx + b * stepper._hz
    eigvals, eigvecs = np.linalg.eigh(hams)
    half = _batched_gates(eigvals, eigvecs, 0.5 * stepper.dt)
    full = _batched_gates(eigvals, eigvecs, stepper.dt)
    worst = 0.0
    for bond in stepper._odd:
        worst = max(worst, apply_two_site(state, bond, half[bond], stepper.chi)[0])
    for bond in stepper._even:
        worst = max(worst, apply_two_site(state, bond, full[bond], stepper.chi)[0])
    for bond in stepper._odd:
        worst = max(worst, apply_two_site(state, bond, half[bond], stepper.chi)[0])
    return worst


def _finish_run(
    state: MpsState,
    instance: IsingInstance,
    terms: LocalTerms,
    ground_truth: GroundTruth,
    instance_id: str,
    chi: int,
    sweep_time: float,
    dt: float,
    max_discarded: float,
    engine: str,
    seed: int | None,
) -> RunRecord:
    canonicalize(state)
    readout = readout_config(state)
    final_energy = expectation_energy(state, instance, (0.0, 1.0), terms)
    residual = final_energy - ground_truth.energy
    success = ground_truth.contains(readout) or (
        ground_truth.capped and residual < ENERGY_FALLBACK_TOL
    )
    return RunRecord(
        instance_id=instance_id,
        chi=chi,
        sweep_time=sweep_time,
        dt=dt,
        success=success,
        final_energy=final_energy,
        ground_energy=ground_truth.energy,
        residual=residual,
        max_discarded_weight=max_discarded,
        readout=readout,
        engine=engine,
        seed=seed,
    )


def tebd_anneal(
    instance: IsingInstance,
    schedule: AnnealSchedule,
    chi: int,
    dt: float,
    ground_truth: GroundTruth | None = None,
    instance_id: str = "",
    terms: LocalTerms | None = None,
) -> tuple[MpsState, RunRecord]:
    """Anneal from the transverse product state at fixed Schmidt rank.

    The step count is round(T/dt) so the sweep ends exactly at T; the
    effective dt is recorded in the RunRecord.
    """
    total = schedule.total_time
    n_steps = max(1, round(total / dt))
    dt_eff = total / n_steps
    stepper = TebdStepper(instance, chi, dt_eff, terms=terms)
    if ground_truth is None:
        ground_truth = solve(instance)
    state = product_init(instance, chi)
    max_discarded = 0.0
    packed = stepper.use_padded
    if packed:
        stepper.pack(state)
    for k in range(n_steps):
        a, b = schedule.at((k + 0.5) * dt_eff)
        try:
            if packed:
                max_discarded = max(max_discarded, stepper.step_packed(a, b))
            else:
                max_discarded = max(max_discarded, stepper.step(state, a, b))
        except NumericalBlowupError as err:
            raise NumericalBlowupError(str(err), step=k) from err
    if packed:
        state = stepper.unpack()
    record = _finish_run(
        state, instance, stepper.terms, ground_truth, instance_id,
        chi, total, dt_eff, max_discarded, "tebd", None,
    )
    return state, record


@dataclass
class Classification:
    """chi* plus, per rank, the smallest sweep time that succeeded."""

    instance_id: str
    chi_star: int | None
    t_star: dict[int, float | None]
    records: list[RunRecord] = field(default_factory=list)

    @property
    def unclassified(self) -> bool:
        return self.chi_star is None


def default_time_grid(instance: IsingInstance, t0: float | None = None) -> tuple[float, ...]:
    if t0 is None:
        t0 = DEFAULT_T0_FACTOR * instance.n_sites
    return tuple(m * t0 for m in DEFAULT_TIME_MULTIPLIERS)


def classify_chi_star(
    instance: IsingInstance,
    chi_list=DEFAULT_CHI_LIST,
    time_list=None,
    dt: float = DEFAULT_DT,
    t0: float | None = None,
    ground_truth: GroundTruth | None = None,
    instance_id: str = "",
    schedule_factory=default_schedule,
    known_records: dict[tuple[int, float], RunRecord] | None = None,
) -> Classification:
    """Scan the (chi, sweep time) grid and extract chi* and T*(chi).

    Times are scanned in ascending order per rank and the scan stops at the
    first success, which already determines the minimal successful time;
    larger times are skipped.  ``known_records``, keyed by
    (chi, round(time, 9)), lets callers resume from persisted results.
    """
    if time_list is None:
        time_list = default_time_grid(instance, t0)
    if ground_truth is None:
        ground_truth = solve(instance)
    records = []
    t_star: dict[int, float | None] = {}
    for chi in chi_list:
        t_star[chi] = None
        for sweep_time in sorted(time_list):
            record = None
            if known_records is not None:
                record = known_records.get((chi, round(sweep_time, 9)))
            if record is None:
                _, record = tebd_anneal(
                    instance,
                    schedule_factory(sweep_time),
                    chi,
                    dt,
                    ground_truth=ground_truth,
                    instance_id=instance_id,
                )
            records.append(record)
            if record.success:
                t_star[chi] = sweep_time
                break
    successful = [chi for chi in chi_list if t_star[chi] is not None]
    return Classification(
        instance_id=instance_id,
        chi_star=min(successful) if successful else None,
        t_star=t_star,
        records=records,
    )


@dataclass
class HullTable:
    """Full success grid plus the extracted success-hull boundary."""

    instance_id: str
    records: list[RunRecord]
    boundary: dict[int, float | None]
    violations: list[tuple[int, float, float]]
    no_hull: bool


def extract_boundary(records) -> tuple[dict[int, float | None], list, bool]:
    """Minimal successful sweep time per chi, with monotonicity diagnostics.

    A violation (chi, t_ok, t_fail) records a success at t_ok followed by a
    failure at a longer time t_fail; it is reported, never repaired.
    """
    by_chi: dict[int, list] = {}
    for record in records:
        by_chi.setdefault(record.chi, []).append(record)
    boundary: dict[int, float | None] = {}
    violations = []
    for chi in sorted(by_chi):
        rows = sorted(by_chi[chi], key=lambda r: r.sweep_time)
        first_ok = next((r.sweep_time for r in rows if r.success), None)
        boundary[chi] = first_ok
        if first_ok is not None:
            for row in rows:
                if row.sweep_time > first_ok and not row.success:
                    violations.append((chi, first_ok, row.sweep_time))
    no_hull = all(t is None for t in boundary.values())
    return boundary, violations, no_hull


def success_hull(
    instance: IsingInstance,
    chi_grid,
    time_grid,
    dt: float = DEFAULT_DT,
    ground_truth: GroundTruth | None = None,
    instance_id: str = "",
    schedule_factory=default_schedule,
) -> HullTable:
    """Run the full boolean (chi, T) grid and extract the hull boundary."""
    if not chi_grid or not time_grid:
        raise ValueError("chi_grid and time_grid must be non-empty")
    if ground_truth is None:
        ground_truth = solve(instance)
    records = []
    for chi in chi_grid:
        for sweep_time in time_grid:
            _, record = tebd_anneal(
                instance,
                schedule_factory(sweep_time),
                chi,
                dt,
                ground_truth=ground_truth,
                instance_id=instance_id,
            )
            records.append(record)
    boundary, violations, no_hull = extract_boundary(records)
    return HullTable(instance_id, records, boundary, violations, no_hull)
