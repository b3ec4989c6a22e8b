"""Matrix product states at bounded Schmidt rank.

States are stored in right-canonical form: the wavefunction is the chain
contraction of the site tensors B_k (shape ``(chi_left, d, chi_right)``), each
satisfying sum_{s,r} B[l,s,r] conj(B[l',s,r]) = delta(l,l'), together with the
Schmidt spectrum of every bond.  With this gauge the bond spectra are
first-class data: ``schmidt_spectrum`` just returns the stored values, and the
left environment of bond b contracts to diag(lambda_b^2).

Two-site updates use the inverse-free scheme: the gate is applied to the bare
pair B_k B_{k+1}, the SVD is taken of the lambda-weighted block, and the new
left tensor is recovered by contracting the gated pair with the kept right
singular vectors.  Singular values below RANK_EPS are treated as zero for
rank decisions; degenerate values at a truncation cut are kept in the
deterministic order returned by the SVD.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalBlowupError, SizeError
from .instances import CHAIN, LADDER16, IsingInstance, SpinConfig
from .hamiltonian import LocalTerms

RANK_EPS = 1e-14
LAYOUT_CHAIN = "spin-chain"
LAYOUT_HYPER = "hyperspin-ladder"


def _svd(matrix: np.ndarray):
    try:
        return np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        # rare gesdd convergence failure; gesvd is slower but sturdier
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")


class MpsState:
    """Mutable right-canonical MPS owned by a single run."""

    def __init__(self, tensors, spectra, chi_max: int, layout: str = LAYOUT_CHAIN):
        self.tensors = list(tensors)
        self.spectra = list(spectra)
        self.chi_max = int(chi_max)
        self.layout = layout

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dim(self) -> int:
        return self.tensors[0].shape[1]

    @property
    def n_spins(self) -> int:
        return self.n_sites * (2 if self.layout == LAYOUT_HYPER else 1)

    @property
    def n_bonds(self) -> int:
        return self.n_sites - 1

    def bond_rank(self, bond: int) -> int:
        return len(self.spectra[bond])

    def max_rank(self) -> int:
        return max((len(s) for s in self.spectra), default=1)

    def copy(self) -> "MpsState":
        return MpsState(
            [t.copy() for t in self.tensors],
            [s.copy() for s in self.spectra],
            self.chi_max,
            self.layout,
        )

    def norm(self) -> float:
        """Full contraction <psi|psi>**0.5 (no canonical-form shortcut)."""
        env = np.ones((1, 1), dtype=complex)
        for tensor in self.tensors:
            half = np.tensordot(env, tensor, axes=(1, 0))  # (l', s, r)
            env = np.tensordot(tensor.conj(), half, axes=([0, 1], [0, 1]))
        return float(np.sqrt(abs(env[0, 0])))

    def check_canonical(self, tol: float = 1e-8) -> dict:
        """Max deviations of the canonical-form invariants."""
        right_dev = 0.0
        for tensor in self.tensors:
            chi_l = tensor.shape[0]
            gram = np.tensordot(tensor, tensor.conj(), axes=([1, 2], [1, 2]))
            right_dev = max(right_dev, float(np.max(np.abs(gram - np.eye(chi_l)))))
        left_dev = 0.0
        env = np.ones((1, 1), dtype=complex)
        for k in range(self.n_sites - 1):
            half = np.tensordot(env, self.tensors[k], axes=(1, 0))
            env = np.tensordot(self.tensors[k].conj(), half, axes=([0, 1], [0, 1]))
            lam2 = np.diag(self.spectra[k].astype(complex) ** 2)
            if env.shape != lam2.shape:
                left_dev = np.inf
            else:
                left_dev = max(left_dev, float(np.max(np.abs(env - lam2))))
        spec_dev = max(
            (abs(float(np.sum(s**2)) - 1.0) for s in self.spectra), default=0.0
        )
        return {
            "right_orthonormality": right_dev,
            "left_gram_vs_spectrum": left_dev,
            "spectrum_normalisation": spec_dev,
            "ok": right_dev <= tol and left_dev <= tol and spec_dev <= tol,
        }


def _hyper_label(spin_pair) -> int:
    return ((spin_pair[0] < 0) << 1) | (spin_pair[1] < 0)


def _config_labels(layout: str, n_sites: int, config) -> list[int]:
    values = tuple(config)
    n_spins = n_sites * (2 if layout == LAYOUT_HYPER else 1)
    if len(values) != n_spins:
        raise DimensionError(f"config has {len(values)} spins, state has {n_spins}")
    if layout == LAYOUT_HYPER:
        return [_hyper_label(values[2 * k : 2 * k + 2]) for k in range(n_sites)]
    return [0 if v > 0 else 1 for v in values]


def _site_labels(state: MpsState, config) -> list[int]:
    return _config_labels(state.layout, state.n_sites, config)


def product_init(instance: IsingInstance, chi_max: int = 1) -> MpsState:
    """chi = 1 start state: every spin in the -x eigenstate (delta > 0)."""
    minus_x = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
    if instance.topology == LADDER16:
        local = np.kron(minus_x, minus_x)
        n_sites = instance.n_sites // 2
        layout = LAYOUT_HYPER
    else:
        local = minus_x
        n_sites = instance.n_sites
        layout = LAYOUT_CHAIN
    tensors = [local.reshape(1, -1, 1).copy() for _ in range(n_sites)]
    spectra = [np.array([1.0]) for _ in range(n_sites - 1)]
    return MpsState(tensors, spectra, chi_max, layout)


def basis_state(instance: IsingInstance, config: SpinConfig, chi_max: int = 1) -> MpsState:
    """z-basis product state |config> as an MPS."""
    if instance.topology == LADDER16:
        n_sites, d, layout = instance.n_sites // 2, 4, LAYOUT_HYPER
    else:
        n_sites, d, layout = instance.n_sites, 2, LAYOUT_CHAIN
    labels = _config_labels(layout, n_sites, config)
    tensors = []
    for label in labels:
        t = np.zeros((1, d, 1), dtype=complex)
        t[0, label, 0] = 1.0
        tensors.append(t)
    spectra = [np.array([1.0]) for _ in range(n_sites - 1)]
    return MpsState(tensors, spectra, chi_max, layout)


def schmidt_spectrum(state: MpsState, bond: int) -> np.ndarray:
    """Descending Schmidt values of the bipartition at ``bond``."""
    if not 0 <= bond < state.n_bonds:
        raise IndexError(f"bond {bond} out of range for {state.n_sites} sites")
    return state.spectra[bond].copy()


def amplitude(state: MpsState, config) -> complex:
    """Coefficient of the z-basis configuration."""
    labels = _site_labels(state, config)
    vec = np.ones(1, dtype=complex)
    for tensor, label in zip(state.tensors, labels):
        vec = vec @ tensor[:, label, :]
    return complex(vec[0])


def dense_vector(state: MpsState, max_spins: int = 14) -> np.ndarray:
    """Exact expansion over all 2^N z-basis configurations (test support).

    Entry order follows the oracle convention: spin 0 is the most significant
    bit and bit 0 encodes spin +1.
    """
    if state.n_spins > max_spins:
        raise SizeError(f"{state.n_spins} spins exceeds the dense-vector cap {max_spins}")
    block = np.ones((1, 1), dtype=complex)
    for tensor in state.tensors:
        block = np.tensordot(block, tensor, axes=(1, 0))
        block = block.reshape(block.shape[0] * block.shape[1], block.shape[2])
    return block[:, 0]


def left_bond_weights(state: MpsState, site: int) -> np.ndarray:
    if site == 0:
        return np.array([1.0])
    return state.spectra[site - 1] ** 2


def expectation_site(state: MpsState, site: int, op: np.ndarray) -> complex:
    """<psi| op_site |psi> in canonical form."""
    tensor = state.tensors[site]
    weights = left_bond_weights(state, site)
    return complex(
        np.einsum("l,lar,ab,lbr->", weights, tensor.conj(), op, tensor, optimize=True)
    )


def expectation_bond(state: MpsState, bond: int, op2: np.ndarray) -> complex:
    """<psi| op_{bond,bond+1} |psi> for a (d^2, d^2) two-site operator."""
    b1, b2 = state.tensors[bond], state.tensors[bond + 1]
    lam = np.sqrt(left_bond_weights(state, bond)).astype(complex)
    theta = np.tensordot(lam[:, None, None] * b1, b2, axes=(2, 0))
    chi_l, d1, d2, chi_r = theta.shape
    theta = theta.reshape(chi_l, d1 * d2, chi_r)
    return complex(
        np.einsum("lar,ab,lbr->", theta.conj(), op2, theta, optimize=True)
    )


def expectation_energy(
    state: MpsState,
    instance: IsingInstance,
    schedule_point: tuple[float, float],
    terms: LocalTerms | None = None,
) -> float:
    """<psi| A H_start + B H_target |psi> by exact local contractions."""
    if terms is None:
        terms = LocalTerms(instance)
    a, b = schedule_point
    if terms.n_sites != state.n_sites:
        raise DimensionError("state does not match the instance layout")
    total = 0.0 + 0.0j
    for k in range(terms.n_sites):
        total += expectation_site(state, k, terms.site_op(k, a, b))
    for k in range(terms.n_sites - 1):
        if b != 0.0 and terms.bond_channels[k]:
            total += b * expectation_bond(state, k, terms.bond_target[k])
    return float(total.real)


def _truncated_right_factor(theta: np.ndarray, chi: int):
    """Top-``chi`` Schmidt data of a theta matrix via the smaller gram side.

    Returns (weights, right_vectors): ``weights`` are ALL squared singular
    values in descending order, ``right_vectors`` the kept right singular
    vectors as columns.  Values whose square falls below RANK_EPS^2 of the
    total are treated as rank zero and never kept.
    """
    rows, cols = theta.shape
    if cols <= rows:
        gram = theta.conj().T @ theta
        evals, evecs = np.linalg.eigh(gram)
        weights = np.maximum(evals[::-1], 0.0)
        keep = min(chi, max(1, int(np.sum(weights > RANK_EPS**2 * weights.sum()))))
        right = evecs[:, ::-1][:, :keep]
    else:
        gram = theta @ theta.conj().T
        evals, evecs = np.linalg.eigh(gram)
        weights = np.maximum(evals[::-1], 0.0)
        keep = min(chi, max(1, int(np.sum(weights > RANK_EPS**2 * weights.sum()))))
        left = evecs[:, ::-1][:, :keep]
        right = theta.conj().T @ (left / np.sqrt(np.maximum(weights[:keep], 1e-300)))
    return weights, right


def apply_two_site(
    state: MpsState,
    bond: int,
    gate: np.ndarray | None,
    chi: int,
    renormalize: bool = True,
) -> tuple[float, float]:
    """Apply a two-site gate at ``bond`` and truncate the bond to rank ``chi``.

    Returns (discarded weight, pre-update theta norm).  ``gate`` is a
    (d^2, d^2) matrix or None for the identity (pure truncation).  The update
    is in place; the state is renormalised unless ``renormalize=False``.
    """
    if chi < 1:
        raise ValueError("chi must be at least 1")
    b1, b2 = state.tensors[bond], state.tensors[bond + 1]
    chi_l, d1, _ = b1.shape
    _, d2, chi_r = b2.shape
    pair = np.tensordot(b1, b2, axes=(2, 0))  # (chi_l, d1, d2, chi_r)
    if gate is not None:
        mat = pair.transpose(1, 2, 0, 3).reshape(d1 * d2, chi_l * chi_r)
        mat = gate @ mat
        pair = mat.reshape(d1, d2, chi_l, chi_r).transpose(2, 0, 1, 3)
    lam_left = state.spectra[bond - 1] if bond > 0 else np.ones(1)
    theta = (lam_left[:, None, None, None] * pair).reshape(chi_l * d1, d2 * chi_r)
    weights, right = _truncated_right_factor(theta, chi)
    theta_norm_sq = float(weights.sum())
    if not theta_norm_sq > 1e-24 or not np.isfinite(theta_norm_sq):
        raise NumericalBlowupError("norm collapse during bond update", bond=bond)
    keep = right.shape[1]
    kept_sq = float(weights[:keep].sum())
    discarded = 1.0 - kept_sq / theta_norm_sq
    if not kept_sq > 0.0:
        raise NumericalBlowupError("norm collapse during truncation", bond=bond)
    new_b1 = pair.reshape(chi_l * d1, d2 * chi_r) @ right
    if renormalize:
        new_b1 /= np.sqrt(kept_sq)
    state.tensors[bond] = new_b1.reshape(chi_l, d1, keep)
    state.tensors[bond + 1] = right.conj().T.reshape(keep, d2, chi_r)
    norm_kept = kept_sq if renormalize else theta_norm_sq
    state.spectra[bond] = np.sqrt(weights[:keep] / norm_kept)
    return discarded, float(np.sqrt(theta_norm_sq))


def truncate_bond(state: MpsState, bond: int, chi: int) -> tuple[MpsState, float]:
    """Keep the ``chi`` largest Schmidt values at ``bond`` (in place).

    Returns (state, discarded weight).  A no-op when the current rank already
    fits.
    """
    if chi < 1:
        raise ValueError("chi must be at least 1")
    if not 0 <= bond < state.n_bonds:
        raise IndexError(f"bond {bond} out of range")
    if state.bond_rank(bond) <= chi:
        return state, 0.0
    discarded, _ = apply_two_site(state, bond, None, chi)
    return state, discarded


def canonicalize(state: MpsState) -> MpsState:
    """Restore exact right-canonical form and recompute all bond spectra.

    Pure re-gauging plus renormalisation: the physical ray is unchanged.
    """
    n = state.n_sites
    tensors = state.tensors
    # left-to-right QR pass -> left-canonical
    carry = None
    for k in range(n - 1):
        t = tensors[k] if carry is None else np.tensordot(carry, tensors[k], axes=(1, 0))
        chi_l, d, chi_r = t.shape
        q, r = np.linalg.qr(t.reshape(chi_l * d, chi_r))
        tensors[k] = q.reshape(chi_l, d, q.shape[1])
        carry = r
    if carry is not None:
        tensors[n - 1] = np.tensordot(carry, tensors[n - 1], axes=(1, 0))
    # right-to-left SVD pass -> right-canonical with fresh spectra
    for k in range(n - 1, 0, -1):
        t = tensors[k]
        chi_l, d, chi_r = t.shape
        u, s, vh = _svd(t.reshape(chi_l, d * chi_r))
        total = np.linalg.norm(s)
        if total == 0.0 or not np.isfinite(total):
            raise NumericalBlowupError("norm collapse during canonicalisation", bond=k - 1)
        keep = max(1, int(np.sum(s > RANK_EPS * s[0])))
        tensors[k] = vh[:keep].reshape(keep, d, chi_r)
        state.spectra[k - 1] = s[:keep] / np.linalg.norm(s[:keep])
        carry_left = u[:, :keep] * s[:keep]
        tensors[k - 1] = np.tensordot(tensors[k - 1], carry_left, axes=(2, 0))
    norm0 = np.linalg.norm(tensors[0])
    if norm0 == 0.0 or not np.isfinite(norm0):
        raise NumericalBlowupError("norm collapse during canonicalisation", bond=0)
    tensors[0] = tensors[0] / norm0
    return state


def readout_config(state: MpsState) -> SpinConfig:
    """Deterministic maximum-likelihood z-readout, left to right.

    Each site collapses to its most probable outcome conditioned on the
    previous collapses (first index wins ties); hyper-spin outcomes are
    unpacked to spin pairs.
    """
    vec = np.ones(1, dtype=complex)
    labels = []
    for tensor in state.tensors:
        d = tensor.shape[1]
        candidates = [vec @ tensor[:, m, :] for m in range(d)]
        probs = [float(np.real(np.vdot(c, c))) for c in candidates]
        best = int(np.argmax(probs))
        labels.append(best)
        vec = candidates[best]
        total = np.linalg.norm(vec)
        if total < 1e-300:
            raise NumericalBlowupError("zero-probability branch in readout")
        vec = vec / total
    if state.layout == LAYOUT_HYPER:
        values = []
        for m in labels:
            values.extend((1 - 2 * (m >> 1), 1 - 2 * (m & 1)))
    else:
        values = [1 - 2 * m for m in labels]
    return SpinConfig(tuple(values))


def from_dense(
    vector: np.ndarray,
    n_sites: int,
    phys_dim: int = 2,
    chi_max: int | None = None,
    layout: str = LAYOUT_CHAIN,
) -> MpsState:
    """Exact MPS factorisation of a dense state vector (test support).

    Splits sites off from the right with successive SVDs; truncates nothing
    unless ``chi_max`` is given.
    """
    vector = np.asarray(vector, dtype=complex)
    if vector.size != phys_dim**n_sites:
        raise DimensionError("vector length does not match phys_dim ** n_sites")
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ValueError("cannot factor the zero vector")
    remainder = vector / norm
    tensors: list[np.ndarray] = []
    spectra: list[np.ndarray] = []
    chi_r = 1
    for _ in range(n_sites - 1):
        mat = remainder.reshape(-1, phys_dim * chi_r)
        u, s, vh = _svd(mat)
        keep = max(1, int(np.sum(s > RANK_EPS * s[0])))
        if chi_max is not None:
            keep = min(keep, chi_max)
        kept_norm = np.linalg.norm(s[:keep])
        tensors.insert(0, vh[:keep].reshape(keep, phys_dim, chi_r))
        spectra.insert(0, s[:keep] / kept_norm)
        remainder = (u[:, :keep] * s[:keep]) / kept_norm
        chi_r = keep
    first = remainder.reshape(1, phys_dim, chi_r)
    tensors.insert(0, first / np.linalg.norm(first))
    if chi_max is None:
        chi_max = max((len(s) for s in spectra), default=1)
    state = MpsState(tensors, spectra, chi_max, layout)
    # greedy truncation leaves spectra right of a truncated bond stale
    if any(len(s) >= chi_max for s in spectra):
        canonicalize(state)
    return state
