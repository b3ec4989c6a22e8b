"""Local-term and MPO assembly of A * H_start + B * H_target for MPS engines.

Chains keep one qubit per MPS site (d = 2).  The 16-spin ladder merges each
rung into a 4-level hyper-spin (d = 4, 8 MPS sites): rung couplings and both
fields become on-site terms, the surviving leg couplings become
nearest-neighbour hyper-bond terms.  Hyper label m encodes the rung pair as
m = 2*a + b with a, b in {0: spin up, 1: spin down} for spins (2k, 2k+1).
"""

import numpy as np

from .errors import TopologyError
from .instances import CHAIN, LADDER16, IsingInstance

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

# hyper-spin (two qubits on a rung) operators, d = 4
HYPER_X_SUM = np.kron(PAULI_X, ID2) + np.kron(ID2, PAULI_X)
HYPER_Z_FIRST = np.kron(PAULI_Z, ID2)
HYPER_Z_SECOND = np.kron(ID2, PAULI_Z)
HYPER_ZZ = np.kron(PAULI_Z, PAULI_Z)


class LocalTerms:
    """One-site and bond operators of the two Hamiltonian pieces.

    ``site_start[k]`` is multiplied by A(t), ``site_target[k]`` and
    ``bond_target[k]`` by B(t).  ``bond_channels[k]`` lists the (left op,
    right op) factors of each bond term, used for MPO assembly.
    """

    def __init__(self, instance: IsingInstance):
        self.instance = instance
        if instance.topology == CHAIN:
            self.phys_dim = 2
            self.n_sites = instance.n_sites
            self.site_start = [instance.delta * PAULI_X for _ in range(self.n_sites)]
            self.site_target = [h * PAULI_Z for h in instance.fields]
            couplings = {min(i, j): c for i, j, c in instance.edges}
            self.bond_channels = [
                [(PAULI_Z, couplings[k] * PAULI_Z)] for k in range(self.n_sites - 1)
            ]
        elif instance.topology == LADDER16:
            self.phys_dim = 4
            self.n_sites = instance.n_sites // 2
            self.site_start = [instance.delta * HYPER_X_SUM for _ in range(self.n_sites)]
            self.site_target = [
                instance.fields[2 * k] * HYPER_Z_FIRST
                + instance.fields[2 * k + 1] * HYPER_Z_SECOND
                for k in range(self.n_sites)
            ]
            self.bond_channels = [[] for _ in range(self.n_sites - 1)]
            for i, j, coupling in instance.edges:
                i, j = min(i, j), max(i, j)
                ki, kj = i // 2, j // 2
                if ki == kj:
                    self.site_target[ki] = self.site_target[ki] + coupling * HYPER_ZZ
                elif kj == ki + 1:
                    left = HYPER_Z_FIRST if i % 2 == 0 else HYPER_Z_SECOND
                    right = HYPER_Z_FIRST if j % 2 == 0 else HYPER_Z_SECOND
                    self.bond_channels[ki].append((left, coupling * right))
                else:
                    raise TopologyError(f"edge ({i}, {j}) spans non-adjacent rungs")
        else:
            raise TopologyError(f"no MPS layout for topology {instance.topology!r}")
        d = self.phys_dim
        self.bond_target = []
        for channels in self.bond_channels:
            term = np.zeros((d * d, d * d), dtype=complex)
            for left, right in channels:
                term += np.kron(left, right)
            self.bond_target.append(term)

    def site_op(self, k: int, a: float, b: float) -> np.ndarray:
        return a * self.site_start[k] + b * self.site_target[k]

    def bond_hamiltonians(self, a: float, b: float) -> np.ndarray:
        """Stacked (n_bonds, d^2, d^2) bond terms with site terms folded in.

        Each one-site operator is split half-left/half-right between the two
        bonds touching the site; boundary sites put full weight on their only
        bond.  The sum over bonds then reproduces the full Hamiltonian.
        """
        d = self.phys_dim
        n = self.n_sites
        if n < 2:
            raise ValueError("bond Hamiltonians need at least two sites")
        eye = np.eye(d, dtype=complex)
        out = np.empty((n - 1, d * d, d * d), dtype=complex)
        for k in range(n - 1):
            wl = 1.0 if k == 0 else 0.5
            wr = 1.0 if k == n - 2 else 0.5
            term = b * self.bond_target[k]
            term = term + np.kron(wl * self.site_op(k, a, b), eye)
            term = term + np.kron(eye, wr * self.site_op(k + 1, a, b))
            out[k] = term
        return out

    def mpo(self, a: float, b: float) -> list[np.ndarray]:
        """Matrix-product operator of A*H_start + B*H_target.

        Tensor k has shape (D_left, D_right, d, d); the first/last sites are
        the boundary row/column.  Channel layout: index 0 carries completed
        terms, the last index carries the identity, the middle indices carry
        the open bond channels.
        """
        d = self.phys_dim
        eye = np.eye(d, dtype=complex)
        tensors = []
        for k in range(self.n_sites):
            left_channels = self.bond_channels[k - 1] if k > 0 else []
            right_channels = self.bond_channels[k] if k < self.n_sites - 1 else []
            dl = 2 + len(left_channels)
            dr = 2 + len(right_channels)
            w = np.zeros((dl, dr, d, d), dtype=complex)
            w[0, 0] = eye
            w[dl - 1, dr - 1] = eye
            w[dl - 1, 0] = self.site_op(k, a, b)
            for c, (_, right_op) in enumerate(left_channels):
                w[1 + c, 0] = b * right_op
            for c, (left_op, _) in enumerate(right_channels):
                w[dl - 1, 1 + c] = left_op
            if k == 0:
                w = w[dl - 1 : dl]
            if k == self.n_sites - 1:
                w = w[:, 0:1]
            tensors.append(w)
        return tensors
