"""Independent reference implementations used as test oracles.

Everything here is built from first principles (kron products, quadrature,
series expansions, dense ODE integration) so the library code paths being
tested never feed their own answers back into the checks.
"""

import numpy as np
from scipy.integrate import quad, solve_ivp

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_chain(ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def site_op(n, i, op):
    ops = [I2] * n
    ops[i] = op
    return kron_chain(ops)


def dense_hamiltonian_parts(instance):
    """(H_start matrix, H_target diagonal) with spin 0 as the leading qubit."""
    n = instance.n_sites
    dim = 2**n
    h_start = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        h_start += instance.delta * site_op(n, i, SX)
    idx = np.arange(dim)

    def zdiag(i):
        return 1.0 - 2.0 * ((idx >> (n - 1 - i)) & 1)

    h_target = np.zeros(dim)
    for i, j, coupling in instance.edges:
        h_target += coupling * zdiag(i) * zdiag(j)
    for i, h in enumerate(instance.fields):
        h_target += h * zdiag(i)
    return h_start, h_target


def dense_schrodinger(instance, schedule, psi0, rtol=1e-10, atol=1e-12):
    """High-order adaptive integration of i dpsi/dt = H(t) psi."""
    h_start, h_target = dense_hamiltonian_parts(instance)

    def rhs(t, psi):
        a, b = schedule.at(t)
        return -1j * (a * (h_start @ psi) + b * (h_target * psi))

    sol = solve_ivp(
        rhs, (0.0, schedule.total_time), psi0.astype(complex),
        method="DOP853", rtol=rtol, atol=atol,
    )
    psi = sol.y[:, -1]
    return psi / np.linalg.norm(psi)


def gibbs_sphere_average(field, temperature, observable="z"):
    """<n^alpha> for a single classical spin with H = -field * n^z at temperature T.

    Direct numerical quadrature of the Gibbs measure on the sphere.
    """
    beta = 1.0 / temperature

    def weight(z):
        return np.exp(beta * field * z)

    num = quad(lambda z: z * weight(z), -1.0, 1.0, limit=200)[0]
    den = quad(weight, -1.0, 1.0, limit=200)[0]
    if observable != "z":
        raise ValueError("only the z average is defined for this Hamiltonian")
    return num / den


def gibbs_sphere_bin_probs(field, temperature, edges):
    """Probability of n^z falling in each [edges[k], edges[k+1]) bin."""
    beta = 1.0 / temperature
    den = quad(lambda z: np.exp(beta * field * z), -1.0, 1.0, limit=200)[0]
    probs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        num = quad(lambda z: np.exp(beta * field * z), lo, hi, limit=200)[0]
        probs.append(num / den)
    return np.array(probs)


def expm_taylor(matrix, terms=60):
    """Plain Taylor-series matrix exponential (scaled and squared)."""
    matrix = np.asarray(matrix, dtype=complex)
    norm = np.linalg.norm(matrix, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30)))) + 1)
    scaled = matrix / (2**squarings)
    out = np.eye(matrix.shape[0], dtype=complex)
    term = np.eye(matrix.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ scaled / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def batch_mean_stderr(samples, n_batches=50):
    """Standard error of a correlated time series via batch means."""
    samples = np.asarray(samples)
    usable = len(samples) - len(samples) % n_batches
    batches = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.mean()), float(batches.std(ddof=1) / np.sqrt(n_batches))
