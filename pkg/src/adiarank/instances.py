"""Ising problem instances on chains and the embeddable 16-spin two-leg ladder.

Energy convention (dimensionless throughout):

    E(s) = sum_<ij> J_ij s_i s_j + sum_i h_i s_i,    s_i in {+1, -1}

The transverse amplitude ``delta`` is carried by the instance so that a single
file fully specifies the annealing problem A(t)*delta*sum_i X_i + B(t)*E.

Random cohorts draw couplings uniformly from ``COUPLING_VALUES`` (ten signed
magnitudes) and fields uniformly from ``FIELD_VALUES`` (eleven values; zero is
a single outcome).  The random source is numpy's PCG64 via
``numpy.random.default_rng(seed)``, fixed here so cohorts are reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError, RangeError, StructureError

CHAIN = "chain"
LADDER16 = "ladder16"

COUPLING_VALUES = tuple(
    s * m for m in (0.2, 0.4, 0.6, 0.8, 1.0) for s in (1.0, -1.0)
)
FIELD_VALUES = (-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

# Frozen edge table for the embeddable two-leg ladder (16 spins, 8 rungs).
# Rung k holds spins (2k, 2k+1).  All 8 rungs are coupled.  Hardware
# connectivity forbids legs on every plaquette: both leg links survive on
# plaquettes 0, 2, 4, 6 (giving four 4-spin loops) and only the even-leg
# link survives on plaquettes 1, 3, 5 (keeping the graph connected).
# This table is the normative artifact definition of the topology.
LADDER16_RUNGS = tuple((2 * k, 2 * k + 1) for k in range(8))
LADDER16_LEGS = tuple(
    e
    for k in range(7)
    for e in (
        [(2 * k, 2 * k + 2), (2 * k + 1, 2 * k + 3)]
        if k % 2 == 0
        else [(2 * k, 2 * k + 2)]
    )
)
LADDER16_EDGES = LADDER16_RUNGS + LADDER16_LEGS


@dataclass(frozen=True)
class SpinConfig:
    """A classical +-1 assignment, one value per spin."""

    values: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (1, -1) for v in self.values):
            raise RangeError("spin values must be +1 or -1")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def from_string(cls, text: str) -> "SpinConfig":
        """Build from a compact string such as ``+--+``."""
        table = {"+": 1, "-": -1}
        try:
            return cls(tuple(table[c] for c in text.strip()))
        except KeyError as exc:
            raise RangeError(f"bad spin character {exc.args[0]!r}") from None

    def to_string(self) -> str:
        return "".join("+" if v > 0 else "-" for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int8)

    def flipped(self) -> "SpinConfig":
        return SpinConfig(tuple(-v for v in self.values))


@dataclass(frozen=True)
class IsingInstance:
    """An Ising target Hamiltonian plus its transverse-field amplitude."""

    n_sites: int
    edges: tuple[tuple[int, int, float], ...]
    fields: tuple[float, ...]
    delta: float = 1.0
    topology: str = CHAIN

    def __post_init__(self):
        n = self.n_sites
        if n < 1:
            raise StructureError("need at least one site")
        if len(self.fields) != n:
            raise DimensionError(f"{len(self.fields)} fields for {n} sites")
        for h in self.fields:
            if not np.isfinite(h) or abs(h) > 2.0:
                raise RangeError(f"field {h} outside |h| <= 2")
        pairs = set()
        for i, j, coupling in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise StructureError(f"bad edge ({i}, {j})")
            key = (min(i, j), max(i, j))
            if key in pairs:
                raise StructureError(f"duplicate edge ({i}, {j})")
            pairs.add(key)
            if not np.isfinite(coupling) or abs(coupling) > 1.0:
                raise RangeError(f"coupling {coupling} outside |J| <= 1")
        if self.topology == CHAIN:
            expected = {(i, i + 1) for i in range(n - 1)}
            if pairs != expected:
                raise StructureError("chain topology requires exactly the edges (i, i+1)")
        elif self.topology == LADDER16:
            if n != 16:
                raise StructureError("ladder16 topology has 16 sites")
            if pairs != set(LADDER16_EDGES):
                raise StructureError("ladder16 topology requires the frozen edge table")
        else:
            raise StructureError(f"unknown topology {self.topology!r}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise RangeError("delta must be positive")

    @property
    def n_bonds(self) -> int:
        return len(self.edges)

    def coupling_of(self, i: int, j: int) -> float:
        """Coupling on the (i, j) edge, or 0.0 if absent."""
        for a, b, coupling in self.edges:
            if (a, b) == (i, j) or (a, b) == (j, i):
                return coupling
        return 0.0

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix (zeros off the edge set)."""
        mat = np.zeros((self.n_sites, self.n_sites))
        for i, j, coupling in self.edges:
            mat[i, j] += coupling
            mat[j, i] += coupling
        return mat


def classical_energy(instance: IsingInstance, config: SpinConfig) -> float:
    """Exact classical energy of a +-1 configuration.

    Summation order is fixed (edges in storage order, then fields by site) so
    the returned double is deterministic.
    """
    if len(config) != instance.n_sites:
        raise DimensionError(
            f"config has {len(config)} spins, instance has {instance.n_sites}"
        )
    s = config.values
    energy = 0.0
    for i, j, coupling in instance.edges:
        energy += coupling * s[i] * s[j]
    for i, h in enumerate(instance.fields):
        energy += h * s[i]
    return energy


def _draw(rng: np.random.Generator, pool, count: int) -> list[float]:
    return [pool[k] for k in rng.integers(0, len(pool), size=count)]


def generate_random_chain(length: int, seed: int) -> IsingInstance:
    """Random chain with couplings/fields from the benchmark value sets.

    Draw order is fixed: ``length - 1`` couplings first, then ``length``
    fields, all from PCG64 seeded with ``seed``.
    """
    if length < 2:
        raise ValueError("chain length must be at least 2")
    rng = np.random.default_rng(seed)
    couplings = _draw(rng, COUPLING_VALUES, length - 1)
    fields = _draw(rng, FIELD_VALUES, length)
    edges = tuple((i, i + 1, couplings[i]) for i in range(length - 1))
    return IsingInstance(length, edges, tuple(fields), topology=CHAIN)


def generate_ladder16(seed: int) -> IsingInstance:
    """Random instance on the frozen 16-spin ladder topology."""
    rng = np.random.default_rng(seed)
    couplings = _draw(rng, COUPLING_VALUES, len(LADDER16_EDGES))
    fields = _draw(rng, FIELD_VALUES, 16)
    edges = tuple(
        (i, j, couplings[k]) for k, (i, j) in enumerate(LADDER16_EDGES)
    )
    return IsingInstance(16, edges, tuple(fields), topology=LADDER16)


def serialize(instance: IsingInstance) -> str:
    """Line-oriented text form; values printed with round-trip precision."""
    lines = [
        f"ising v1 N={instance.n_sites} topology={instance.topology} "
        f"delta={instance.delta!r}"
    ]
    for i, h in enumerate(instance.fields):
        lines.append(f"h {i} {h!r}")
    for i, j, coupling in instance.edges:
        lines.append(f"J {i} {j} {coupling!r}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> IsingInstance:
    """Inverse of :func:`serialize`.  Raises ParseError naming the bad line."""
    header = None
    fields: dict[int, float] = {}
    edges: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if tokens[0] != "ising" or len(tokens) < 2 or tokens[1] != "v1":
                raise ParseError(lineno, "expected header 'ising v1 ...'")
            header = {}
            for tok in tokens[2:]:
                if "=" not in tok:
                    raise ParseError(lineno, f"bad header token {tok!r}")
                key, _, value = tok.partition("=")
                header[key] = value
            for key in ("N", "topology", "delta"):
                if key not in header:
                    raise ParseError(lineno, f"header missing {key}=")
            try:
                header["N"] = int(header["N"])
                header["delta"] = float(header["delta"])
            except ValueError:
                raise ParseError(lineno, "bad N= or delta= value") from None
            continue
        if tokens[0] == "h":
            if len(tokens) != 3:
                raise ParseError(lineno, "expected 'h <site> <value>'")
            try:
                site, value = int(tokens[1]), float(tokens[2])
            except ValueError:
                raise ParseError(lineno, "bad h line") from None
            if site in fields:
                raise ParseError(lineno, f"duplicate field for site {site}")
            fields[site] = value
        elif tokens[0] == "J":
            if len(tokens) != 4:
                raise ParseError(lineno, "expected 'J <i> <j> <value>'")
            try:
                i, j, value = int(tokens[1]), int(tokens[2]), float(tokens[3])
            except ValueError:
                raise ParseError(lineno, "bad J line") from None
            edges.append((i, j, value))
        else:
            raise ParseError(lineno, f"unknown record {tokens[0]!r}")
    if header is None:
        raise ParseError(1, "empty instance text")
    n = header["N"]
    missing = [i for i in range(n) if i not in fields]
    if missing:
        raise ParseError(1, f"missing field lines for sites {missing}")
    extra = [i for i in fields if not 0 <= i < n]
    if extra:
        raise ParseError(1, f"field lines for out-of-range sites {extra}")
    return IsingInstance(
        n_sites=n,
        edges=tuple(edges),
        fields=tuple(fields[i] for i in range(n)),
        delta=header["delta"],
        topology=header["topology"],
    )
