"""adiarank: bounded-Schmidt-rank simulation of adiabatic Ising optimisation."""

from .instances import (
    CHAIN,
    LADDER16,
    IsingInstance,
    SpinConfig,
    classical_energy,
    generate_ladder16,
    generate_random_chain,
    parse,
    serialize,
)
from .oracle import (
    GroundTruth,
    ground_state_bruteforce,
    ground_state_chain_dp,
    ground_state_ladder16,
    solve,
)
from .schedule import AnnealSchedule, default_schedule, parse_schedule
from .spins import (
    ClassicalSpinState,
    DynamicsParams,
    effective_field,
    gradient_descent_anneal,
    llg_anneal,
    llg_step,
    metropolis_anneal,
    spin_energy,
)
from .mps import (
    MpsState,
    amplitude,
    dense_vector,
    expectation_energy,
    product_init,
    readout_config,
    schmidt_spectrum,
    truncate_bond,
)
from .tebd import (
    Classification,
    HullTable,
    RunRecord,
    classify_chi_star,
    extract_boundary,
    success_hull,
    tebd_anneal,
    two_site_gate,
)

__version__ = "0.1.0"
