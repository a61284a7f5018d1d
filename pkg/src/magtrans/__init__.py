"""Magnon-assisted microwave-to-optical transduction with erbium spins.

Modules, bottom up: ``params`` (configs and coupling maps), ``levels``
(energies, detunings, crossing), ``effective`` (RWA matrix, elimination,
transduction rate), ``inout`` (efficiency and scattering), ``oracle``
(independent numeric checks) and ``sweep`` (grids, figure presets, output).
"""

from .effective import (
    CouplingSet,
    EffectiveModel,
    RwaMatrix,
    ValidityReport,
    build_rwa_hamiltonian,
    couplings_from_config,
    eliminate,
    transduction_rate,
    validity,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    GridMismatchError,
    MagtransError,
    NoCrossingError,
    SingularError,
    StepSizeError,
    ValidationError,
)
from .inout import (
    LossBudget,
    bandwidth,
    cooperativity,
    efficiency,
    efficiency_lossless,
    eta_max,
    match_kappa,
    match_pump,
    scattering,
)
from .levels import Detunings, detunings, find_crossing, magnon_energy, spin_energy
from .oracle import compare, evolve_effective, evolve_full, solve_elimination_numeric
from .params import DeviceConfig, dump_config, load_config, read_config, resolve_config
from .sweep import AxisSpec, SweepResult, baseline_max, emit, run_figure, sweep2d

__version__ = "0.1.0"
