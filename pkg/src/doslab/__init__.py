"""Numerical laboratory for density-of-states measures of lattice Schroedinger operators."""

from .lattice import (
    AndersonBernoulli,
    AndersonUniform,
    BandMatrix,
    BoxSpec,
    Constant,
    Periodic,
    PotentialField,
    PotentialSpec,
    Quasiperiodic,
    assemble_hamiltonian,
    hamiltonian,
    make_box,
    sample_potential,
)
from .spectral import (
    EigenBasis,
    InertiaTriple,
    SpectralWindow,
    count_in_interval,
    dense_spectrum,
    eigenpairs_in_window,
    ldlt_inertia,
)
from .dos import (
    DosCurve,
    DosPoint,
    OuterEstimate,
    bc_compare,
    dos_sweep,
    eta_interval,
    fit_log_holder,
    ids,
    kappa_reference,
    translate_sup,
)
from .constructions import (
    build_grid,
    constrained_subspace,
    construct_report,
    linf_extremal,
    propagation_check,
    select_R,
)
from .ucp import C1, CarlemanWeight, HarmonicDims, UcpReport, carleman_phi, carleman_weight, harmonic_dims, ucp_probe

__version__ = "0.1.0"
