"""Z3 quantum Rabi models: Hamiltonians, symmetry sectors, cat states and Wigner functions."""
from .models import (
    ModelId,
    ModelParams,
    build_hamiltonian,
    build_parity,
    build_transformed_hamiltonian,
    model_space,
    sector_projector,
    su2_generators,
)
from .operators import (
    ConvergenceError,
    HilbertSpace,
    Operator,
    QRabiError,
    StateVector,
    commutator,
    eigenvalues,
    lowest_eigenpairs,
    qudit_clock_shift,
)
from .perturbation import SpectrumResult, perturbative_correction, perturbative_energy, spectrum_sweep
from .states import CatKind, DensityKind, DensityMatrix, cat_state, coherent_state, reference_density
from .verify import VerificationReport, run_verification
from .wigner import (
    PhasePoint,
    PlaneSection,
    WignerGrid,
    analytic_cat_wigner,
    displacement,
    qutrit_displacement,
    qutrit_parity,
    wigner_grid,
    wigner_value,
)

__version__ = "0.1.0"
