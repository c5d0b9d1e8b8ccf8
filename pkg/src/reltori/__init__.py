"""Reconstruction of relative quasi-periodic tori of G-symmetric systems.

The pipeline takes a vector field X on T^k x G (G = T^d or SO(3)) with
commuting G-invariant lifts, computes the phases of the lifts, the
external frequencies, resolves resonances with an exact Smith normal
form, and certifies numerically that the flow is conjugate to a linear
flow on tori.
"""

__version__ = "0.1.0"

from .catalog import so3_example, torus3_example
from .dynsys import (CoeffFunction, Lift, StatePoint, SystemSpec, VectorField, bracket_defect,
                     check_hypotheses, complete_lifts, flow, phase)
from .errors import (FitUnstable, GroupMismatch, HypothesisError, NonCommutingPhases, NotInTorus,
                     PeriodMismatch, ReconstructionError, ResonanceError, ZeroFrequency)
from .exact_linalg import hnf, hnf_kernel, snf
from .freqs import ExactScalar, QBasis, resonance_lattice
from .groups import SO3, GroupElement, AlgebraVector, TorusDescriptor, principal_coords, principal_log, torus
from .reconstruct import (Reconstruction, compute_phase_data, covering_map, deck_action, reconstruct,
                          reconstruction_map, theorem1, theorem2)
from .verify import (Tolerances, VerificationReport, check_conjugacy, check_torus_residency,
                     extract_frequencies, sample_trajectory, verify_reconstruction)
