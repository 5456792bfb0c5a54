"""Certified dynamics of hyperbolic-type linear operators on the integer
lattice: splitting certification, shadowing with explicit constants,
periodic points and mixing witnesses, and recovery of the splitting under
bounded perturbations."""

from .errors import HyperdynError
from .seqspace import (GeometricTail, HalfSide, LatticeVector, NormKind,
                       basis, combine, from_pairs, project, truncate)
from .operators import (LatticeOperator, WeightRule, WindowedPerturbation,
                        constant_rule, drift_rule, ensure_inverse,
                        operator_norm, perturb, verify_inverse)
from .splitting import (Certificate, Splitting, HYPERBOLIC,
                        SHIFTED_HYPERBOLIC, certify, classify,
                        transition_subspace)
from .dynamics import (BoundedVerdict, ConnectResult, PeriodicPoint,
                       bounded_membership, connect, mixing_experiment,
                       periodic_decompose, periodic_point)
from .shadowing import (ExpansivityVerdict, NoiseRule, PseudoOrbit,
                        ShadowResult, UnboundedReport, constant_norm_orbit,
                        fixed_direction, make_pseudo_orbit, second_shadow,
                        shadow_intersection, shadow_series, unbounded_point,
                        uniform_expansivity_probe)
from .robustness import (LargeBoundedReport, RecoveryReport,
                         minus_tilt_oracle, epsilon0,
                         large_b_experiment, random_perturbation,
                         robust_splitting, shifted_persists,
                         tilt_against_oracle)
from . import catalog

__version__ = "0.1.0"

__all__ = [
    "HyperdynError", "GeometricTail", "HalfSide", "LatticeVector", "NormKind",
    "basis", "combine", "from_pairs", "project", "truncate",
    "LatticeOperator", "WeightRule", "WindowedPerturbation", "constant_rule",
    "drift_rule", "ensure_inverse", "operator_norm", "perturb",
    "verify_inverse", "Certificate", "Splitting", "HYPERBOLIC",
    "SHIFTED_HYPERBOLIC", "certify", "classify", "transition_subspace",
    "BoundedVerdict", "ConnectResult", "PeriodicPoint", "bounded_membership",
    "connect", "mixing_experiment", "periodic_decompose", "periodic_point",
    "ExpansivityVerdict", "NoiseRule", "PseudoOrbit", "ShadowResult",
    "UnboundedReport", "constant_norm_orbit", "fixed_direction",
    "make_pseudo_orbit", "second_shadow", "shadow_intersection",
    "shadow_series", "unbounded_point", "uniform_expansivity_probe",
    "LargeBoundedReport", "RecoveryReport", "minus_tilt_oracle",
    "epsilon0", "large_b_experiment", "random_perturbation",
    "robust_splitting", "shifted_persists", "tilt_against_oracle", "catalog",
]
