"""Exact statevector simulation of the transverse-field quench."""
from .diagnostics import (CombineSample, FrequencyEstimate, Krylov3, MeanFieldPoint, VelocityReport,
                          WitnessReport, combine_identity_constant, dominant_frequency, fdot_norm_plus, krylov3, krylov_h11,
                          mean_field_scan, mean_field_state, quantum_combine, toy_frequency,
                          velocity_diagnostic, witness_report, witness_state)
from .observables import apply_fdot, duality_observable, expectation, y_fdot_sum
from .state import apply_hamiltonian, evolve, plus_state, sample_bitstrings
from .trace import QuenchConfig, QuenchTrace, run_quench

__all__ = [
    "CombineSample", "FrequencyEstimate", "Krylov3", "MeanFieldPoint", "QuenchConfig", "QuenchTrace",
    "VelocityReport", "WitnessReport", "apply_fdot", "apply_hamiltonian", "combine_identity_constant",
    "dominant_frequency",
    "duality_observable", "evolve", "expectation", "fdot_norm_plus", "krylov3", "krylov_h11",
    "mean_field_scan", "mean_field_state", "plus_state", "quantum_combine", "run_quench",
    "sample_bitstrings", "toy_frequency", "velocity_diagnostic", "witness_report", "witness_state",
    "y_fdot_sum",
]
