"""Numerical tolerances shared across the package."""

# unitary / normalization checks on O(1) quantities
UNITARY_TOL = 1e-12
# residuals of simulated-vs-closed-form comparisons
RESIDUAL_TOL = 1e-10
# accepted norm error on states handed in by callers (CLI amplitude lists etc.)
INPUT_NORM_TOL = 1e-10

# Fixed register layout of the 4-qubit protocol: [a, b, A, B], little-endian.
QUBIT_a = 0
QUBIT_b = 1
QUBIT_A = 2
QUBIT_B = 3
