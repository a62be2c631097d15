"""Noncommutative measure numerics on the truncated full Fock space.

Converts between contractive NC symbols, NC Herglotz functions, and NC
measures; computes the NC Lebesgue decomposition mu = mu_ac + mu_s by the
coupled resolvent limit; factors eps I + tau for positive L-Toeplitz tau;
and cross-validates everything against the classical one-variable theory.
"""

from .factor import FactorResult, ltoeplitz_check, outer_factor, outer_factor_matrix
from .fock import (FockVector, TruncatedOperator, basis_vector, grade_projection,
                   left_shift, right_shift, transpose_unitary, vacuum,
                   word_monomial)
from .lebesgue import (FormDecomposition, PsdReport, RadialOperator, RNResult,
                       Schedule, StageRecord, fatou_form_check,
                       form_decomposition_diagnostic, majorant_check,
                       radial_operator, rn_derivative, resolvent,
                       resolvent_corner)
from .measure import (GramMatrix, MomentFunctional, PositivityReport,
                      cauchy_transform, clark_measure, gns_isometry, gram,
                      gram_matvec, herglotz_eval, herglotz_transform,
                      is_positive, nc_lebesgue, quadratic_form,
                      read_moments_csv, sos_split, vector_state,
                      write_moments_csv)
from .oracle1d import (MeasureSpec, classical_moments, circle_grid,
                       fatou_symbol, fourier_coefficients, herglotz_integral,
                       poisson_density, toeplitz_from_symbol)
from .series import (EvalResult, MatrixPoint, NCSeries, cayley_to_herglotz,
                     cayley_to_schur, dbr_kernel, evaluate, herglotz_kernel,
                     invert, left_multiplier, left_multiplier_norm, multiply,
                     radial_scale, read_series_csv, right_multiplier,
                     series_at_right_shifts, szego_kernel,
                     szego_kernel_matrix, transpose_conjugate,
                     write_series_csv)
from .words import Word, WordBasis, concat, enumerate_words, transpose, word_count

__version__ = "0.1.0"
