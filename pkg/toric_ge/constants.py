# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Script to store any constants used throughout the app.
"""

import math

# Critical coupling of the square-lattice Ising model, 1/2 ln(1 + sqrt(2))
BETA_CRITICAL = 0.5 * math.log(1.0 + math.sqrt(2.0))

# Per-link energy magnitude at criticality in the thermodynamic limit
CRITICAL_ENERGY_PER_LINK = 1.0 / math.sqrt(2.0)

ORIENTATION_PAIRS = ('hh', 'hv', 'vv')

ALGORITHMS = ('metropolis', 'wolff', 'mixed')

DEFAULT_SCHEDULE = {
    'n_therm': 5000,
    'n_measure': 20000,
    'measure_interval': 10,
    'algorithm': 'mixed',
    'n_bins': 50,
    'chains': 1,
}

DEFAULT_BETA_GRID = {
    'beta_start': 0.30,
    'beta_stop': 0.60,
    'beta_step': 0.005,
}

DEFAULT_MASTER_SEED = 1
DEFAULT_SIZES = [8, 12, 16, 20, 28, 40]
DEFAULT_OUTPUT_DIR = 'toric_ge_results'
DEFAULT_CONVERGENCE_THRESHOLD = 0.05
DEFAULT_LOG_FILE = 'toric_ge.log'

MIN_JACKKNIFE_BINS = 20

# Largest sizes handled by the exact oracles without an explicit opt-in
MAX_ENUMERATION_SIZE = 4
MAX_ENUMERATION_SIZE_OPT_IN = 5
MAX_LOOP_GROUP_SIZE = 3

# Probabilities outside [-eps, 1 + eps] are inconsistent; violations up to the
# clamp limit are clipped with a warning, anything beyond is an error
PROBABILITY_EPS = 1e-9
PROBABILITY_CLAMP_LIMIT = 1e-6

# Per-check sigma bar of the oracle comparison; with many checks it is widened so that the
# probability of any false failure stays below ORACLE_FAMILY_ALPHA (Bonferroni)
ORACLE_SIGMA_TOLERANCE = 3.0
ORACLE_FAMILY_ALPHA = 1e-3
ORACLE_ABSOLUTE_TOLERANCE = 1e-2
QUANTUM_RESIDUAL_TOLERANCE = 1e-10

WORKERS_ENV_VAR = 'TORIC_GE_WORKERS'

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONVERGENCE = 2
EXIT_USAGE = 64

SWEEP_COLUMNS = ['beta', 'E_per_link', 'E_err', 'GE', 'GE_err', 'GEt', 'GEt_err', 'Q', 'Q_err',
                 'dGEt_dbeta', 'dGEt_err', 'n_measure', 'seed']
FEE_COLUMNS = ['r', 'f_EE', 'f_err', 'n_classes']
ANALYTIC_COLUMNS = ['beta', 'e_exact', 'GE', 'Q_analytic']

CSV_FLOAT_FORMAT = '%.12g'
