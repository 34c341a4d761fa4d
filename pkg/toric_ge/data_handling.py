# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the functions to build beta grids and to store and load run data.

Functions in the source file:
    * :class:`SchemaError`: Exception for CSV files that do not follow their schema.
    * :class:`ConfigFileError`: Exception for malformed run configuration files.
    * :func:`beta_grid`: Build the beta grid of a sweep, with an optional refinement window.
    * :func:`sweep_path`: Path of the sweep CSV of one lattice size.
    * :func:`write_table_csv`: Write a result table after validating its columns.
    * :func:`write_sweep_csv`: Write the sweep table of one lattice size.
    * :func:`read_table_csv`: Read a result table and validate it against its schema.
    * :func:`read_sweep_csv`: Read the sweep table of one lattice size.
    * :func:`load_sweep_directory`: Read every sweep CSV of a directory.
    * :func:`write_json`: Write a report or manifest as JSON.
    * :func:`read_config_file`: Parse a line-oriented ``key = value`` run configuration.
"""

import glob
import json
import logging
import os
import re

import numpy as np
import pandas as pd

from toric_ge.constants import (
    ALGORITHMS,
    CSV_FLOAT_FORMAT,
    SWEEP_COLUMNS
)

logger = logging.getLogger(__name__)

SWEEP_FILE_PATTERN = re.compile(r'sweep_L(\d+)\.csv$')
GRID_DECIMALS = 12


class SchemaError(ValueError):
    """
    Exception for a result table whose header differs from its schema or that holds non-finite values.
    """
    pass


class ConfigFileError(ValueError):
    """
    Exception for a configuration file with a malformed line, an unknown key or a bad value.
    """
    pass


def _parse_sizes(text):
    return [int(item) for item in re.split(r'[,\s]+', text.strip()) if item]


def _parse_algorithm(text):
    if text not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    return text


# Keys accepted in a configuration file and the conversion of their values
CONFIG_KEYS = {
    'master_seed': int,
    'sizes': _parse_sizes,
    'beta_start': float,
    'beta_stop': float,
    'beta_step': float,
    'refine_start': float,
    'refine_stop': float,
    'refine_step': float,
    'n_therm': int,
    'n_measure': int,
    'measure_interval': int,
    'algorithm': _parse_algorithm,
    'n_bins': int,
    'chains': int,
    'output_dir': str,
    'threshold': float,
}


def _arange_inclusive(start, stop, step):
    if not step > 0:
        raise ValueError(f"beta step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"beta stop {stop} is below beta start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), GRID_DECIMALS)


def beta_grid(start: float, stop: float, step: float, refine_start: float = None, refine_stop: float = None,
              refine_step: float = None) -> np.ndarray:
    """
    Build an inclusive beta grid. A refinement window adds a finer grid over part of the range;
    the result is the sorted union of both grids.

    :param start: First coupling
    :type start: float
    :param stop: Last coupling (included when it lies on the grid)
    :type stop: float
    :param step: Grid spacing
    :type step: float
    :param refine_start: Start of the refinement window
    :type refine_start: float
    :param refine_stop: End of the refinement window
    :type refine_stop: float
    :param refine_step: Spacing inside the refinement window
    :type refine_step: float
    :raises ValueError: for an empty grid or a partially given refinement window
    """
    grid = _arange_inclusive(start, stop, step)
    refinement = (refine_start, refine_stop, refine_step)
    if any(value is not None for value in refinement):
        if any(value is None for value in refinement):
            raise ValueError("A refinement window needs start, stop and step")
        grid = np.union1d(grid, _arange_inclusive(*refinement))
    return grid


def sweep_path(directory: str, L: int) -> str:
    return os.path.join(directory, f'sweep_L{L}.csv')


def _validate(frame, columns, source):
    if list(frame.columns) != list(columns):
        raise SchemaError(f"{source}: expected columns {list(columns)}, got {list(frame.columns)}")
    numeric = frame.select_dtypes(include='number')
    if numeric.shape[1] != frame.shape[1] or not np.all(np.isfinite(numeric.to_numpy(dtype=float))):
        raise SchemaError(f"{source}: all fields must be finite numbers")


def write_table_csv(frame: pd.DataFrame, path: str, columns):
    """
    Write a result table with a fixed column order.

    :param frame: Table holding at least the schema columns
    :type frame: pandas.DataFrame
    :param path: Output file
    :type path: str
    :param columns: Schema columns, in header order
    :type columns: list
    :raises SchemaError: for missing columns or non-finite values
    """
    missing = [column for column in columns if column not in frame]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    table = frame[list(columns)].reset_index(drop=True)
    _validate(table, columns, path)
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.debug(f"Wrote {len(table)} rows to {path}")


def write_sweep_csv(frame: pd.DataFrame, path: str):
    """Write one size's sweep table sorted by beta."""
    write_table_csv(frame.sort_values('beta'), path, SWEEP_COLUMNS)


def read_table_csv(path: str, columns) -> pd.DataFrame:
    """
    Read a result table and validate header and values.

    :raises SchemaError: if the header differs from ``columns`` or a value is not finite
    """
    frame = pd.read_csv(path)
    _validate(frame, columns, path)
    return frame


def read_sweep_csv(path: str) -> pd.DataFrame:
    return read_table_csv(path, SWEEP_COLUMNS)


def load_sweep_directory(directory: str, sizes=None) -> dict:
    """
    Read the sweep CSVs of a directory, keyed by lattice size.

    :param directory: Directory holding ``sweep_L{L}.csv`` files
    :type directory: str
    :param sizes: Sizes that must be present (all found files if omitted)
    :type sizes: list
    :raises FileNotFoundError: listing the requested sizes that have no file
    """
    found = dict()
    for path in sorted(glob.glob(os.path.join(directory, 'sweep_L*.csv'))):
        match = SWEEP_FILE_PATTERN.search(os.path.basename(path))
        if match:
            found[int(match.group(1))] = path
    if sizes is not None:
        absent = sorted(set(sizes) - set(found))
        if absent:
            raise FileNotFoundError(f"No sweep files in {directory} for sizes {absent}")
        found = {L: found[L] for L in sizes}
    return {L: read_sweep_csv(path) for L, path in sorted(found.items())}


def _json_default(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(payload: dict, path: str):
    """
    Write a report or manifest as indented JSON with sorted keys.

    :param payload: Data to write; numpy scalars and arrays are converted
    :type payload: dict
    :param path: Output file
    :type path: str
    """
    with open(path, 'w') as f:
        json.dump(payload, f, indent=4, sort_keys=True, default=_json_default)
    logger.debug(f"Wrote {path}")


def read_config_file(path: str) -> dict:
    """
    Parse a run configuration file. Every non-blank line holds ``key = value``; ``#`` starts a comment.

    :param path: Configuration file
    :type path: str
    :returns: The converted values keyed by setting name
    :raises ConfigFileError: for malformed lines, unknown keys or unconvertible values
    """
    settings = dict()
    with open(path, 'r') as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, separator, value = line.partition('=')
            key, value = key.strip(), value.strip()
            if not separator or not key or not value:
                raise ConfigFileError(f"{path}:{number}: expected 'key = value', got {raw.strip()!r}")
            if key not in CONFIG_KEYS:
                raise ConfigFileError(f"{path}:{number}: unknown key {key!r}")
            try:
                settings[key] = CONFIG_KEYS[key](value)
            except ValueError as e:
                raise ConfigFileError(f"{path}:{number}: bad value for {key!r}: {e}") from e
    logger.info(f"Read {len(settings)} settings from {path}")
    return settings
