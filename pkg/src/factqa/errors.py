"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, DataError
exits 2, NumericsError exits 3.
"""


class DataError(Exception):
    """Malformed or inconsistent input data (files, datasets, configs)."""


class NumericsError(Exception):
    """Numerical failure: non-finite values, diverging training, bad checks."""
