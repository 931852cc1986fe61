import os
import sys
import json
import math
from datetime import datetime

import numpy as np


REL_TOL = 1e-10
ABS_TOL = 1e-12
SCHMIDT_TOL = 1e-9
ISOMETRY_TOL = 1e-10

# Largest M the permutation sums are allowed to touch (M! terms)
MAX_ORACLE_PARTICLES = 8
DEFAULT_ORACLE_MAX = 10**7

SCHEMA_VERSION = 1


class BetheError(Exception):
    pass


class DimensionMismatchError(BetheError):
    pass


class ChoiceOverlapError(BetheError):
    pass


class PartitionError(BetheError):
    pass


class NonPlanarTreeError(BetheError):
    pass


class OracleBoundError(BetheError):
    pass


class NotHomogeneousError(BetheError):
    pass


class NotIsometricError(BetheError):
    pass


class CircuitShapeError(BetheError):
    pass


class SchemaError(BetheError):
    def __init__(self, message, field=None, line=None, column=None):
        self.field = field
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        elif field is not None:
            location = f" (field '{field}')"
        super().__init__(f"{message}{location}")


def log(context, s):
    # Print to stderr, so progress never mixes with command output
    if context:
        print(f"[{datetime.now().strftime('%c')}] {context} {s}", file=sys.stderr)
    else:
        print(f"[{datetime.now().strftime('%c')}] {s}", file=sys.stderr)


def oracle_max():
    value = os.environ.get("BETHE_ORACLE_MAX")
    if not value:
        return DEFAULT_ORACLE_MAX
    try:
        return int(value)
    except ValueError:
        raise SchemaError(
            f"BETHE_ORACLE_MAX must be an integer, got {value!r}",
            field="BETHE_ORACLE_MAX",
        )


def check_oracle_size(N, M):
    if M > MAX_ORACLE_PARTICLES:
        raise OracleBoundError(
            f"M={M} is above the oracle bound of {MAX_ORACLE_PARTICLES} particles"
        )
    size = math.comb(N, M)
    if size > oracle_max():
        raise OracleBoundError(
            f"C({N},{M})={size:,} amplitudes is above the oracle bound of {oracle_max():,}"
        )
    return size


def is_close(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    return abs(a - b) <= max(rel_tol * max(abs(a), abs(b)), abs_tol)


def relative_error(actual, expected):
    """Max amplitude error relative to the largest expected amplitude."""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    if expected.size == 0:
        return 0.0
    scale = max(np.max(np.abs(expected)), ABS_TOL)
    return float(np.max(np.abs(actual - expected)) / scale)


# JSON helpers shared by every file format


def complex_to_json(z):
    z = complex(z)
    return {"im": z.imag, "re": z.real}


def complex_from_json(obj, field=None):
    try:
        return complex(float(obj["re"]), float(obj["im"]))
    except (KeyError, TypeError, ValueError):
        raise SchemaError("expected an object with numeric 're' and 'im'", field=field)


def dumps(obj):
    # Canonical form: sorted keys, repr floats (shortest lossless double form)
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def get_variables(filename):
    with open(filename) as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed JSON in {filename}: {e.msg}", line=e.lineno, column=e.colno)
