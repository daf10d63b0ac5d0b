import json
import math
from fractions import Fraction
from typing import Any, Dict, List, Sequence

import numpy as np
import sympy as sp
from sympy import Matrix

from denseorbit.errors import NotRationalError


def as_rational(value: Any) -> sp.Rational:
    """
    Convert a scalar to an exact sympy Rational

    Args:
        value: int, "p/q" or decimal string, Fraction, float or sympy number

    Returns:
        Exact rational; floats are taken through their shortest decimal repr
    """
    if isinstance(value, bool):
        raise NotRationalError(f"Boolean is not a rational number: {value!r}")
    if isinstance(value, sp.Rational):
        return value
    if isinstance(value, (int, np.integer)):
        return sp.Integer(int(value))
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(float(value)):
            raise NotRationalError(f"Non-finite value: {value!r}")
        return sp.Rational(repr(float(value)))
    if isinstance(value, str):
        try:
            return sp.Rational(value.strip())
        except (TypeError, ValueError, sp.SympifyError) as e:
            raise NotRationalError(f"Cannot parse rational from {value!r}: {e}")
    if isinstance(value, sp.Basic):
        if value.is_Rational:
            return value
        raise NotRationalError(f"Value is not rational: {value}")
    raise NotRationalError(f"Unsupported scalar type {type(value).__name__}: {value!r}")


def format_rational(value: Any) -> str:
    """Encode a rational as "p/q" ("p" when q = 1)"""
    r = as_rational(value)
    return f"{r.p}" if r.q == 1 else f"{r.p}/{r.q}"


def to_fraction(value: Any) -> Fraction:
    r = as_rational(value)
    return Fraction(int(r.p), int(r.q))


def vector_to_json(v: Any) -> List[str]:
    return [format_rational(x) for x in _flatten(v)]


def vector_from_json(values: Sequence[Any]) -> Matrix:
    return Matrix([as_rational(x) for x in values])


def matrix_to_json(m: Any) -> List[List[str]]:
    rows = m.tolist() if hasattr(m, "tolist") else m
    return [[format_rational(x) for x in row] for row in rows]


def matrix_from_json(rows: Sequence[Sequence[Any]]) -> Matrix:
    if len(rows) == 0:
        return Matrix(0, 0, [])
    return Matrix([[as_rational(x) for x in row] for row in rows])


def columns_to_json(basis: Matrix) -> List[List[str]]:
    """Encode the columns of a basis matrix as a list of vectors"""
    return [vector_to_json(basis.col(j)) for j in range(basis.cols)]


def format_angle(theta: float) -> float:
    """Round an angle to 12 significant digits for serialization"""
    return float(f"{theta:.12g}")


def dumps(payload: Dict[str, Any]) -> str:
    """Deterministic JSON text; key order is insertion order"""
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _flatten(v: Any) -> List[Any]:
    if isinstance(v, sp.MatrixBase):
        return list(v)
    if isinstance(v, np.ndarray):
        return list(v.ravel())
    return list(v)
