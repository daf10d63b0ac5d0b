"""Exact small-matrix arithmetic on numpy object arrays of Python ints and Fractions"""

import math
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Any, Tuple

import numpy as np
import sympy as sp

from denseorbit.utils.serialization import to_fraction


def _tidy(x: Any) -> Any:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


def is_exact(m: Any) -> bool:
    """True when every entry is an integer or rational (no floats)"""
    if isinstance(m, sp.MatrixBase):
        return all(x.is_Rational for x in m)
    arr = np.asarray(m, dtype=object)
    for x in arr.ravel():
        if isinstance(x, (bool, float, np.floating)):
            return False
        if isinstance(x, (int, np.integer, _RationalABC, str)):
            continue
        if isinstance(x, sp.Basic) and x.is_Rational:
            continue
        return False
    return True


def to_exact(m: Any) -> np.ndarray:
    """Object array of ints/Fractions from a sympy matrix, nested list or array"""
    rows = m.tolist() if isinstance(m, sp.MatrixBase) else np.asarray(m, dtype=object).tolist()
    arr = np.array(rows, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = _tidy(to_fraction(x))
    return out


def to_exact_vector(v: Any) -> np.ndarray:
    return to_exact(v).ravel()


def tidy(m: np.ndarray) -> np.ndarray:
    out = np.empty(m.shape, dtype=object)
    for idx, x in np.ndenumerate(m):
        out[idx] = _tidy(x)
    return out


def identity(n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        out[i, i] = 1
    return out


def to_sympy(m: np.ndarray) -> sp.Matrix:
    def conv(x: Any) -> sp.Rational:
        f = to_fraction(x)
        return sp.Rational(f.numerator, f.denominator)

    if m.ndim == 1:
        return sp.Matrix([conv(x) for x in m])
    return sp.Matrix([[conv(x) for x in row] for row in m])


def to_float(m: Any) -> np.ndarray:
    if isinstance(m, sp.MatrixBase):
        return np.array(m.tolist(), dtype=float)
    arr = np.asarray(m)
    if arr.dtype == object:
        return np.array([float(x) for x in arr.ravel()], dtype=float).reshape(arr.shape)
    return arr.astype(float)


def unit_float(v: Any) -> np.ndarray:
    """Float direction of an exact vector, scaled by its max entry first so huge ints do not overflow"""
    arr = np.asarray(v, dtype=object).ravel()
    if all(isinstance(x, (int, Fraction, np.integer)) for x in arr):
        scale = max(abs(Fraction(x)) for x in arr)
        if scale == 0:
            return np.zeros(len(arr))
        return np.array([float(Fraction(x) / scale) for x in arr])
    f = np.asarray(arr, dtype=float)
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def scaled_float_matrix(m: Any) -> np.ndarray:
    """Float copy of an exact matrix divided by its largest entry (projective data only)"""
    arr = np.asarray(m, dtype=object)
    if arr.dtype == object and all(isinstance(x, (int, Fraction, np.integer)) for x in arr.ravel()):
        scale = max(abs(Fraction(x)) for x in arr.ravel()) or 1
        return np.array([float(Fraction(x) / scale) for x in arr.ravel()]).reshape(arr.shape)
    f = np.asarray(m, dtype=float)
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def det3(m: np.ndarray) -> Any:
    return (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def power(m: np.ndarray, n: int) -> np.ndarray:
    """m**n for n >= 0 by repeated squaring"""
    if n < 0:
        raise ValueError("Use the inverse matrix for negative powers")
    result = identity(m.shape[0])
    base = m
    while n:
        if n & 1:
            result = result @ base
        base = base @ base
        n >>= 1
    return result


def isometry_inverse(m: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Inverse of a form-preserving matrix: G⁻¹·Mᵀ·G"""
    gram_inv = to_exact(sp.Matrix(to_sympy(gram)).inv())
    return tidy(gram_inv @ m.T @ gram)


def key(m: np.ndarray) -> Tuple:
    return tuple(Fraction(x) for x in m.ravel())


def projective_key(v: np.ndarray) -> Tuple:
    """Hashable key of the line through v: primitive integer vector, first nonzero entry positive"""
    fr = [Fraction(x) for x in v]
    den = 1
    for x in fr:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        return tuple(ints)
    ints = [x // g for x in ints]
    first = next(x for x in ints if x != 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)

