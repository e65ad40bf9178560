"""Worst-case recovery error on the truncated space and certified bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import PointSet
from .lsq import InfoMatrices
from .spectral import CoefVector, OrderedBasis, SpectrumSummary


@dataclass(frozen=True)
class ErrorReport:
    """Error quantities of one instance.

    tail_benchmark = sqrt(c_report * tail(k) / k) is reported for comparison
    with its recorded constant; nothing asserts a value for c_report.
    """

    e_trunc: float
    e_upper: float
    a_k: float
    beta_k: float
    gamma_k: float
    tail_benchmark: float
    c_report: float
    s_min_G: float
    s_max_Gamma: float


def worst_case_error_trunc(
    info: InfoMatrices,
    g_pinv: np.ndarray,
    basis: OrderedBasis,
    k: int | None = None,
    m: int | None = None,
) -> float:
    """Exact worst-case L2 error over the unit ball within the first m
    basis functions.

    On coefficients the residual operator is E = I - pad(G^+ B); the unit
    ball of the space is the ellipsoid c = diag(sigma) u with ||u|| <= 1, so
    the supremum equals the largest singular value of E diag(sigma).  Only
    meaningful when the underlying fit had full rank.  k and m default to the
    instance values; m may be lowered to analyze a shorter truncation with
    the same points.
    """
    k = info.k if k is None else k
    m = info.m if m is None else m
    if not 0 <= k <= m <= info.m:
        raise ValueError(f"need 0 <= k <= m <= {info.m}, got k={k}, m={m}")
    if g_pinv.shape != (k, info.B.shape[0]):
        raise ValueError(f"pseudoinverse must have shape ({k}, {info.B.shape[0]})")
    e = np.eye(m)
    if k:
        e[:k, :] -= g_pinv @ info.B[:, :m]
    return float(np.linalg.svd(e * basis.sigma[:m], compute_uv=False)[0])


def certified_upper_bound(
    e_trunc: float,
    basis: OrderedBasis,
    summary: SpectrumSummary,
    pts: PointSet,
    s_min_g: float,
    k: int,
    m: int,
) -> float:
    """e_trunc plus certified addends for what truncation at m discarded.

    Mass beyond position m is controlled through |b|^2 <= 2^d and the
    certified tail sum, paid for once in the target (a_m) and once in the
    information (the sqrt addend).  Loose, but a true bound.  The basis must
    extend at least one position past m so a_m is available.
    """
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}, m={m}")
    if len(basis) < m + 1:
        raise ValueError(f"basis of length {len(basis)} cannot provide a_{m}")
    if s_min_g <= 0.0:
        raise ValueError("a degenerate fit has no certified bound")
    d = basis.params.d
    addend = math.sqrt(np.sum(1.0 / pts.densities) * 2.0 ** d * summary.tail(m)) / s_min_g
    return float(e_trunc + basis.sigma[m] + addend)


def empirical_error(fitted: CoefVector, f: CoefVector) -> float:
    """L2 distance between two coefficient vectors on the same basis.

    The shorter vector is implicitly padded with zeros.
    """
    same = fitted.basis is f.basis or (
        fitted.basis.params == f.basis.params
        and np.array_equal(fitted.basis.indices, f.basis.indices)
    )
    if not same:
        raise ValueError("coefficient vectors live on different bases")
    n = max(len(fitted.c), len(f.c))
    a = np.zeros(n)
    a[: len(fitted.c)] = fitted.c
    b = np.zeros(n)
    b[: len(f.c)] = f.c
    return float(np.linalg.norm(a - b))
