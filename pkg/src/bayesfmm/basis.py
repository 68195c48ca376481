"""Orthonormal basis systems under the discretized L2 inner product.

Two generator families are supported: a modified Fourier system
(linear ramps plus harmonic pairs) and clamped cubic B-splines on
uniform knots. Raw generators are orthonormalized with classical
Gram-Schmidt against the grid quadrature, and the stored coefficients
let the orthonormal functions be evaluated analytically at arbitrary
points in [0, 1] - which is what the warped design matrices need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateBasisError, DimensionError, DomainError
from .grid import FunctionSample, TimeGrid, inner_product

MODIFIED_FOURIER = "fourier"
BSPLINE = "bspline"
SAMPLED = "sampled"

_GRAM_TOL = 1e-8
_PIVOT_TOL = 1e-10


def bspline_knot_vector(count: int) -> np.ndarray:
    """Clamped cubic knot vector with uniform interior knots, count >= 4."""
    if count < 4:
        raise ValueError("cubic B-spline basis needs at least 4 functions")
    interior = np.linspace(0.0, 1.0, count - 2)[1:-1]
    return np.concatenate([np.zeros(4), interior, np.ones(4)])


def raw_modified_fourier(grid: TimeGrid, count: int) -> list[FunctionSample]:
    """Generators sqrt(3)t, sqrt(3)(1-t), then sqrt(2)cos/sin(2 pi j t) pairs."""
    if count < 1:
        raise ValueError("basis count must be at least 1")
    mat = kernels.modified_fourier(grid.points, count)
    return [FunctionSample(mat[:, k]) for k in range(count)]


def raw_bspline(grid: TimeGrid, count: int) -> list[FunctionSample]:
    """Clamped cubic B-splines on uniform knots; partition of unity."""
    kv = bspline_knot_vector(count)
    mat = kernels.bspline(grid.points, kv, count)
    return [FunctionSample(mat[:, k]) for k in range(count)]


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal system on a grid, evaluable at arbitrary t in [0, 1].

    ``eval_matrix`` holds the orthonormalized values on the construction
    grid; ``coef`` maps raw generator evaluations to orthonormal ones,
    so eval_at(times) = raw(times) @ coef. For ``kind == "sampled"``
    (generic Gram-Schmidt input) off-grid evaluation falls back to
    linear interpolation of ``eval_matrix``.
    """

    kind: str
    count: int
    grid: TimeGrid
    eval_matrix: np.ndarray
    coef: np.ndarray
    knots: np.ndarray | None = None

    def eval_at(self, times) -> np.ndarray:
        return eval_basis_at(self, times)


def _gram_schmidt_pass(raw: np.ndarray, weights: np.ndarray):
    """One classical Gram-Schmidt sweep; returns (ortho matrix, coef matrix)."""
    T, nb = raw.shape
    ortho = np.zeros((T, nb))
    coef = np.zeros((nb, nb))
    for k in range(nb):
        v = raw[:, k].copy()
        c = np.zeros(nb)
        c[k] = 1.0
        for j in range(k):
            proj = float(np.sum(weights * raw[:, k] * ortho[:, j]))
            v -= proj * ortho[:, j]
            c -= proj * coef[:, j]
        nrm = math.sqrt(max(float(np.sum(weights * v * v)), 0.0))
        if nrm < _PIVOT_TOL:
            raise DegenerateBasisError(f"raw basis is rank deficient at element {k}")
        ortho[:, k] = v / nrm
        coef[:, k] = c / nrm
    return ortho, coef


def gram_residual(mat: np.ndarray, grid: TimeGrid) -> float:
    """Max absolute deviation of the quadrature Gram matrix from identity."""
    gram = mat.T @ (grid.weights[:, None] * mat)
    return float(np.max(np.abs(gram - np.eye(mat.shape[1]))))


def gram_schmidt(
    raw: list[FunctionSample],
    grid: TimeGrid,
    kind: str = SAMPLED,
    knots: np.ndarray | None = None,
) -> OrthonormalBasis:
    """Orthonormalize raw functions in list order under the grid inner product.

    Classical Gram-Schmidt, with one re-orthogonalization sweep if the
    Gram residual of the first pass exceeds 1e-8. Raises
    DegenerateBasisError when a pivot norm falls below 1e-10.
    """
    if not raw:
        raise ValueError("need at least one raw function")
    mat = np.column_stack([np.asarray(f) for f in raw])
    if mat.shape[0] != len(grid):
        raise DimensionError("raw functions must be sampled on the grid")
    ortho, coef = _gram_schmidt_pass(mat, grid.weights)
    if gram_residual(ortho, grid) > _GRAM_TOL:
        ortho, coef2 = _gram_schmidt_pass(ortho, grid.weights)
        coef = coef @ coef2
    # eval_matrix goes through the same raw @ coef product as eval_at so
    # that on-grid analytic evaluation reproduces it bit for bit
    return OrthonormalBasis(
        kind=kind,
        count=mat.shape[1],
        grid=grid,
        eval_matrix=mat @ coef,
        coef=coef,
        knots=knots,
    )


def make_basis(kind: str, count: int, grid: TimeGrid) -> OrthonormalBasis:
    """Construct an orthonormal modified Fourier or B-spline basis."""
    if kind == MODIFIED_FOURIER:
        return gram_schmidt(raw_modified_fourier(grid, count), grid, kind=kind)
    if kind == BSPLINE:
        return gram_schmidt(
            raw_bspline(grid, count), grid, kind=kind, knots=bspline_knot_vector(count)
        )
    raise ValueError(f"unknown basis kind {kind!r}")


def eval_basis_at(basis: OrthonormalBasis, times) -> np.ndarray:
    """Evaluate the orthonormal functions at arbitrary times in [0, 1].

    Rows index times, columns index basis functions. Times may carry
    roundoff slightly outside [0, 1] (clamped at 1e-12); anything
    further out raises DomainError.
    """
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if t.size and (np.min(t) < -1e-12 or np.max(t) > 1.0 + 1e-12):
        raise DomainError("basis evaluation point outside [0, 1]")
    t = np.clip(t, 0.0, 1.0)
    if t.size == 0:
        return np.zeros((0, basis.count))
    if basis.kind == MODIFIED_FOURIER:
        rawmat = kernels.modified_fourier(t, basis.count)
    elif basis.kind == BSPLINE:
        rawmat = kernels.bspline(t, basis.knots, basis.count)
    else:
        rawmat = np.column_stack(
            [np.interp(t, basis.grid.points, basis.eval_matrix[:, k]) for k in range(basis.count)]
        )
        return rawmat
    return rawmat @ basis.coef


def project_coefficients(f, basis: OrthonormalBasis) -> np.ndarray:
    """Quadrature inner products <f, phi_k>, the L2 projection coefficients."""
    return np.array([inner_product(f, basis.eval_matrix[:, k], basis.grid) for k in range(basis.count)])
