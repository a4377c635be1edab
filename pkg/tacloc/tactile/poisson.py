"""Height recovery from gradient maps with a cosine-transform Poisson solve.

The discrete problem is solved in pixel units. Face fluxes between neighbouring
pixels are the mean of the two adjacent slope samples and vanish on the border,
which gives the Neumann Laplacian whose eigenvectors are the type-II DCT basis.
Because the fluxes telescope, the right-hand side always sums to zero and the
problem is compatible without any correction.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from tacloc.core.errors import GeometryError
from tacloc.tactile.maps import GradientMaps, HeightMap


def divergence(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Flux-form divergence of a slope field on the pixel grid."""
    flux_x = np.zeros((gx.shape[0], gx.shape[1] + 1))
    flux_y = np.zeros((gy.shape[0] + 1, gy.shape[1]))
    flux_x[:, 1:-1] = 0.5 * (gx[:, :-1] + gx[:, 1:])
    flux_y[1:-1, :] = 0.5 * (gy[:-1, :] + gy[1:, :])
    return (flux_x[:, 1:] - flux_x[:, :-1]) + (flux_y[1:, :] - flux_y[:-1, :])


def neumann_laplacian(h: np.ndarray) -> np.ndarray:
    """Five-point Laplacian with mirrored (zero-flux) borders."""
    padded = np.pad(h, 1, mode="edge")
    return (
        padded[1:-1, :-2] + padded[1:-1, 2:] + padded[:-2, 1:-1] + padded[2:, 1:-1] - 4.0 * h
    )


def _eigenvalues(rows: int, cols: int) -> np.ndarray:
    ky = 2.0 * np.cos(np.pi * np.arange(rows) / rows) - 2.0
    kx = 2.0 * np.cos(np.pi * np.arange(cols) / cols) - 2.0
    return ky[:, None] + kx[None, :]


def poisson_solve_dct(g: GradientMaps) -> HeightMap:
    """Zero-mean height map whose discrete Laplacian equals the slope divergence."""
    rows, cols = g.shape
    if rows < 2 or cols < 2:
        raise GeometryError(f"gradient grid must be at least 2x2, got {g.shape}")

    rhs = divergence(g.gx, g.gy)
    spectrum = dctn(rhs, type=2, norm="ortho")
    denom = _eigenvalues(rows, cols)
    denom[0, 0] = 1.0
    spectrum /= denom
    spectrum[0, 0] = 0.0
    pixels = idctn(spectrum, type=2, norm="ortho")
    pixels -= pixels.mean()
    return HeightMap(pixels * g.pixel_pitch, g.pixel_pitch)


def laplacian_residual(h: HeightMap, g: GradientMaps) -> float:
    """Max |Laplacian(H) - div(G)| over interior pixels, in pixel units (dimensionless)."""
    if h.shape != g.shape:
        raise GeometryError(f"height map {h.shape} and gradients {g.shape} differ in shape")
    residual = neumann_laplacian(h.h / h.pixel_pitch) - divergence(g.gx, g.gy)
    interior = residual[1:-1, 1:-1]
    if interior.size == 0:
        return 0.0
    return float(np.max(np.abs(interior)))
