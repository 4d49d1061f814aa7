"""Default tolerances and the standard deterministic evaluation grids."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Relative threshold below which singular values of a Gram matrix are dropped.
PINV_RANK_RTOL = 1e-10

# k_N(z, z) <= COMMON_ZERO_RTOL * k_E(z, z) flags z as a common zero.
COMMON_ZERO_RTOL = 1e-12

# |f(mu)| must be below this times the local scale of f for zero division.
DIVIDE_ZERO_RTOL = 1e-8

# Unimodularity gate inside the exponent fit (hard error beyond this).
FIT_UNIMODULAR_TOL = 1e-6

# Switch distance for Taylor-based evaluation of removable singularities.
DIAGONAL_LIMIT_RADIUS = 1e-6
ZERO_DIVIDED_RADIUS = 1e-6


@dataclass(frozen=True)
class Tolerances:
    """Verdict tolerances for structure reports.

    Equality-style residuals are relative; ``margin`` is the absolute floor
    a strict inequality must clear.
    """

    fg_identity: float = 1e-8
    margin: float = 1e-12
    unimodularity: float = 1e-8
    exponent_fit: float = 1e-8
    kernel_roundtrip: float = 1e-8
    isometry: float = 1e-8

    def scaled(self, factor: float) -> "Tolerances":
        if factor <= 0:
            raise ValueError("tolerance scale must be positive")
        return replace(
            self,
            fg_identity=self.fg_identity * factor,
            margin=self.margin * factor,
            unimodularity=self.unimodularity * factor,
            exponent_fit=self.exponent_fit * factor,
            kernel_roundtrip=self.kernel_roundtrip * factor,
            isometry=self.isometry * factor,
        )


DEFAULT_TOLERANCES = Tolerances()


def standard_hb_grid() -> np.ndarray:
    """Fixed upper half-plane grid for Hermite-Biehler validation."""
    xs = np.array([-2.5, -1.0, 0.0, 1.0, 2.5])
    ys = np.array([0.25, 1.0, 4.0])
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def standard_scan_grid() -> np.ndarray:
    """Default grid for common-zero scans; includes 0 and near-axis points."""
    real = np.linspace(-2.0, 2.0, 11).astype(complex)
    off_axis = np.array([0.5j, -0.5j, 1j, -1j])
    return np.concatenate([real, off_axis])


def half_plane_grid(count: int, upper: bool) -> np.ndarray:
    """Deterministic grid of ``count`` points in one open half-plane."""
    heights = np.array([0.2, 0.6, 1.5, 3.0, 6.0])
    cols = int(np.ceil(count / heights.size))
    xs = np.linspace(-4.0, 4.0, cols)
    pts = (xs[None, :] + 1j * heights[:, None]).ravel()[:count]
    return pts if upper else np.conj(pts)


def real_grid(exponent_bound: float, half_width: float = 3.0) -> np.ndarray:
    """Uniform real grid dense enough to unwrap phases of slope <= bound.

    Spacing is kept at or below pi / (2 * bound), with a floor of 33 points.
    """
    if exponent_bound <= 0:
        raise ValueError("exponent bound must be positive")
    min_count = int(np.ceil(2 * half_width * 2 * exponent_bound / np.pi)) + 1
    count = max(33, min_count)
    if count % 2 == 0:
        count += 1
    return np.linspace(-half_width, half_width, count)


def roundtrip_grid() -> tuple[np.ndarray, np.ndarray]:
    """10 x 10 (lambda, z) validation pairs for the kernel round trip."""
    lam = (np.linspace(-2.0, 2.0, 5)[None, :] + 1j * np.array([0.3, -0.4])[:, None]).ravel()
    zs = (np.linspace(-1.8, 2.2, 5)[None, :] + 1j * np.array([0.5, -0.25])[:, None]).ravel()
    return lam, zs
