"""Division of zeros, near-invariance residuals, and common-zero detection.

The residual of a subspace N at a point mu is the relative distance, in the
ambient inner product, between the divided-out function and its projection
back onto N. For band-limited subspaces the divided function has an exact
finite representation in spectral atoms (sections plus one node-derivative
section); the representation is validated pointwise against the divided
model before it is trusted, and quadrature remains the fallback route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .defaults import DIVIDE_ZERO_RTOL
from .errors import CommonZeroError, DeBrangesError, NotAZeroError
from .kernels import BandKernel, PinnedKernel
from .models import EntireFunctionModel, LinearCombination, ZeroDivided
from .spaces import (
    SpectralAtom,
    SubspaceModel,
    atoms_inner_product,
    atoms_value,
    quadrature_inner_product,
    spectral_atoms,
    subspace_kernel,
)

__all__ = [
    "divide_zero",
    "divide_atoms",
    "common_zero_scan",
    "near_invariance_residual",
    "NearInvarianceReport",
    "near_invariance_report",
]

_PROBE_POINT = 1j
_PROBE_FALLBACK = 2j


def divide_zero(f: EntireFunctionModel, mu: complex) -> ZeroDivided:
    """The entire function f(z) / (z - mu), requiring f(mu) ~ 0.

    The zero test compares |f(mu)| against the local scale of f on a circle
    of radius 1/2 around mu.
    """
    mu = complex(mu)
    ring = mu + 0.5 * np.exp(2j * np.pi * np.arange(8) / 8)
    local_scale = float(np.max(np.abs(f.eval(ring))))
    value = complex(f.eval(mu))
    if abs(value) > DIVIDE_ZERO_RTOL * max(local_scale, 1e-300):
        raise NotAZeroError(
            f"|f(mu)| = {abs(value):.3e} is not a zero relative to local scale {local_scale:.3e}",
            value=value,
        )
    return ZeroDivided(f, mu)


def divide_atoms(
    atoms: tuple[SpectralAtom, ...], mu: complex
) -> tuple[SpectralAtom, ...] | None:
    """Spectral atoms of f(z)/(z - mu) given the atoms of f.

    Requires all atoms on one interval with derivative order 0 (plain
    sections); returns None otherwise. The construction integrates the
    density, so the result is exact whenever f(mu) = 0.
    """
    if not atoms:
        return ()
    if any(a.dorder != 0 for a in atoms):
        return None
    c, d = atoms[0].c, atoms[0].d
    if any(a.c != c or a.d != d for a in atoms):
        return None
    mu = complex(mu)
    merged: dict[complex, complex] = {}
    for a in atoms:
        key = complex(a.wbar)
        merged[key] = merged.get(key, 0.0) + a.coef
    out: list[SpectralAtom] = []
    mu_coef = 0.0 + 0.0j
    for wbar, coef in merged.items():
        if abs(wbar - mu) <= 1e-12 * (1.0 + abs(mu)):
            # Resonant term: density w (t - c) e^{-i mu t} / (2 pi i^-1)...
            # contributes a node-derivative atom plus a section at mu.
            out.append(SpectralAtom(c, d, mu, coef, dorder=1))
            mu_coef += 1j * c * coef
        else:
            denom = mu - wbar
            out.append(SpectralAtom(c, d, wbar, -coef / denom, dorder=0))
            mu_coef += coef * np.exp(1j * denom * c) / denom
    if mu_coef != 0:
        out.append(SpectralAtom(c, d, mu, mu_coef, dorder=0))
    return tuple(out)


def common_zero_scan(sub: SubspaceModel, grid) -> list[complex]:
    """Grid points where the subspace kernel diagonal (numerically) vanishes."""
    pts = np.asarray(grid, dtype=complex).ravel()
    if pts.size == 0:
        return []
    diag = sub.kernel_diag(pts)
    threshold = sub.common_zero_threshold(pts)
    return [complex(p) for p, v, t in zip(pts, diag, threshold) if v <= t]


def _probe_point(sub: SubspaceModel) -> complex:
    for cand in (_PROBE_POINT, _PROBE_FALLBACK):
        diag = float(sub.kernel_diag(cand)[0])
        if diag > float(sub.common_zero_threshold(cand)[0]):
            return cand
    raise CommonZeroError("subspace kernel vanishes at both probe points", points=(_PROBE_POINT, _PROBE_FALLBACK))


def _vanishing_member(sub: SubspaceModel, mu: complex) -> EntireFunctionModel:
    lam0 = _probe_point(sub)
    k_mu_mu = complex(subspace_kernel(sub, mu, mu))
    k_lam_mu = complex(subspace_kernel(sub, lam0, mu))
    beta = k_lam_mu / k_mu_mu
    return LinearCombination(
        (1.0, -beta), (sub.section_model(lam0), sub.section_model(mu))
    )


def _family_atoms(sub: SubspaceModel, mu: complex) -> list[tuple[SpectralAtom, ...]] | None:
    """Atom lists spanning the projection family, enriched for override models."""
    fam: list[tuple[SpectralAtom, ...]] = []
    for s in sub.spanning:
        atoms = spectral_atoms(s)
        if atoms is None:
            return None
        fam.append(atoms)
    if sub.override is None:
        return fam
    lam0 = _probe_point(sub)
    extras = [sub.section_model(lam0), sub.section_model(mu)]
    if abs(np.conj(mu) - mu) > 1e-12 * (1.0 + abs(mu)):
        extras.append(sub.section_model(np.conj(mu)))
    for model in extras:
        atoms = spectral_atoms(model)
        if atoms is None:
            return None
        fam.append(atoms)
    datoms = _section_datoms(sub.override, complex(mu))
    if datoms is not None:
        fam.append(datoms)
    return fam


def _section_datoms(rule, wbar: complex) -> tuple[SpectralAtom, ...] | None:
    """Atoms of the node-derivative section d/dwbar K(., wbar)."""
    if isinstance(rule, BandKernel):
        return (SpectralAtom(rule.c, rule.d, wbar, 1.0, dorder=1),)
    if isinstance(rule, PinnedKernel) and isinstance(rule.base, BandKernel):
        base = _section_datoms(rule.base, wbar)
        p = rule.pin
        gamma_prime = rule.base.dw(p, wbar) / rule.base.eval_zw(p, np.conj(p))
        pin_atoms = spectral_atoms(rule.base.section(p))
        scaled = tuple(
            SpectralAtom(a.c, a.d, a.wbar, -gamma_prime * a.coef, a.dorder) for a in pin_atoms
        )
        return base + scaled
    return None


def _projection_residual_atoms(
    g_atoms: tuple[SpectralAtom, ...], family: list[tuple[SpectralAtom, ...]]
) -> float:
    n = len(family)
    gram = np.empty((n, n), dtype=complex)
    for j in range(n):
        for l in range(j, n):
            val = atoms_inner_product(family[j], family[l])
            gram[j, l] = val
            gram[l, j] = np.conj(val)
    b = np.array([atoms_inner_product(g_atoms, fam) for fam in family])
    u, s, vh = np.linalg.svd(gram, hermitian=True)
    keep = s > 1e-12 * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    pinv = (vh.conj().T * inv) @ u.conj().T
    coeffs = np.conj(pinv) @ b
    residual_atoms = list(g_atoms)
    for cj, fam in zip(coeffs, family):
        residual_atoms.extend(
            SpectralAtom(a.c, a.d, a.wbar, -cj * a.coef, a.dorder) for a in fam
        )
    num = max(float(np.real(atoms_inner_product(tuple(residual_atoms), tuple(residual_atoms)))), 0.0)
    den = float(np.real(atoms_inner_product(g_atoms, g_atoms)))
    return float(np.sqrt(min(max(num / den, 0.0), 1.0)))


def _quadrature_residual(sub: SubspaceModel, g: EntireFunctionModel, tol: float = 1e-8) -> float:
    space = sub.ambient
    b = np.array([quadrature_inner_product(space, g, s, tol) for s in sub.spanning])
    coeffs = np.conj(sub._pinv) @ b
    residual_model = LinearCombination(
        (1.0,) + tuple(-c for c in coeffs), (g,) + sub.spanning
    )
    num = max(float(np.real(quadrature_inner_product(space, residual_model, residual_model, tol))), 0.0)
    den = float(np.real(quadrature_inner_product(space, g, g, tol)))
    return float(np.sqrt(min(max(num / den, 0.0), 1.0)))


def near_invariance_residual(sub: SubspaceModel, mu: complex, force_quadrature: bool = False) -> float:
    """Relative distance of the divided-out kernel member to the subspace.

    Builds a member of N vanishing at mu from kernel sections, divides out
    the zero, and measures the ambient-norm distance of the quotient to the
    projection family of N, normalized by the quotient's norm.
    """
    mu = complex(mu)
    diag = float(sub.kernel_diag(mu)[0])
    threshold = float(sub.common_zero_threshold(mu)[0])
    if diag <= threshold:
        raise CommonZeroError(
            f"kernel diagonal {diag:.3e} at {mu} is below the common-zero threshold",
            points=(mu,),
        )
    f = _vanishing_member(sub, mu)
    g = divide_zero(f, mu)
    if not force_quadrature and sub.ambient.unimodular_weight:
        f_atoms = spectral_atoms(f)
        if f_atoms is not None:
            g_atoms = divide_atoms(f_atoms, mu)
            if g_atoms is not None and _division_validates(g, g_atoms):
                family = _family_atoms(sub, mu)
                if family is not None:
                    return _projection_residual_atoms(g_atoms, family)
    return _quadrature_residual(sub, g)


def _division_validates(g: ZeroDivided, g_atoms: tuple[SpectralAtom, ...]) -> bool:
    probes = np.array([0.11, -0.77, 1.9, 1.3 + 0.4j, -2.2 - 0.6j, 0.05j])
    direct = g.eval(probes)
    via_atoms = atoms_value(g_atoms, probes)
    scale = float(np.max(np.abs(direct))) + 1e-300
    return bool(np.max(np.abs(direct - via_atoms)) <= 1e-7 * scale)


@dataclass(frozen=True)
class NearInvarianceReport:
    tested_nodes: tuple[complex, ...]
    residuals: tuple[float, ...]
    max_residual: float
    common_zero_findings: tuple[complex, ...]

    @property
    def passed(self) -> bool:
        return not self.common_zero_findings

    def to_json(self) -> dict:
        from .models import complex_to_json

        return {
            "tested_nodes": [complex_to_json(z) for z in self.tested_nodes],
            "residuals": list(self.residuals),
            "max_residual": self.max_residual,
            "common_zero_findings": [complex_to_json(z) for z in self.common_zero_findings],
            "verdict": "pass" if self.passed else "common-zero",
        }


def near_invariance_report(sub: SubspaceModel, nodes) -> NearInvarianceReport:
    """Scan nodes for common zeros, then measure residuals at the clean ones."""
    nodes = [complex(z) for z in np.asarray(nodes, dtype=complex).ravel()]
    findings = common_zero_scan(sub, nodes)
    tested: list[complex] = []
    residuals: list[float] = []
    for z in nodes:
        if z in findings:
            continue
        try:
            residuals.append(near_invariance_residual(sub, z))
            tested.append(z)
        except DeBrangesError:
            raise
    max_residual = max(residuals) if residuals else 0.0
    return NearInvarianceReport(
        tuple(tested), tuple(residuals), float(max_residual), tuple(findings)
    )
