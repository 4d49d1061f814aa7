"""Paley-Wiener specialization: band subspaces, interval recovery, ordering.

Convention, fixed once: the transform of a density rho supported on (c, d)
is F(z) = integral rho(t) e^{izt} dt, so PW_a carries E(z) = e^{-iaz} and
multiplying by e^{i b z} shifts spectral support by +b. Consequences used
throughout: a band (c, d) has quotient exponent alpha = -(c + d), shift
b = alpha / 2 = -(c + d)/2, and half-length c0 = (d - c)/2. The round-trip
test asserts exactly these signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    InconsistentTypeError,
    PreconditionError,
    UnsupportedRepresentationError,
)
from .kernels import BandKernel, pw_rule
from .models import Exponential, complex_to_json
from .spaces import (
    DeBrangesSpace,
    SpectralAtom,
    SubspaceModel,
    atoms_inner_product,
    centered_nodes,
    spectral_atoms,
)
from .structure import StructureReport, exponential_type, verify_structure

__all__ = [
    "pw_space",
    "BandSubspaceSpec",
    "band_subspace",
    "RecoveredInterval",
    "recover_interval",
    "OrderingVerdict",
    "ordering_check",
    "ordering_probes",
]

ORDERING_TOL = 1e-6


def pw_space(a: float, label: str = "") -> DeBrangesSpace:
    """The Paley-Wiener space of exponential type a, E(z) = e^{-iaz}."""
    if not a > 0:
        raise DomainError(f"Paley-Wiener scale must be positive, got {a}")
    return DeBrangesSpace(Exponential(-float(a)), pw_rule(a), label or f"PW_{a:g}")


@dataclass(frozen=True)
class BandSubspaceSpec:
    """Band-restricted subspace of PW_a with spectrum in (c, d)."""

    a: float
    c: float
    d: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("ambient scale a must be positive")
        if not self.c < self.d:
            raise DomainError(f"band interval requires c < d, got ({self.c}, {self.d})")
        if self.c < -self.a - 1e-12 or self.d > self.a + 1e-12:
            raise DomainError(
                f"band ({self.c}, {self.d}) must sit inside (-{self.a}, {self.a})"
            )

    @property
    def interval(self) -> tuple[float, float]:
        return (self.c, self.d)


def band_subspace(spec: BandSubspaceSpec, rank: int = 16) -> SubspaceModel:
    """Band subspace with its exact kernel and a nested spanning family.

    Spanning sections sit on a centered node template at twice the Nyquist
    density of the band, so prefixes of the family are nested and the
    projected kernel converges to the override as the rank grows.
    """
    space = pw_space(spec.a)
    rule = BandKernel(spec.c, spec.d)
    spacing = np.pi / (2.0 * rule.half_width)
    nodes = centered_nodes(rank, spacing)
    spanning = tuple(rule.section(n) for n in nodes)
    return SubspaceModel.build(
        space, spanning, override=rule, label=f"band({spec.c:g},{spec.d:g})<PW_{spec.a:g}"
    )


@dataclass(frozen=True)
class RecoveredInterval:
    """Interval data recovered from the structure pipeline.

    shift is the exponent b with e^{ibz} N a plain de Branges space;
    alpha = 2b is the fitted quotient exponent; the interval is
    (midpoint - half_length, midpoint + half_length).
    """

    midpoint: float
    half_length: float
    shift: float
    alpha: float
    interval: tuple[float, float]
    report: StructureReport = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "midpoint": self.midpoint,
            "half_length": self.half_length,
            "shift": self.shift,
            "alpha": self.alpha,
            "interval": list(self.interval),
        }


def recover_interval(
    sub: SubspaceModel, a: float, report: StructureReport | None = None
) -> RecoveredInterval:
    """Recover the spectral interval of a nearly invariant subspace of PW_a.

    Runs the structure pipeline, reads the shift off the fitted exponent
    (b = alpha/2, midpoint = -b) and the half-length off the growth rate of
    E0. For band-built inputs the result reproduces the generating interval.
    """
    if not a > 0:
        raise DomainError("ambient scale a must be positive")
    if report is None:
        report = verify_structure(sub, exponent_bound=2.0 * a)
    b = report.alpha / 2.0
    midpoint = -b
    c0 = exponential_type(report.e0)
    if c0 < -1e-9:
        raise InconsistentTypeError(f"recovered half-length {c0:.3e} is negative")
    c0 = max(c0, 0.0)
    if c0 > a + 1e-6:
        raise InconsistentTypeError(
            f"recovered half-length {c0:.6f} exceeds the ambient scale {a}"
        )
    interval = (midpoint - c0, midpoint + c0)
    if interval[0] < -a - 1e-6 or interval[1] > a + 1e-6:
        raise InconsistentTypeError(
            f"recovered interval {interval} leaves [-{a}, {a}]"
        )
    return RecoveredInterval(
        midpoint=midpoint,
        half_length=c0,
        shift=b,
        alpha=report.alpha,
        interval=interval,
        report=report,
    )


@dataclass(frozen=True)
class OrderingVerdict:
    verdict: str  # "inner_subset_outer" | "outer_subset_inner" | "incomparable"
    inner_in_outer_residual: float
    outer_in_inner_residual: float

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "inner_in_outer_residual": self.inner_in_outer_residual,
            "outer_in_inner_residual": self.outer_in_inner_residual,
        }


def ordering_probes(scale: float) -> np.ndarray:
    """Fixed 16-point probe template, widened with the ambient scale."""
    return centered_nodes(16, 0.3 * max(1.0, float(scale)))


def _containment_residual(a_sub: SubspaceModel, b_sub: SubspaceModel, probes) -> float:
    """Max over probes of the relative distance of an A-section from B."""
    worst = 0.0
    for nu in probes:
        section = a_sub.section_model(complex(nu))
        atoms = spectral_atoms(section)
        if atoms is None:
            raise UnsupportedRepresentationError(
                "ordering checks support band-family subspaces only"
            )
        norm2 = float(np.real(atoms_inner_product(atoms, atoms)))
        if norm2 <= 0.0:
            continue
        if isinstance(b_sub.override, BandKernel):
            kept = tuple(
                SpectralAtom(max(at.c, b_sub.override.c), min(at.d, b_sub.override.d), at.wbar, at.coef, at.dorder)
                for at in atoms
                if min(at.d, b_sub.override.d) > max(at.c, b_sub.override.c)
            )
            proj2 = float(np.real(atoms_inner_product(kept, kept))) if kept else 0.0
            defect2 = max(norm2 - proj2, 0.0)
        else:
            fam = [spectral_atoms(s) for s in b_sub.spanning]
            if any(fa is None for fa in fam):
                raise UnsupportedRepresentationError(
                    "ordering checks support band-family subspaces only"
                )
            gram = np.array([[atoms_inner_product(fj, fl) for fl in fam] for fj in fam])
            gram = 0.5 * (gram + gram.conj().T)
            rhs = np.array([atoms_inner_product(atoms, fl) for fl in fam])
            coeffs = np.conj(np.linalg.pinv(gram, rcond=1e-12)) @ rhs
            res_atoms = list(atoms)
            for cj, fj in zip(coeffs, fam):
                res_atoms.extend(
                    SpectralAtom(x.c, x.d, x.wbar, -cj * x.coef, x.dorder) for x in fj
                )
            defect2 = max(float(np.real(atoms_inner_product(tuple(res_atoms), tuple(res_atoms)))), 0.0)
        worst = max(worst, float(np.sqrt(defect2 / norm2)))
    return worst


def ordering_check(
    inner: SubspaceModel, outer: SubspaceModel, probes=None
) -> OrderingVerdict:
    """Containment verdict between two subspaces of a common PW scale.

    Projects kernel sections of each subspace onto the other at the probe
    nodes; a direction passes when every section is preserved to relative
    ORDERING_TOL. When both directions pass (equal spaces at tolerance) the
    verdict reads inner_subset_outer.
    """
    if not (inner.ambient.unimodular_weight and outer.ambient.unimodular_weight):
        raise PreconditionError("ordering checks require Paley-Wiener ambients")
    if probes is None:
        scales = []
        for sub in (inner, outer):
            rule = sub.ambient.rule
            scales.append(rule.half_width if isinstance(rule, BandKernel) else 1.0)
        probes = ordering_probes(max(scales))
    r_io = _containment_residual(inner, outer, probes)
    r_oi = _containment_residual(outer, inner, probes)
    if r_io <= ORDERING_TOL:
        verdict = "inner_subset_outer"
    elif r_oi <= ORDERING_TOL:
        verdict = "outer_subset_inner"
    else:
        verdict = "incomparable"
    return OrderingVerdict(verdict, r_io, r_oi)
