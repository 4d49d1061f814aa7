"""Reproducing-kernel rules and kernel-section models.

A kernel rule stores k as the holomorphic function K(z, w) with
k(lambda, z) = K(z, conj(lambda)). Working with K keeps node derivatives and
removable singularities on the diagonal w = z analytic instead of numeric.

Three rules cover the library:

* ``BandKernel(c, d)`` -- (e^{i d u} - e^{i c u}) / (2 pi i u) with
  u = z - w, the kernel of band-limited functions with spectrum in (c, d).
  The full Paley-Wiener kernel is the symmetric band (-a, a).
* ``QuotientKernel`` -- the generic quotient form built from a structure
  function E and its star.
* ``PinnedKernel`` -- a kernel with prescribed common zeros, used as a
  negative control.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .defaults import DIAGONAL_LIMIT_RADIUS
from .errors import DomainError
from .models import (
    EntireFunctionModel,
    complex_from_json,
    complex_to_json,
    model_from_json,
)

__all__ = [
    "KernelRule",
    "BandKernel",
    "QuotientKernel",
    "PinnedKernel",
    "KernelSection",
    "band_kappa",
    "pw_rule",
    "kernel_rule_to_json",
    "kernel_rule_from_json",
    "kernel_section_from_json",
]

_SERIES_TERMS = 26
_SERIES_CUTOVER = 0.5


@functools.lru_cache(maxsize=256)
def _band_series(c: float, d: float, max_order: int) -> np.ndarray:
    """Rows m = 0..max_order of Taylor coefficients of kappa^{(m)} at u = 0."""
    k = np.arange(_SERIES_TERMS)
    base = (1j ** k) * np.array(
        [(d ** (n + 1) - c ** (n + 1)) / factorial(n + 1) for n in k]
    ) / (2 * np.pi)
    rows = np.zeros((max_order + 1, _SERIES_TERMS), dtype=complex)
    for m in range(max_order + 1):
        for kk in range(m, _SERIES_TERMS):
            rows[m, kk - m] = base[kk] * factorial(kk) / factorial(kk - m)
    rows.flags.writeable = False
    return rows


def band_kappa(c: float, d: float, u, order: int = 0):
    """kappa^{(order)}(u) for the band (c, d), vectorized with analytic limits."""
    arr = np.asarray(u, dtype=complex)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    out = np.empty(arr.shape, dtype=complex)
    scale_ = max(1.0, abs(c), abs(d))
    near = np.abs(arr) * scale_ < _SERIES_CUTOVER
    far = ~near
    if far.any():
        uf = arr[far]
        acc = np.zeros(uf.shape, dtype=complex)
        ed = np.exp(1j * d * uf)
        ec = np.exp(1j * c * uf)
        for j in range(order + 1):
            nj = (1j * d) ** j * ed - (1j * c) ** j * ec
            p = order - j
            acc += comb(order, j) * nj * ((-1) ** p * factorial(p)) / uf ** (p + 1)
        out[far] = acc / (2j * np.pi)
    if near.any():
        coeffs = _band_series(float(c), float(d), order)[order]
        out[near] = np.polynomial.polynomial.polyval(arr[near], coeffs)
    return complex(out[0]) if scalar else out


class KernelRule:
    """Base class for kernel rules; immutable and hashable."""

    def eval_zw(self, z, w):
        raise NotImplementedError

    def kernel(self, lam, z):
        """k(lambda, z), vectorized over broadcastable inputs."""
        return self.eval_zw(z, np.conj(lam))

    def star_rule(self) -> "KernelRule":
        raise NotImplementedError

    def section_growth_rate(self, node: complex) -> float | None:
        return None

    def section(self, node: complex) -> "KernelSection":
        return KernelSection(self, complex(node))

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class BandKernel(KernelRule):
    c: float
    d: float

    def __post_init__(self):
        c, d = float(self.c), float(self.d)
        if not (np.isfinite(c) and np.isfinite(d) and c < d):
            raise DomainError(f"band interval requires c < d, got ({c}, {d})")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.c, self.d)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.c + self.d)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.d - self.c)

    def eval_zw(self, z, w):
        zb, wb = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
        return band_kappa(self.c, self.d, zb - wb)

    def dw(self, z, w):
        zb, wb = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
        return -band_kappa(self.c, self.d, zb - wb, order=1)

    def dzdw(self, z, w):
        zb, wb = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
        return -band_kappa(self.c, self.d, zb - wb, order=2)

    def star_rule(self):
        return BandKernel(-self.d, -self.c)

    def section_growth_rate(self, node):
        # e^{-icy} dominates e^{-idy} along the positive imaginary axis.
        return -self.c

    def to_json(self):
        return {"kind": "band", "c": self.c, "d": self.d}


def pw_rule(a: float) -> BandKernel:
    """Kernel of the Paley-Wiener space of exponential type a."""
    if a <= 0:
        raise DomainError("Paley-Wiener scale must be positive")
    return BandKernel(-float(a), float(a))


@dataclass(frozen=True)
class QuotientKernel(KernelRule):
    """Generic de Branges quotient kernel built from E and E*."""

    e: EntireFunctionModel
    estar: EntireFunctionModel

    @classmethod
    def from_e(cls, e: EntireFunctionModel) -> "QuotientKernel":
        return cls(e, e.star())

    def eval_zw(self, z, w):
        zb, wb = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
        scalar = zb.ndim == 0
        if scalar:
            zb = zb.reshape(1)
            wb = wb.reshape(1)
        zf, wf = zb.ravel(), wb.ravel()
        out = np.empty(zf.shape, dtype=complex)
        near = np.abs(wf - zf) < DIAGONAL_LIMIT_RADIUS
        far = ~near
        if far.any():
            ez, esz = self.e.eval(zf[far]), self.estar.eval(zf[far])
            ew, esw = self.e.eval(wf[far]), self.estar.eval(wf[far])
            out[far] = (ez * esw - esz * ew) / (2j * np.pi * (wf[far] - zf[far]))
        for idx in np.nonzero(near)[0]:
            out[idx] = self._diagonal_limit(zf[idx], wf[idx])
        out = out.reshape(zb.shape)
        return complex(out[0]) if scalar else out

    def _diagonal_limit(self, z: complex, w: complex) -> complex:
        te = self.e.taylor(z, 5)
        ts = self.estar.taylor(z, 5)
        ez, esz = self.e.eval(z), self.estar.eval(z)
        coeffs = ez * ts[1:] - esz * te[1:]
        return np.polynomial.polynomial.polyval(w - z, coeffs) / (2j * np.pi)

    def star_rule(self):
        return self

    def to_json(self):
        return {"kind": "quotient", "e": self.e.to_json()}


@dataclass(frozen=True)
class PinnedKernel(KernelRule):
    """Kernel of the subspace pinned to vanish at one point.

    K_S(z, w) = B(z, w) - B(z, conj p) B(p, w) / B(p, conj p), so every
    section vanishes at p; used to manufacture a common zero.
    """

    base: KernelRule
    pin: complex

    def __post_init__(self):
        pin = complex(self.pin)
        diag = complex(self.base.eval_zw(pin, np.conj(pin)))
        if not diag.real > 0:
            raise DomainError("pin point must have positive kernel diagonal")
        object.__setattr__(self, "pin", pin)

    def eval_zw(self, z, w):
        b = self.base
        p = self.pin
        diag = b.eval_zw(p, np.conj(p))
        return b.eval_zw(z, w) - b.eval_zw(z, np.conj(p)) * b.eval_zw(p, w) / diag

    def star_rule(self):
        return PinnedKernel(self.base.star_rule(), np.conj(self.pin))

    def section_growth_rate(self, node):
        return self.base.section_growth_rate(node)

    def to_json(self):
        return {"kind": "pinned", "base": self.base.to_json(), "pin": complex_to_json(self.pin)}


@dataclass(frozen=True)
class KernelSection(EntireFunctionModel):
    """The model z -> k(node, z) for a fixed kernel rule."""

    kernel: KernelRule
    node: complex

    def __post_init__(self):
        node = complex(self.node)
        if not np.isfinite(node):
            raise DomainError("section node must be finite")
        object.__setattr__(self, "node", node)

    @property
    def wbar(self) -> complex:
        return complex(np.conj(self.node))

    def _eval_array(self, z):
        return np.asarray(self.kernel.eval_zw(z, self.wbar), dtype=complex)

    def star(self):
        return KernelSection(self.kernel.star_rule(), np.conj(self.node))

    def growth_rate(self):
        return self.kernel.section_growth_rate(self.node)

    def _taylor_impl(self, center, order):
        if isinstance(self.kernel, BandKernel):
            u = center - self.wbar
            derivs = np.array(
                [band_kappa(self.kernel.c, self.kernel.d, u, order=m) for m in range(order + 1)]
            )
            return derivs / _factorial_array(order)
        return super()._taylor_impl(center, order)

    def to_json(self):
        return {
            "variant": "kernel_section",
            "kernel": self.kernel.to_json(),
            "node": complex_to_json(self.node),
        }


@functools.lru_cache(maxsize=64)
def _factorial_array(order: int) -> np.ndarray:
    out = np.array([factorial(k) for k in range(order + 1)], dtype=float)
    out.flags.writeable = False
    return out


def kernel_rule_to_json(rule: KernelRule) -> dict:
    return rule.to_json()


def kernel_rule_from_json(obj: dict) -> KernelRule:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("kernel rule JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "band":
        return BandKernel(float(obj["c"]), float(obj["d"]))
    if kind == "quotient":
        return QuotientKernel.from_e(model_from_json(obj["e"]))
    if kind == "pinned":
        return PinnedKernel(kernel_rule_from_json(obj["base"]), complex_from_json(obj["pin"]))
    raise ValueError(f"unknown kernel rule kind {kind!r}")


def kernel_section_from_json(obj: dict) -> KernelSection:
    return KernelSection(kernel_rule_from_json(obj["kernel"]), complex_from_json(obj["node"]))
