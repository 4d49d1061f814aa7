"""De Branges spaces, inner products, Gram machinery, and subspace models.

Inner products are exact on the closed kernel-combination family. Two exact
routes exist:

* the *spectral atom* route, valid whenever |E| = 1 on the real axis
  (exponential E): every admissible model reduces to a combination of
  band-kernel sections, and pairwise inner products are band kernels of
  intersected intervals;
* the *shared rule* route: combinations of sections of one reproducing
  kernel pair off against kernel evaluations directly.

Adaptive trapezoid quadrature over the real axis exists as an independent
cross-check oracle, never as the primary computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .defaults import COMMON_ZERO_RTOL, PINV_RANK_RTOL, standard_hb_grid
from .errors import (
    DomainError,
    EmptySubspaceError,
    PreconditionError,
    QuadratureAccuracyError,
    UnsupportedRepresentationError,
)
from .kernels import BandKernel, KernelRule, KernelSection, PinnedKernel, band_kappa
from .models import (
    EntireFunctionModel,
    Exponential,
    LinearCombination,
    Polynomial,
    Product,
    hermite_biehler_check,
)

__all__ = [
    "SpectralAtom",
    "spectral_atoms",
    "atoms_inner_product",
    "DeBrangesSpace",
    "debranges_kernel",
    "inner_product",
    "quadrature_inner_product",
    "gram_matrix",
    "SubspaceModel",
    "project_kernel",
    "subspace_kernel",
    "centered_nodes",
    "subspace_from_nodes",
    "full_space_model",
    "zero_pinned_model",
]


# ---------------------------------------------------------------------------
# Spectral atoms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralAtom:
    """One term coef * (-it)^dorder e^{-i wbar t} / (2 pi) of a density on (c, d).

    dorder 0 is a plain band-kernel section; dorder 1 is its derivative in
    the conjugated node slot.
    """

    c: float
    d: float
    wbar: complex
    coef: complex
    dorder: int = 0

    def value(self, z):
        v = band_kappa(self.c, self.d, np.asarray(z, complex) - self.wbar, order=self.dorder)
        return self.coef * ((-1) ** self.dorder) * v

    def shifted(self, b: float) -> tuple["SpectralAtom", ...]:
        """Atoms of e^{i b z} times this atom."""
        phase = np.exp(1j * self.wbar * b)
        moved = SpectralAtom(self.c + b, self.d + b, self.wbar, self.coef * phase, self.dorder)
        if self.dorder == 0:
            return (moved,)
        extra = SpectralAtom(self.c + b, self.d + b, self.wbar, self.coef * phase * 1j * b, 0)
        return (moved, extra)


def _atom_pair_ip(a: SpectralAtom, b: SpectralAtom) -> complex:
    lo, hi = max(a.c, b.c), min(a.d, b.d)
    if lo >= hi:
        return 0.0
    u = np.conj(b.wbar) - a.wbar
    if a.dorder == 0 and b.dorder == 0:
        base = band_kappa(lo, hi, u)
    elif a.dorder == 1 and b.dorder == 0:
        base = -band_kappa(lo, hi, u, order=1)
    elif a.dorder == 0 and b.dorder == 1:
        base = band_kappa(lo, hi, u, order=1)
    else:
        base = -band_kappa(lo, hi, u, order=2)
    return a.coef * np.conj(b.coef) * base


def atoms_inner_product(fa: tuple[SpectralAtom, ...], ga: tuple[SpectralAtom, ...]) -> complex:
    return complex(sum(_atom_pair_ip(a, b) for a in fa for b in ga))


def atoms_value(atoms: tuple[SpectralAtom, ...], z):
    pts = np.asarray(z, dtype=complex)
    out = np.zeros(pts.shape, dtype=complex)
    for a in atoms:
        out = out + a.value(pts)
    return out


def _section_atoms(section: KernelSection) -> tuple[SpectralAtom, ...] | None:
    rule = section.kernel
    if isinstance(rule, BandKernel):
        return (SpectralAtom(rule.c, rule.d, section.wbar, 1.0),)
    if isinstance(rule, PinnedKernel):
        base_sec = _section_atoms(KernelSection(rule.base, section.node))
        pin_sec = _section_atoms(KernelSection(rule.base, rule.pin))
        if base_sec is None or pin_sec is None:
            return None
        p = rule.pin
        gamma = rule.base.eval_zw(p, section.wbar) / rule.base.eval_zw(p, np.conj(p))
        scaled = tuple(
            SpectralAtom(a.c, a.d, a.wbar, -gamma * a.coef, a.dorder) for a in pin_sec
        )
        return base_sec + scaled
    return None


def spectral_atoms(model: EntireFunctionModel) -> tuple[SpectralAtom, ...] | None:
    """Reduce a model to spectral atoms, or None when it is outside the family."""
    if isinstance(model, KernelSection):
        return _section_atoms(model)
    if isinstance(model, LinearCombination):
        out: list[SpectralAtom] = []
        for w, part in zip(model.weights, model.parts):
            if w == 0:
                continue
            sub = spectral_atoms(part)
            if sub is None:
                return None
            out.extend(SpectralAtom(a.c, a.d, a.wbar, w * a.coef, a.dorder) for a in sub)
        return tuple(out)
    if isinstance(model, Product):
        shift = 0.0
        core: EntireFunctionModel | None = None
        for part in model.parts:
            if isinstance(part, Exponential):
                shift += part.rate
            elif core is None:
                core = part
            else:
                return None
        if core is None:
            return None
        atoms = spectral_atoms(core)
        if atoms is None:
            return None
        if shift == 0.0:
            return atoms
        out = []
        for a in atoms:
            out.extend(a.shifted(shift))
        return tuple(out)
    if isinstance(model, Polynomial) and all(c == 0 for c in model.coefficients):
        return ()
    return None


# ---------------------------------------------------------------------------
# Section combinations sharing one kernel rule
# ---------------------------------------------------------------------------

def _section_combo(model) -> tuple[KernelRule, list[complex], list[complex]] | None:
    """Decompose into (rule, nodes, weights) when the model is a combination
    of sections of a single kernel rule."""
    if isinstance(model, KernelSection):
        return model.kernel, [model.node], [1.0]
    if isinstance(model, LinearCombination):
        rule = None
        nodes: list[complex] = []
        weights: list[complex] = []
        for w, part in zip(model.weights, model.parts):
            if w == 0:
                continue
            sub = _section_combo(part)
            if sub is None:
                return None
            sub_rule, sub_nodes, sub_weights = sub
            if rule is None:
                rule = sub_rule
            elif rule != sub_rule:
                return None
            nodes.extend(sub_nodes)
            weights.extend(complex(w) * np.asarray(sub_weights))
        if rule is None:
            return None
        return rule, nodes, weights
    return None


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeBrangesSpace:
    """A structure function E plus its kernel rule.

    Construction validates the Hermite-Biehler inequality on the standard
    grid; closed-form band kernels are attached automatically when E is a
    pure exponential.
    """

    e: EntireFunctionModel
    rule: KernelRule
    label: str = ""

    @classmethod
    def from_e(cls, e: EntireFunctionModel, label: str = "") -> "DeBrangesSpace":
        from .kernels import QuotientKernel, pw_rule

        report = hermite_biehler_check(e, standard_hb_grid())
        if not report.passed:
            raise DomainError(
                f"E fails the Hermite-Biehler inequality (worst margin {report.worst_margin:.3e})"
            )
        if isinstance(e, Exponential):
            rule: KernelRule = pw_rule(-e.rate)
        else:
            rule = QuotientKernel.from_e(e)
        return cls(e, rule, label)

    def kernel(self, lam, z):
        return self.rule.kernel(lam, z)

    def kernel_diag(self, lam) -> np.ndarray:
        pts = np.asarray(lam, dtype=complex)
        return np.real(self.rule.kernel(pts, pts))

    def section(self, node: complex) -> KernelSection:
        return KernelSection(self.rule, complex(node))

    @property
    def unimodular_weight(self) -> bool:
        return isinstance(self.e, Exponential)

    def weight(self, x: np.ndarray) -> np.ndarray:
        """1 / |E(x)|^2 on the real axis."""
        if self.unimodular_weight:
            return np.ones(np.shape(x))
        return 1.0 / np.abs(self.e.eval(np.asarray(x, complex))) ** 2


def debranges_kernel(space: DeBrangesSpace, lam, z):
    """k_E(lambda, z) with the analytic limit on the diagonal."""
    return space.kernel(lam, z)


def inner_product(space: DeBrangesSpace, f: EntireFunctionModel, g: EntireFunctionModel) -> complex:
    """Exact H(E) inner product via the reproducing property.

    Raises UnsupportedRepresentationError for models outside the closed
    family; use quadrature_inner_product as the cross-check in that case.
    """
    if space.unimodular_weight:
        fa, ga = spectral_atoms(f), spectral_atoms(g)
        if fa is not None and ga is not None:
            return atoms_inner_product(fa, ga)
    fc, gc = _section_combo(f), _section_combo(g)
    if fc is not None and gc is not None and fc[0] == gc[0]:
        rule, fn, fw = fc
        _, gn, gw = gc
        kmat = rule.kernel(np.asarray(fn)[:, None], np.asarray(gn)[None, :])
        return complex(np.asarray(fw) @ np.atleast_2d(kmat) @ np.conj(np.asarray(gw)))
    raise UnsupportedRepresentationError(
        "models are not kernel combinations this space can pair exactly; "
        "use quadrature_inner_product as a cross-check"
    )


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

_QUAD_BUDGET = 2 ** 24


def quadrature_inner_product(
    space: DeBrangesSpace,
    f: EntireFunctionModel,
    g: EntireFunctionModel,
    tol: float = 1e-6,
) -> complex:
    """Adaptive truncated trapezoid estimate of integral f(x) conj(g(x)) / |E(x)|^2 dx.

    The window doubles until the last octave contributes less than tol/4 and
    the step halves until the in-window change is below tol/2. Exists as a
    test oracle for inner_product.
    """

    def integrand(x: np.ndarray) -> np.ndarray:
        return f.eval(x.astype(complex)) * np.conj(g.eval(x.astype(complex))) * space.weight(x)

    spent = 0

    def window_sum(window: float, step: float) -> complex:
        nonlocal spent
        n = int(np.floor(2 * window / step)) + 1
        spent += n
        if spent > _QUAD_BUDGET:
            raise _BudgetExceeded
        xs = -window + step * np.arange(n)
        vals = integrand(xs)
        total = np.sum(vals) - 0.5 * (vals[0] + vals[-1])
        return complex(total * step)

    window, step = 64.0, 0.5
    best = 0.0 + 0.0j
    try:
        current = window_sum(window, step)
        for _ in range(64):
            best = current
            finer = window_sum(window, step / 2)
            if abs(finer - current) > tol / 2:
                step /= 2
                current = finer
                continue
            octave = window_sum(2 * window, step) - window_sum(window, step)
            if abs(octave) > tol / 4:
                window *= 2
                current = finer + octave
                continue
            return finer
    except _BudgetExceeded:
        raise QuadratureAccuracyError(
            f"quadrature budget of {_QUAD_BUDGET} samples exhausted before reaching tol={tol:g}",
            best_estimate=best,
            error_estimate=float("nan"),
        ) from None
    raise QuadratureAccuracyError(
        "quadrature failed to settle within the refinement budget",
        best_estimate=best,
        error_estimate=float("nan"),
    )


class _BudgetExceeded(Exception):
    pass


# ---------------------------------------------------------------------------
# Gram and subspaces
# ---------------------------------------------------------------------------

def gram_matrix(space: DeBrangesSpace, spanning) -> np.ndarray:
    """Hermitian Gram matrix G[j][l] = <s_j, s_l>, symmetrized on output."""
    spanning = list(spanning)
    n = len(spanning)
    shared = _shared_rule_nodes(spanning)
    if shared is not None:
        rule, nodes = shared
        nodes = np.asarray(nodes, dtype=complex)
        gram = np.atleast_2d(rule.kernel(nodes[:, None], nodes[None, :]))
    else:
        gram = np.empty((n, n), dtype=complex)
        for j in range(n):
            for l in range(j, n):
                val = inner_product(space, spanning[j], spanning[l])
                gram[j, l] = val
                gram[l, j] = np.conj(val)
    return 0.5 * (gram + gram.conj().T)


def _shared_rule_nodes(spanning) -> tuple[KernelRule, list[complex]] | None:
    rule = None
    nodes = []
    for s in spanning:
        if not isinstance(s, KernelSection):
            return None
        if rule is None:
            rule = s.kernel
        elif rule != s.kernel:
            return None
        nodes.append(s.node)
    if rule is None:
        return None
    return rule, nodes


@dataclass(frozen=True)
class SubspaceModel:
    """Closed subspace represented by spanning functions plus Gram data.

    ``override`` carries the exact reproducing kernel when it is known in
    closed form; the projected kernel stays available for diagnostics.
    """

    ambient: DeBrangesSpace
    spanning: tuple[EntireFunctionModel, ...]
    gram: np.ndarray
    override: KernelRule | None = None
    label: str = ""
    _pinv: np.ndarray = field(repr=False, default=None)
    _rank: int = 0

    @classmethod
    def build(
        cls,
        ambient: DeBrangesSpace,
        spanning,
        override: KernelRule | None = None,
        label: str = "",
    ) -> "SubspaceModel":
        spanning = tuple(spanning)
        gram = gram_matrix(ambient, spanning)
        if gram.size:
            hermit_defect = float(np.max(np.abs(gram - gram.conj().T)))
            if hermit_defect > 1e-13 * max(1.0, float(np.max(np.abs(gram)))):
                raise PreconditionError(f"Gram matrix not Hermitian (defect {hermit_defect:.3e})")
            eigs = np.linalg.eigvalsh(gram)
            trace = float(np.real(np.trace(gram)))
            if eigs.min() < -1e-10 * max(trace, 1e-300):
                raise PreconditionError(
                    f"Gram matrix not positive semidefinite (min eigenvalue {eigs.min():.3e})"
                )
        pinv, rank = _pinv_with_rank(gram)
        gram = gram.copy()
        gram.flags.writeable = False
        pinv.flags.writeable = False
        return cls(ambient, spanning, gram, override, label, pinv, rank)

    @property
    def rank(self) -> int:
        return self._rank

    def section_values(self, z) -> np.ndarray:
        """Matrix s_j(z) with one row per spanning function."""
        pts = np.asarray(z, dtype=complex).ravel()
        return np.array([s.eval(pts) for s in self.spanning], dtype=complex)

    def kernel(self, lam, z):
        return subspace_kernel(self, lam, z)

    def kernel_diag(self, lam) -> np.ndarray:
        pts = np.asarray(lam, dtype=complex).ravel()
        if self.override is not None:
            return np.real(self.override.kernel(pts, pts))
        coeffs = project_kernel(self, pts)
        vals = np.einsum("jn,jn->n", coeffs, self.section_values(pts))
        return np.real(vals)

    def section_model(self, node: complex) -> EntireFunctionModel:
        """The model of k_N(node, .) as a member of the closed family."""
        if self.override is not None:
            return KernelSection(self.override, complex(node))
        coeffs = project_kernel(self, node)
        return LinearCombination(tuple(coeffs.ravel()), self.spanning)

    def common_zero_threshold(self, lam) -> np.ndarray:
        return COMMON_ZERO_RTOL * self.ambient.kernel_diag(lam)


def _pinv_with_rank(gram: np.ndarray) -> tuple[np.ndarray, int]:
    if gram.size == 0:
        return np.zeros((0, 0), dtype=complex), 0
    u, s, vh = np.linalg.svd(gram, hermitian=True)
    keep = s > PINV_RANK_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(keep))
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T, rank


def project_kernel(sub: SubspaceModel, lam) -> np.ndarray:
    """Coefficients c with P_N k_E(lam, .) = sum_j c_j s_j.

    Returns shape (rank_of_family, n_lambda); deterministic given the
    pseudo-inverse rank tolerance.
    """
    if sub.rank < 1:
        raise EmptySubspaceError("subspace has rank 0; nothing to project onto")
    pts = np.asarray(lam, dtype=complex).ravel()
    svals = sub.section_values(pts)
    return np.conj(sub._pinv @ svals)


def subspace_kernel(sub: SubspaceModel, lam, z):
    """k_N(lam, z): exact override when present, else the projected kernel."""
    if sub.override is not None:
        return sub.override.kernel(lam, z)
    return projected_kernel(sub, lam, z)


def projected_kernel(sub: SubspaceModel, lam, z):
    """Projection-route kernel evaluation, exposed for diagnostics."""
    lam_arr = np.asarray(lam, dtype=complex)
    z_arr = np.asarray(z, dtype=complex)
    scalar = lam_arr.ndim == 0 and z_arr.ndim == 0
    coeffs = project_kernel(sub, lam_arr)
    lamb, zb = np.broadcast_arrays(lam_arr, z_arr)
    out = np.zeros(zb.shape, dtype=complex)
    lam_flat = np.asarray(lam_arr).ravel()
    for idx, lv in enumerate(lam_flat):
        sel = lamb == lv
        zvals = zb[sel]
        svals = sub.section_values(zvals)
        out[sel] = coeffs[:, idx] @ svals
    return complex(out.reshape(-1)[0]) if scalar else out


# ---------------------------------------------------------------------------
# Subspace constructors
# ---------------------------------------------------------------------------

def centered_nodes(count: int, spacing: float) -> np.ndarray:
    """0, +h, -h, +2h, -2h, ... so prefixes of the family are nested."""
    if count < 1:
        raise DomainError("node count must be >= 1")
    idx = np.arange(count)
    steps = (idx + 1) // 2
    signs = np.where(idx % 2 == 1, 1.0, -1.0)
    signs[0] = 1.0
    return (steps * signs * spacing).astype(complex)


def subspace_from_nodes(space: DeBrangesSpace, nodes, label: str = "") -> SubspaceModel:
    spanning = tuple(space.section(n) for n in np.asarray(nodes, dtype=complex).ravel())
    return SubspaceModel.build(space, spanning, override=None, label=label)


def full_space_model(space: DeBrangesSpace, rank: int = 16, label: str = "full") -> SubspaceModel:
    """The whole space viewed as a subspace with its own kernel as override."""
    spacing = 0.5
    if isinstance(space.rule, BandKernel):
        spacing = np.pi / (2.0 * space.rule.half_width)
    nodes = centered_nodes(rank, spacing)
    spanning = tuple(space.section(n) for n in nodes)
    return SubspaceModel.build(space, spanning, override=space.rule, label=label)


def zero_pinned_model(
    space: DeBrangesSpace, pin: complex, rank: int = 12, label: str = ""
) -> SubspaceModel:
    """Subspace of functions vanishing at ``pin``; a deliberate common zero."""
    rule = PinnedKernel(space.rule, complex(pin))
    spacing = 0.5
    if isinstance(space.rule, BandKernel):
        spacing = np.pi / (2.0 * space.rule.half_width)
    nodes = [n for n in centered_nodes(rank + 1, spacing) if abs(n - pin) > 1e-9][:rank]
    spanning = tuple(KernelSection(rule, n) for n in nodes)
    return SubspaceModel.build(
        space, spanning, override=rule, label=label or f"pinned@{pin}"
    )
