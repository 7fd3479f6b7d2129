"""Basis families over (x, i) and (x, i, u), with analytic conditioning.

Monomial-product families evaluate as products of per-dimension powers of
affinely rescaled inputs; rescaling to [-1, 1] keeps the regression designs
reasonably conditioned and is stored on the spec so coefficients stay
interpretable.  Regress-later families additionally expose one-step
conditional expectations, assembled from the process moment formulas: a
product term phi(x, i) = phi_X(x) phi_I(i) conditions as
phi_I(i') * E[phi_X(X_{n+1}) | X_n = x].
"""

from dataclasses import dataclass

import math

import numpy as np

from .errors import DimensionMismatch
from .validation import as_float_array


@dataclass(frozen=True, eq=False)
class AffineScaling:
    """Per-dimension map v -> (v - center) / half."""

    center: np.ndarray
    half: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(as_float_array(self.center, "center"))
        h = np.atleast_1d(as_float_array(self.half, "half"))
        if c.shape != h.shape or np.any(h <= 0.0):
            raise ValueError("scaling needs matching shapes and positive half-widths")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half", h)

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def from_range(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        half = np.where(hi > lo, (hi - lo) / 2.0, 1.0)
        return cls((lo + hi) / 2.0, half)

    def forward(self, v):
        return (np.asarray(v, dtype=float) - self.center) / self.half


def _check_terms(terms, dim, name):
    t = np.atleast_2d(np.asarray(terms, dtype=int))
    if t.shape[1] != dim:
        raise ValueError(f"{name} multi-indices must have {dim} entries")
    if np.any(t < 0):
        raise ValueError(f"{name} exponents must be nonnegative")
    return t


def _unique_rows(stacked):
    seen = set()
    for row in stacked:
        key = tuple(int(v) for v in row)
        if key in seen:
            return False
        seen.add(key)
    return True


@dataclass(frozen=True, eq=False)
class PolyProduct:
    """Products of exogenous and inventory monomials, explicit term list."""

    exo_terms: np.ndarray
    inv_terms: np.ndarray
    exo_scaling: AffineScaling = None
    inv_scaling: AffineScaling = None

    def __post_init__(self):
        exo = _check_terms(self.exo_terms, np.atleast_2d(self.exo_terms).shape[1],
                           "exo_terms")
        inv = _check_terms(self.inv_terms, np.atleast_2d(self.inv_terms).shape[1],
                           "inv_terms")
        if exo.shape[0] != inv.shape[0]:
            raise ValueError("exo_terms and inv_terms must list the same K terms")
        if not _unique_rows(np.hstack([exo, inv])):
            raise ValueError("duplicate multi-indices break linear independence")
        object.__setattr__(self, "exo_terms", exo)
        object.__setattr__(self, "inv_terms", inv)
        if self.exo_scaling is None:
            object.__setattr__(self, "exo_scaling", AffineScaling.identity(exo.shape[1]))
        if self.inv_scaling is None:
            object.__setattr__(self, "inv_scaling", AffineScaling.identity(inv.shape[1]))

    @classmethod
    def tensor(cls, exo_degrees, inv_degrees, exo_scaling=None, inv_scaling=None):
        """Full tensor of monomials up to the per-dimension degrees."""
        grids = [np.arange(d + 1) for d in exo_degrees] + [
            np.arange(d + 1) for d in inv_degrees
        ]
        mesh = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")],
                        axis=1)
        p = len(exo_degrees)
        return cls(mesh[:, :p], mesh[:, p:], exo_scaling, inv_scaling)

    @property
    def n_terms(self):
        return self.exo_terms.shape[0]

    @property
    def exo_dim(self):
        return self.exo_terms.shape[1]

    @property
    def inv_dim(self):
        return self.inv_terms.shape[1]


@dataclass(frozen=True, eq=False)
class PolyWithControl:
    """PolyProduct extended with control monomials (control randomisation)."""

    exo_terms: np.ndarray
    inv_terms: np.ndarray
    ctl_terms: np.ndarray
    exo_scaling: AffineScaling = None
    inv_scaling: AffineScaling = None
    ctl_scaling: AffineScaling = None

    def __post_init__(self):
        exo = np.atleast_2d(np.asarray(self.exo_terms, dtype=int))
        inv = np.atleast_2d(np.asarray(self.inv_terms, dtype=int))
        ctl = np.atleast_2d(np.asarray(self.ctl_terms, dtype=int))
        if not (exo.shape[0] == inv.shape[0] == ctl.shape[0]):
            raise ValueError("term lists must agree on K")
        if not _unique_rows(np.hstack([exo, inv, ctl])):
            raise ValueError("duplicate multi-indices break linear independence")
        for name, arr in (("exo_terms", exo), ("inv_terms", inv), ("ctl_terms", ctl)):
            object.__setattr__(self, name, arr)
        if self.exo_scaling is None:
            object.__setattr__(self, "exo_scaling", AffineScaling.identity(exo.shape[1]))
        if self.inv_scaling is None:
            object.__setattr__(self, "inv_scaling", AffineScaling.identity(inv.shape[1]))
        if self.ctl_scaling is None:
            object.__setattr__(self, "ctl_scaling", AffineScaling.identity(ctl.shape[1]))

    @property
    def n_terms(self):
        return self.exo_terms.shape[0]


@dataclass(frozen=True, eq=False)
class ExoOnly:
    """Monomials in the exogenous state only (grid discretisation)."""

    exo_terms: np.ndarray
    exo_scaling: AffineScaling = None

    def __post_init__(self):
        exo = np.atleast_2d(np.asarray(self.exo_terms, dtype=int))
        if not _unique_rows(exo):
            raise ValueError("duplicate multi-indices break linear independence")
        object.__setattr__(self, "exo_terms", exo)
        if self.exo_scaling is None:
            object.__setattr__(self, "exo_scaling", AffineScaling.identity(exo.shape[1]))

    @classmethod
    def tensor(cls, exo_degrees, exo_scaling=None):
        grids = [np.arange(d + 1) for d in exo_degrees]
        mesh = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")],
                        axis=1)
        return cls(mesh, exo_scaling)

    @property
    def n_terms(self):
        return self.exo_terms.shape[0]


@dataclass(frozen=True, eq=False)
class HypercubeAffine:
    """Disjoint half-open boxes over (x, i) with one affine function each.

    phi_k(x, i) = (a_k . x + b_k . i + c_k) 1{(x, i) in B_k}, where B_k is
    [lo, hi) per dimension (infinite edges allowed).  Points outside every box
    evaluate to zero.
    """

    boxes_lo: np.ndarray     # (K, p + q)
    boxes_hi: np.ndarray
    exo_coeffs: np.ndarray   # (K, p)
    inv_coeffs: np.ndarray   # (K, q)
    const: np.ndarray        # (K,)

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.boxes_lo, dtype=float))
        hi = np.atleast_2d(np.asarray(self.boxes_hi, dtype=float))
        a = np.atleast_2d(np.asarray(self.exo_coeffs, dtype=float))
        b = np.atleast_2d(np.asarray(self.inv_coeffs, dtype=float))
        c = np.atleast_1d(np.asarray(self.const, dtype=float))
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("boxes need lo < hi in every dimension")
        if a.shape[1] + b.shape[1] != lo.shape[1]:
            raise ValueError("affine coefficients must cover all box dimensions")
        for name, arr in (("boxes_lo", lo), ("boxes_hi", hi),
                          ("exo_coeffs", a), ("inv_coeffs", b), ("const", c)):
            object.__setattr__(self, name, arr)

    @classmethod
    def indicator_grid(cls, exo_edges, inv_edges):
        """Pure indicator basis on the grid of cells spanned by the edges.

        ``exo_edges`` / ``inv_edges`` are lists of per-dimension edge arrays;
        each cell [e_j, e_{j+1}) becomes one box with affine part == 1.
        """
        per_dim = [np.asarray(e, dtype=float) for e in exo_edges + inv_edges]
        cells = [np.stack([e[:-1], e[1:]], axis=1) for e in per_dim]
        idx_grids = np.meshgrid(*[np.arange(len(c)) for c in cells], indexing="ij")
        idx = np.stack([g.ravel() for g in idx_grids], axis=1)
        lo = np.stack([cells[d][idx[:, d], 0] for d in range(len(cells))], axis=1)
        hi = np.stack([cells[d][idx[:, d], 1] for d in range(len(cells))], axis=1)
        k = lo.shape[0]
        p = len(exo_edges)
        q = len(inv_edges)
        return cls(lo, hi, np.zeros((k, p)), np.zeros((k, q)), np.ones(k))

    @property
    def n_terms(self):
        return self.boxes_lo.shape[0]

    @property
    def exo_dim(self):
        return self.exo_coeffs.shape[1]

    @property
    def inv_dim(self):
        return self.inv_coeffs.shape[1]


def _power_table(values, max_degree):
    """(..., d) -> (..., d, max_degree + 1) table of integer powers."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    for j in range(1, max_degree + 1):
        out[..., j] = out[..., j - 1] * values
    return out


def _gather_product(power_table, terms):
    """Product over dimensions of power_table[..., d, terms[k, d]] -> (..., K)."""
    out = np.ones(power_table.shape[:-2] + (terms.shape[0],))
    for d in range(terms.shape[1]):
        out = out * power_table[..., d, :][..., terms[:, d]]
    return out


def _monomials(values, terms, scaling):
    if terms.shape[1] == 0:
        return np.ones(np.asarray(values, dtype=float).shape[:-1] + (terms.shape[0],))
    scaled = scaling.forward(values)
    table = _power_table(scaled, int(terms.max()) if terms.size else 0)
    return _gather_product(table, terms)


def eval_basis(spec, x, i=None, u=None):
    """Evaluate all K basis functions at one or many points.

    x has shape (..., p), i has shape (..., q); the inventory argument is
    unused for ExoOnly, and a control argument is required exactly for
    PolyWithControl.  Returns (..., K).
    """
    x = np.asarray(x, dtype=float)
    if isinstance(spec, ExoOnly):
        if u is not None:
            raise DimensionMismatch("ExoOnly basis takes no control")
        if x.shape[-1] != spec.exo_terms.shape[1]:
            raise DimensionMismatch("point dimensions do not match the basis")
        return _monomials(x, spec.exo_terms, spec.exo_scaling)
    if i is None:
        raise DimensionMismatch(f"{type(spec).__name__} basis requires an inventory")
    i = np.asarray(i, dtype=float)
    if isinstance(spec, PolyWithControl):
        if u is None:
            raise DimensionMismatch("PolyWithControl basis requires a control")
        u = np.asarray(u, dtype=float)
        return (_monomials(x, spec.exo_terms, spec.exo_scaling)
                * _monomials(i, spec.inv_terms, spec.inv_scaling)
                * _monomials(u, spec.ctl_terms, spec.ctl_scaling))
    if u is not None:
        raise DimensionMismatch(f"{type(spec).__name__} basis takes no control")
    if isinstance(spec, PolyProduct):
        if x.shape[-1] != spec.exo_dim or i.shape[-1] != spec.inv_dim:
            raise DimensionMismatch("point dimensions do not match the basis")
        return (_monomials(x, spec.exo_terms, spec.exo_scaling)
                * _monomials(i, spec.inv_terms, spec.inv_scaling))
    if isinstance(spec, HypercubeAffine):
        if x.shape[-1] != spec.exo_dim or i.shape[-1] != spec.inv_dim:
            raise DimensionMismatch("point dimensions do not match the basis")
        batch = np.broadcast_shapes(x.shape[:-1], i.shape[:-1])
        point = np.concatenate([np.broadcast_to(x, batch + x.shape[-1:]),
                                np.broadcast_to(i, batch + i.shape[-1:])], axis=-1)
        member = np.all(
            (point[..., None, :] >= spec.boxes_lo) & (point[..., None, :] < spec.boxes_hi),
            axis=-1,
        )
        affine = (np.einsum("...d,kd->...k", x, spec.exo_coeffs)
                  + np.einsum("...d,kd->...k", i, spec.inv_coeffs) + spec.const)
        return np.where(member, affine, 0.0)
    raise TypeError(f"unknown basis spec {type(spec).__name__}")


def _scaled_moment_matrix(center, half, max_degree):
    """B with E[((X - c)/h)^j] = sum_k B[j, k] E[X^k]."""
    b = np.zeros((max_degree + 1, max_degree + 1))
    for j in range(max_degree + 1):
        for k in range(j + 1):
            b[j, k] = math.comb(j, k) * (-center) ** (j - k) / half**j
    return b


class _PolyKernel:
    """Cached exo-side conditional factors for a PolyProduct basis."""

    def __init__(self, spec, process, n, x):
        self.spec = spec
        if x is None:
            return
        max_deg = [int(spec.exo_terms[:, d].max()) for d in range(spec.exo_dim)]
        moments = process.observed_moments(n + 1, x, max_deg)
        batch = np.asarray(x, dtype=float).shape[:-1]
        table = np.ones(batch + (spec.exo_dim, max(max_deg) + 1))
        for d in range(spec.exo_dim):
            b = _scaled_moment_matrix(spec.exo_scaling.center[d],
                                      spec.exo_scaling.half[d], max_deg[d])
            table[..., d, : max_deg[d] + 1] = np.einsum(
                "...k,jk->...j", moments[d], b
            )
        self.exo_factors = _gather_product(table, spec.exo_terms)  # (..., K)

    def restrict(self, rows):
        """Kernel restricted to a path subset (or with repeated rows)."""
        out = _PolyKernel(self.spec, None, None, None)
        out.exo_factors = self.exo_factors[rows]
        return out

    def at(self, i_next):
        """Conditional basis at inventory candidates (..., G..., q)."""
        inv = _monomials(np.asarray(i_next, dtype=float), self.spec.inv_terms,
                         self.spec.inv_scaling)
        extra = inv.ndim - self.exo_factors.ndim
        exo = self.exo_factors.reshape(
            self.exo_factors.shape[:-1] + (1,) * extra + (self.exo_factors.shape[-1],)
        )
        return exo * inv


class _HypercubeKernel:
    """Cached exo-side box probabilities and first moments."""

    def __init__(self, spec, process, n, x):
        self.spec = spec
        if x is None:
            return
        x = np.asarray(x, dtype=float)
        batch = x.shape[:-1]
        k, p = spec.n_terms, spec.exo_dim
        probs = np.ones(batch + (k, p))
        first = np.zeros(batch + (k, p))
        for kk in range(k):
            for d in range(p):
                tm = process.truncated_observed_moments(
                    n + 1, x, d, spec.boxes_lo[kk, d], spec.boxes_hi[kk, d], 1
                )
                probs[..., kk, d] = tm[..., 0]
                first[..., kk, d] = tm[..., 1]
        self.prob = np.prod(probs, axis=-1)  # (..., K)
        # sum_d a_kd E[x_d 1{box_d}] prod_{d' != d} P_{d'}
        sums = np.zeros(batch + (k,))
        for d in range(p):
            others = np.prod(np.delete(probs, d, axis=-1), axis=-1)
            sums = sums + spec.exo_coeffs[:, d] * first[..., d] * others
        self.linear = sums

    def restrict(self, rows):
        out = _HypercubeKernel(self.spec, None, None, None)
        out.prob = self.prob[rows]
        out.linear = self.linear[rows]
        return out

    def at(self, i_next):
        i_next = np.asarray(i_next, dtype=float)
        spec = self.spec
        lo_i = spec.boxes_lo[:, spec.exo_dim:]
        hi_i = spec.boxes_hi[:, spec.exo_dim:]
        member = np.all((i_next[..., None, :] >= lo_i)
                        & (i_next[..., None, :] < hi_i), axis=-1)  # (..., K)
        inv_affine = np.einsum("...d,kd->...k", i_next, spec.inv_coeffs) + spec.const
        extra = member.ndim - self.prob.ndim
        prob = self.prob.reshape(self.prob.shape[:-1] + (1,) * extra
                                 + (self.prob.shape[-1],))
        linear = self.linear.reshape(prob.shape[:-1] + (self.linear.shape[-1],))
        return np.where(member, linear + inv_affine * prob, 0.0)


def conditional_kernel(spec, process, n, x):
    """Exo-side conditional factors at time n, reusable across controls.

    The returned kernel's ``at(i_next)`` composes the cached factors with the
    inventory part of every term; this is the workhorse of regress-later
    argmax loops, where one state evaluates many candidate inventories.
    """
    if isinstance(spec, PolyProduct):
        return _PolyKernel(spec, process, n, x)
    if isinstance(spec, HypercubeAffine):
        return _HypercubeKernel(spec, process, n, x)
    raise TypeError(
        f"conditional expectations are defined for PolyProduct and "
        f"HypercubeAffine bases, not {type(spec).__name__}"
    )


def eval_conditional_basis(spec, process, n, x, i_next):
    """E[phi_k(X_{n+1}, i_next) | X_n = x] for every term k.

    x holds the *underlying* process state at step n; i_next is the candidate
    next inventory.  Raises UnsupportedMoment for process variants without the
    required closed forms.
    """
    return conditional_kernel(spec, process, n, x).at(i_next)


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Per-step regression coefficients with conditioning diagnostics.

    Row n holds the coefficients used to evaluate the continuation when
    choosing the control at step n, under the owning algorithm's convention.
    """

    alpha: np.ndarray
    basis: object
    condition_numbers: np.ndarray
    ridge_flags: np.ndarray


def _scaling_to_dict(s):
    return {"center": s.center.tolist(), "half": s.half.tolist()}


def _scaling_from_dict(d):
    return AffineScaling(np.asarray(d["center"]), np.asarray(d["half"]))


def basis_to_dict(spec):
    """Serialise a basis spec with explicit term multi-indices."""
    if isinstance(spec, PolyWithControl):
        return {"family": "poly_with_control",
                "exo_terms": spec.exo_terms.tolist(),
                "inv_terms": spec.inv_terms.tolist(),
                "ctl_terms": spec.ctl_terms.tolist(),
                "exo_scaling": _scaling_to_dict(spec.exo_scaling),
                "inv_scaling": _scaling_to_dict(spec.inv_scaling),
                "ctl_scaling": _scaling_to_dict(spec.ctl_scaling)}
    if isinstance(spec, PolyProduct):
        return {"family": "poly_product",
                "exo_terms": spec.exo_terms.tolist(),
                "inv_terms": spec.inv_terms.tolist(),
                "exo_scaling": _scaling_to_dict(spec.exo_scaling),
                "inv_scaling": _scaling_to_dict(spec.inv_scaling)}
    if isinstance(spec, ExoOnly):
        return {"family": "exo_only",
                "exo_terms": spec.exo_terms.tolist(),
                "exo_scaling": _scaling_to_dict(spec.exo_scaling)}
    if isinstance(spec, HypercubeAffine):
        return {"family": "hypercube_affine",
                "boxes_lo": spec.boxes_lo.tolist(),
                "boxes_hi": spec.boxes_hi.tolist(),
                "exo_coeffs": spec.exo_coeffs.tolist(),
                "inv_coeffs": spec.inv_coeffs.tolist(),
                "const": spec.const.tolist()}
    raise TypeError(f"unknown basis spec {type(spec).__name__}")


def basis_from_dict(d):
    family = d["family"]
    if family == "poly_with_control":
        return PolyWithControl(np.asarray(d["exo_terms"]), np.asarray(d["inv_terms"]),
                               np.asarray(d["ctl_terms"]),
                               _scaling_from_dict(d["exo_scaling"]),
                               _scaling_from_dict(d["inv_scaling"]),
                               _scaling_from_dict(d["ctl_scaling"]))
    if family == "poly_product":
        return PolyProduct(np.asarray(d["exo_terms"]), np.asarray(d["inv_terms"]),
                           _scaling_from_dict(d["exo_scaling"]),
                           _scaling_from_dict(d["inv_scaling"]))
    if family == "exo_only":
        return ExoOnly(np.asarray(d["exo_terms"]),
                       _scaling_from_dict(d["exo_scaling"]))
    if family == "hypercube_affine":
        return HypercubeAffine(np.asarray(d["boxes_lo"]), np.asarray(d["boxes_hi"]),
                               np.asarray(d["exo_coeffs"]), np.asarray(d["inv_coeffs"]),
                               np.asarray(d["const"]))
    raise ValueError(f"unknown basis family {family!r}")
