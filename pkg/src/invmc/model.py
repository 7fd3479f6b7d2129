"""Abstract inventory control problem: dynamics, rewards, admissibility.

The controlled inventory lives on a box [0, I_max] per dimension and moves
deterministically through a user-supplied transition map.  Controls come from
either an explicit finite set or a box; problems whose feasible set couples
control coordinates (reservoir cascades, battery dispatch) supply a
``region_fn`` that describes the feasible set one coordinate at a time.

All callables attached to a problem must be numpy-vectorised over leading
batch axes: ``transition(n, u, i, x)``, ``running_reward(n, x, i, u)`` and
``terminal_reward(x, i)``.  The exogenous argument ``x`` holds *observed*
values and is ignored by problems whose dynamics do not depend on it.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyFeasibleSet, InadmissibleControl
from .validation import as_float_array

BOUND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteSet:
    """Explicit list of control vectors, shape (n_controls, control_dim)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(as_float_array(self.points, "points"))
        object.__setattr__(self, "points", pts)

    @property
    def control_dim(self):
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class Box:
    """Per-dimension closed control intervals."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(as_float_array(self.lower, "lower"))
        hi = np.atleast_1d(as_float_array(self.upper, "upper"))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("Box bounds must satisfy lower <= upper per dim")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def control_dim(self):
        return self.lower.shape[0]


class NestedRegion:
    """Feasible control set described coordinate by coordinate.

    ``dims`` gives the scan order; ``interval_fns[k]`` maps the values already
    fixed for dims[:k] (a dict {dim: array}) to the (lo, hi) interval of
    dims[k].  Intervals may be empty (lo > hi) for some prefixes, which marks
    that slice of the region infeasible.
    """

    def __init__(self, dims, interval_fns):
        if len(dims) != len(interval_fns):
            raise ValueError("one interval function per scanned dimension")
        self.dims = tuple(int(d) for d in dims)
        self.interval_fns = tuple(interval_fns)

    @property
    def control_dim(self):
        return len(self.dims)

    def interval(self, k, prefix):
        lo, hi = self.interval_fns[k](prefix)
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def contains(self, u, tol=1e-9):
        """Membership test for control vectors u of shape (..., control_dim)."""
        u = np.asarray(u, dtype=float)
        prefix = {}
        ok = np.ones(u.shape[:-1], dtype=bool)
        for k, d in enumerate(self.dims):
            lo, hi = self.interval(k, prefix)
            ok &= (u[..., d] >= lo - tol) & (u[..., d] <= hi + tol)
            prefix[d] = u[..., d]
        return ok


def box_region(lower, upper):
    """NestedRegion for a plain box (state-independent intervals)."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))

    def make(d):
        return lambda prefix: (lower[d], upper[d])

    dims = range(len(lower))
    return NestedRegion(dims, [make(d) for d in dims])


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Discrete-time inventory control problem on N decision steps.

    The time step of any continuous-time parent model is folded into the
    transition and reward callables by the problem author; the solver layer
    never sees it.
    """

    horizon_n: int
    exo_dim: int
    inv_dim: int
    inv_upper: np.ndarray
    control_space: object  # FiniteSet or Box
    transition: callable
    running_reward: callable
    terminal_reward: callable
    region_fn: callable = None
    additive_scale: np.ndarray = None  # set when transition == i + u * scale
    label: str = ""

    def __post_init__(self):
        if self.horizon_n < 1 or self.exo_dim < 1 or self.inv_dim < 1:
            raise ValueError("horizon_n, exo_dim and inv_dim must be >= 1")
        upper = as_float_array(self.inv_upper, "inv_upper", shape=(self.inv_dim,))
        if np.any(upper < 0.0):
            raise ValueError("inventory upper bounds must be nonnegative")
        object.__setattr__(self, "inv_upper", upper)
        if self.additive_scale is not None:
            scale = as_float_array(self.additive_scale, "additive_scale",
                                   shape=(self.inv_dim,))
            object.__setattr__(self, "additive_scale", scale)

    @property
    def control_dim(self):
        return self.control_space.control_dim

    def fingerprint(self):
        """Structural hash used to match policies with problems."""
        h = hashlib.sha256()
        h.update(f"{self.horizon_n},{self.exo_dim},{self.inv_dim},{self.label}".encode())
        h.update(self.inv_upper.tobytes())
        if isinstance(self.control_space, FiniteSet):
            h.update(b"finite")
            h.update(self.control_space.points.tobytes())
        else:
            h.update(b"box")
            h.update(self.control_space.lower.tobytes())
            h.update(self.control_space.upper.tobytes())
        return h.hexdigest()


def in_bounds(problem, i, tol=BOUND_TOL):
    i = np.asarray(i, dtype=float)
    return np.all((i >= -tol) & (i <= problem.inv_upper + tol), axis=-1)


def clamp_inventory(problem, i):
    return np.clip(np.asarray(i, dtype=float), 0.0, problem.inv_upper)


def apply_transition(problem, n, u, i, x=None):
    """Advance the inventory one step, clamping float drift within tolerance.

    Raises InadmissibleControl if the raw image violates the bounds by more
    than BOUND_TOL in any dimension.
    """
    nxt = np.asarray(problem.transition(n, np.asarray(u, dtype=float),
                                        np.asarray(i, dtype=float), x), dtype=float)
    if not np.all(in_bounds(problem, nxt)):
        raise InadmissibleControl(
            f"transition at step {n} leaves inventory bounds: {nxt!r}"
        )
    return clamp_inventory(problem, nxt)


def control_region(problem, n, i, x=None):
    """NestedRegion of feasible controls for box-type problems."""
    if problem.region_fn is not None:
        return problem.region_fn(n, x, np.asarray(i, dtype=float))
    space = problem.control_space
    if not isinstance(space, Box):
        raise TypeError("control_region applies to Box control spaces only")
    if problem.additive_scale is not None and problem.inv_dim == problem.control_dim:
        # phi = i + u * scale, componentwise: the feasible set is the box
        # clipped analytically against the inventory bounds.
        i = np.asarray(i, dtype=float)
        scale = problem.additive_scale
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (0.0 - i) / scale
            b = (problem.inv_upper - i) / scale
        lo_step = np.where(scale > 0, a, b)
        hi_step = np.where(scale > 0, b, a)
        lo_step = np.where(scale == 0.0, -np.inf, lo_step)
        hi_step = np.where(scale == 0.0, np.inf, hi_step)
        lo = np.maximum(space.lower, lo_step)
        hi = np.minimum(space.upper, hi_step)

        def make(d):
            return lambda prefix: (lo[..., d], hi[..., d])

        return NestedRegion(range(problem.control_dim),
                            [make(d) for d in range(problem.control_dim)])
    return box_region(space.lower, space.upper)


def finite_admissible_mask(problem, n, i, x=None):
    """Admissibility mask (..., n_controls) for FiniteSet problems."""
    space = problem.control_space
    i = np.asarray(i, dtype=float)
    pts = space.points  # (C, q')
    u = np.broadcast_to(pts, i.shape[:-1] + pts.shape)
    i_exp = i[..., None, :]
    x_exp = None if x is None else np.asarray(x, dtype=float)[..., None, :]
    nxt = np.asarray(problem.transition(n, u, i_exp, x_exp), dtype=float)
    return np.all((nxt >= -BOUND_TOL) & (nxt <= problem.inv_upper + BOUND_TOL),
                  axis=-1)


class AdmissibleControlSet:
    """Feasible controls at one (n, i) state, in set or region form."""

    def __init__(self, points=None, region=None):
        self.points = points
        self.region = region

    @property
    def is_finite(self):
        return self.points is not None

    def contains(self, u, tol=1e-9):
        u = np.asarray(u, dtype=float)
        if self.is_finite:
            return bool(np.any(np.all(np.abs(self.points - u) <= tol, axis=1)))
        return bool(self.region.contains(u, tol=tol))


def admissible_controls(problem, n, i, x=None):
    """Exact feasible control set at inventory i (and observed exogenous x).

    FiniteSet spaces return the filtered point list; Box spaces return a
    NestedRegion (clipped analytically when the transition is additive).
    Raises EmptyFeasibleSet when nothing is admissible.
    """
    i = as_float_array(i, "i", shape=(problem.inv_dim,))
    if not in_bounds(problem, i):
        raise ValueError(f"inventory {i!r} is outside the bounds")
    if isinstance(problem.control_space, FiniteSet):
        mask = finite_admissible_mask(problem, n, i, x)
        pts = problem.control_space.points[mask]
        if pts.shape[0] == 0:
            raise EmptyFeasibleSet(f"no admissible control at step {n}, i={i!r}")
        return AdmissibleControlSet(points=pts)
    region = control_region(problem, n, i, x)
    lo, hi = region.interval(0, {})
    if np.any(lo > hi + BOUND_TOL):
        raise EmptyFeasibleSet(f"no admissible control at step {n}, i={i!r}")
    return AdmissibleControlSet(region=region)
