"""Backward-induction solvers producing coefficient-based policies.

Three engines share one argmax kernel and one forward rollout:

* grid discretisation: one regression per inventory node, multilinear
  interpolation between nodes;
* control randomisation: the control is simulated as an extra state variable
  and enters the regression basis;
* regress-later: the value function is fitted in next-step variables and
  conditioned analytically, which decouples inventory levels across steps and
  lets training inventories be placed freely.

Performance iteration regresses realised rewards instead of fitted values and
needs inventory trajectories consistent with the estimated controls; the
regress-later variant can construct those trajectories backward in time by
solving a scalar fixed-point problem per path (see backward_inventory_step),
resimulating only the paths where no antecedent exists.
"""

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import basis as basis_mod
from . import model
from .errors import EmptyFeasibleSet, ProblemMismatch
from .regression import RegressionProblem, fit_least_squares
from .validation import check_positive_int

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
TIE_RTOL = 1e-9
REFINE_ITERS = 36

ALGORITHMS = ("grid_discretisation", "control_randomisation", "regress_later")
MODES = ("value", "performance")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "regress_later"
    mode: str = "value"
    m_paths: int = 1000
    seed: int = 0
    grid_levels: object = None          # int or per-dimension tuple (GD only)
    rl_backward_paths: bool = False
    inventory_sampling: object = "uniform"   # "uniform" or callable(n, x, rng)
    control_sampler: object = None           # CR: callable(n, x_obs, i, rng)
    cr_y0: object = "uniform"                # CR: "uniform", array, or callable
    cr_sweeps: int = 1
    argmax_grid: int = 21
    prescan_points: int = 64
    epsilon_explore: float = 0.3             # CR sweeps > 1: exploration rate

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        check_positive_int(self.m_paths, "m_paths")
        if self.algorithm == "grid_discretisation":
            levels = self.grid_levels
            if levels is None:
                raise ValueError("grid discretisation requires grid_levels")
            for lv in np.atleast_1d(levels):
                if int(lv) < 2:
                    raise ValueError("grid_levels must be >= 2 per dimension")
        if self.rl_backward_paths and not (
            self.algorithm == "regress_later" and self.mode == "performance"
        ):
            raise ValueError("rl_backward_paths applies to regress-later "
                             "performance iteration only")
        if self.cr_sweeps < 1:
            raise ValueError("cr_sweeps must be >= 1")
        if self.argmax_grid < 2:
            raise ValueError("argmax_grid must be >= 2")
        if self.prescan_points < 2:
            raise ValueError("prescan_points must be >= 2")
        return self


# ---------------------------------------------------------------------------
# argmax kernel
# ---------------------------------------------------------------------------

def _tie_break(values, controls, feasible):
    """Pick per row the feasible maximiser; ties go to the smallest control
    norm, then lexicographically smallest control vector.

    ``controls`` is (B, C, q') or a callable rows -> (len(rows), C, q') so
    callers with shared candidate sets only materialise the tied rows.
    """
    masked = np.where(feasible, values, -np.inf)
    idx = np.argmax(masked, axis=1)
    rows = np.arange(masked.shape[0])
    best = masked[rows, idx]
    if np.any(np.isneginf(best)):
        raise EmptyFeasibleSet("a state has no admissible control")
    tol = TIE_RTOL * (1.0 + np.abs(best))
    tie = masked >= (best - tol)[:, None]
    multi = np.count_nonzero(tie, axis=1) > 1
    if np.any(multi):
        sub = np.where(multi)[0]
        ctrl = controls(sub) if callable(controls) else controls[sub]
        tie_s = tie[sub]
        norms = np.einsum("bcq,bcq->bc", ctrl, ctrl)
        norms = np.where(tie_s, norms, np.inf)
        best_norm = norms.min(axis=1)
        tie_s &= norms <= (best_norm + 1e-12 * (1.0 + best_norm))[:, None]
        for d in range(ctrl.shape[2]):
            comp = np.where(tie_s, ctrl[:, :, d], np.inf)
            low = comp.min(axis=1)
            tie_s &= comp <= (low + 1e-12 * (1.0 + np.abs(low)))[:, None]
        idx[sub] = np.argmax(tie_s, axis=1)
    return idx, best


def _choose(arr, idx):
    return arr[np.arange(arr.shape[0]), idx]


def decide_batch(problem, n, x_obs, i, cont_fn, argmax_grid=21, refine=True):
    """Vectorised control choice at a batch of states.

    x_obs (B, p), i (B, q); cont_fn(u (B, C, q'), i_next (B, C, q)) -> (B, C).
    Returns (u (B, q'), value (B,), i_next (B, q)).
    """
    i = np.asarray(i, dtype=float)
    x_obs = np.asarray(x_obs, dtype=float)
    if isinstance(problem.control_space, model.FiniteSet):
        pts = problem.control_space.points
        b = i.shape[0]
        u = np.broadcast_to(pts, (b,) + pts.shape)
        i_exp = i[:, None, :]
        x_exp = x_obs[:, None, :]
        nxt = np.asarray(problem.transition(n, u, i_exp, x_exp), dtype=float)
        feasible = np.all(
            (nxt >= -model.BOUND_TOL) & (nxt <= problem.inv_upper + model.BOUND_TOL),
            axis=-1,
        )
        values = problem.running_reward(n, x_exp, i_exp, u) + cont_fn(u, nxt)
        idx, best = _tie_break(values, u, feasible)
        return _choose(u, idx).copy(), best, model.clamp_inventory(problem, _choose(nxt, idx))
    return _decide_region(problem, n, x_obs, i, cont_fn, argmax_grid, refine)


def _interval_2d(arr, b, g):
    """Interval bound as a (b, g) array; 1-d returns are per-path vectors."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return np.broadcast_to(a, (b, g))


def _decide_region(problem, n, x_obs, i, cont_fn, resolution, refine):
    region = model.control_region(problem, n, i, x_obs)
    b = i.shape[0]
    qc = problem.control_dim
    frac = np.linspace(0.0, 1.0, resolution)
    u = np.zeros((b, 1, qc))
    feasible = np.ones((b, 1), dtype=bool)
    for k, d in enumerate(region.dims):
        prefix = {dd: u[:, :, dd] for dd in region.dims[:k]}
        lo, hi = region.interval(k, prefix)
        lo = _interval_2d(lo, b, u.shape[1])
        hi = _interval_2d(hi, b, u.shape[1])
        empty = lo > hi
        width = np.maximum(hi - lo, 0.0)
        pts = lo[..., None] + frac * width[..., None]          # (B, G, R)
        g = u.shape[1]
        u = np.repeat(u[:, :, None, :], resolution, axis=2).reshape(b, g * resolution, qc)
        u[:, :, d] = pts.reshape(b, g * resolution)
        feasible = (feasible & ~empty)[:, :, None].repeat(resolution, axis=2)
        feasible = feasible.reshape(b, g * resolution)
    i_exp = i[:, None, :]
    x_exp = x_obs[:, None, :]
    nxt = np.asarray(problem.transition(n, u, i_exp, x_exp), dtype=float)
    feasible &= np.all(
        (nxt >= -model.BOUND_TOL) & (nxt <= problem.inv_upper + model.BOUND_TOL),
        axis=-1,
    )
    values = problem.running_reward(n, x_exp, i_exp, u) + cont_fn(u, nxt)
    idx, best = _tie_break(values, u, feasible)
    u_best = _choose(u, idx).copy()
    if refine:
        u_best, best = _golden_refine(problem, n, x_obs, i, region, u_best, best,
                                      cont_fn, resolution)
    nxt_best = np.asarray(
        problem.transition(n, u_best, i, x_obs), dtype=float
    )
    return u_best, best, model.clamp_inventory(problem, nxt_best)


def _point_value(problem, n, x_obs, i, u, cont_fn, region):
    nxt = np.asarray(problem.transition(n, u, i, x_obs), dtype=float)
    ok = np.all(
        (nxt >= -model.BOUND_TOL) & (nxt <= problem.inv_upper + model.BOUND_TOL),
        axis=-1,
    )
    ok &= region.contains(u, tol=model.BOUND_TOL)
    val = (problem.running_reward(n, x_obs[:, None, :], i[:, None, :], u[:, None, :])
           + cont_fn(u[:, None, :], nxt[:, None, :]))[:, 0]
    return np.where(ok, val, -np.inf)


def _golden_refine(problem, n, x_obs, i, region, u0, v0, cont_fn, resolution):
    """One golden-section pass per control dimension around the scan winner.

    A refined point is accepted only on strict improvement, so plateau ties
    resolved by the scan's tie rule are preserved.
    """
    u = u0.copy()
    v = v0.copy()
    for k, d in enumerate(region.dims):
        prefix = {dd: u[:, dd] for dd in region.dims[:k]}
        lo, hi = region.interval(k, prefix)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), u[:, d].shape).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), u[:, d].shape).copy()
        cell = np.maximum(hi - lo, 0.0) / (resolution - 1)
        a = np.maximum(u[:, d] - cell, lo)
        bnd = np.minimum(u[:, d] + cell, hi)
        best_u = u[:, d].copy()
        best_v = v.copy()
        c = bnd - GOLDEN * (bnd - a)
        e = a + GOLDEN * (bnd - a)
        cand = u.copy()
        cand[:, d] = c
        fc = _point_value(problem, n, x_obs, i, cand, cont_fn, region)
        cand[:, d] = e
        fe = _point_value(problem, n, x_obs, i, cand, cont_fn, region)
        for _ in range(REFINE_ITERS):
            for val, point in ((fc, c), (fe, e)):
                better = val > best_v
                best_v = np.where(better, val, best_v)
                best_u = np.where(better, point, best_u)
            move_right = fc < fe
            a = np.where(move_right, c, a)
            bnd = np.where(move_right, bnd, e)
            c_new = bnd - GOLDEN * (bnd - a)
            e_new = a + GOLDEN * (bnd - a)
            cand[:, d] = c_new
            fc_new = _point_value(problem, n, x_obs, i, cand, cont_fn, region)
            cand[:, d] = e_new
            fe_new = _point_value(problem, n, x_obs, i, cand, cont_fn, region)
            c, e, fc, fe = c_new, e_new, fc_new, fe_new
        improve = best_v > v + TIE_RTOL * (1.0 + np.abs(v))
        u[:, d] = np.where(improve, best_u, u[:, d])
        v = np.where(improve, best_v, v)
    return u, v


def argmax_control(problem, n, x, i, continuation, argmax_grid=21):
    """Single-state optimal control: maximise f(n,x,i,u) + continuation(u).

    ``continuation`` is any callable u -> scalar estimate.  Finite control
    sets are scanned exhaustively; boxes are scanned on a uniform grid
    followed by one golden-section refinement per dimension.  Ties break to
    the smallest control norm, then lexicographic order.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    i = np.atleast_1d(np.asarray(i, dtype=float))

    def cont_fn(u, i_next):
        flat = u.reshape(-1, u.shape[-1])
        vals = np.array([float(continuation(row)) for row in flat])
        return vals.reshape(u.shape[:-1])

    u, value, _ = decide_batch(problem, n, x[None, :], i[None, :], cont_fn,
                               argmax_grid=argmax_grid)
    return u[0], float(value[0])


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GdCoefficients:
    alpha: np.ndarray                 # (N, n_nodes, K)
    node_grids: list
    basis: object
    condition_numbers: np.ndarray
    ridge_flags: np.ndarray

    @property
    def nodes(self):
        mesh = np.meshgrid(*self.node_grids, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def _multilinear(node_grids, table, points, rows=None):
    """Interpolate per-row tables at inventory points.

    table (R, n_nodes) over the C-ordered node product; points (B, C, q);
    ``rows`` maps each of the B states to its table row (identity default).
    Exact at the nodes and multilinear in between.
    """
    b, c = points.shape[0], points.shape[1]
    q = len(node_grids)
    sizes = [len(g) for g in node_grids]
    strides = np.ones(q, dtype=int)
    for d in range(q - 2, -1, -1):
        strides[d] = strides[d + 1] * sizes[d + 1]
    idx = np.empty((b, c, q), dtype=int)
    w = np.empty((b, c, q))
    for d, grid in enumerate(node_grids):
        pos = np.clip(np.searchsorted(grid, points[:, :, d], side="right") - 1,
                      0, sizes[d] - 2)
        idx[:, :, d] = pos
        span = grid[pos + 1] - grid[pos]
        w[:, :, d] = np.clip((points[:, :, d] - grid[pos]) / span, 0.0, 1.0)
    out = np.zeros((b, c))
    row_idx = (np.arange(b) if rows is None else rows)[:, None]
    for corner in range(1 << q):
        flat = np.zeros((b, c), dtype=int)
        weight = np.ones((b, c))
        for d in range(q):
            bit = (corner >> d) & 1
            flat += (idx[:, :, d] + bit) * strides[d]
            weight *= w[:, :, d] if bit else (1.0 - w[:, :, d])
        out += weight * table[row_idx, flat]
    return out


@dataclass(eq=False)
class Policy:
    """Fitted control rule: coefficient matrix plus the argmax decode rule."""

    algorithm: str
    mode: str
    problem_fingerprint: str
    coefficients: object              # CoefficientMatrix or GdCoefficients
    argmax_grid: int = 21
    diagnostics: dict = field(default_factory=dict)

    @property
    def basis(self):
        return self.coefficients.basis

    def continuation(self, problem, process, n, x_under, x_obs, i):
        """cont_fn(u, i_next) for a batch of states at step n."""
        if self.algorithm == "grid_discretisation":
            coeffs = self.coefficients
            phi = basis_mod.eval_basis(coeffs.basis, x_obs)
            table = phi @ coeffs.alpha[n].T        # (B, n_nodes)

            def cont_fn(u, i_next):
                return _multilinear(coeffs.node_grids, table, i_next)

            return cont_fn
        if self.algorithm == "control_randomisation":
            alpha = self.coefficients.alpha[n]
            spec = self.coefficients.basis

            def cont_fn(u, i_next):
                c = u.shape[1]
                x_exp = np.broadcast_to(x_obs[:, None, :], (u.shape[0], c, x_obs.shape[1]))
                i_exp = np.broadcast_to(i[:, None, :], (u.shape[0], c, i.shape[1]))
                return basis_mod.eval_basis(spec, x_exp, i_exp, u) @ alpha

            return cont_fn
        if self.algorithm == "regress_later":
            alpha = self.coefficients.alpha[n]
            kernel = basis_mod.conditional_kernel(self.basis, process, n, x_under)

            def cont_fn(u, i_next):
                return kernel.at(i_next) @ alpha

            return cont_fn
        raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def decide(self, problem, process, n, x_under, i):
        """Batched control decision; x_under (B, p), i (B, q)."""
        x_obs = process.observe(n, np.asarray(x_under, dtype=float))
        cont_fn = self.continuation(problem, process, n,
                                    np.asarray(x_under, dtype=float), x_obs,
                                    np.asarray(i, dtype=float))
        return decide_batch(problem, n, x_obs, np.asarray(i, dtype=float),
                            cont_fn, argmax_grid=self.argmax_grid)

    def control(self, problem, process, n, x, i):
        """Single-state control map u(n, x, i)."""
        u, _, _ = self.decide(problem, process, n,
                              np.atleast_1d(x)[None, :], np.atleast_1d(i)[None, :])
        return u[0]


def _zero_cont(u, i_next):
    return np.zeros(u.shape[:-1])


def rollout(problem, process, values, policy, i_start, n_start=0,
            collect_trajectory=False, n_threads=0):
    """Run a policy forward along exogenous paths, accumulating rewards.

    ``values`` is the (B, N+1, p) underlying path array; ``policy`` may be
    None for the myopic rule (zero continuation).  Returns a dict with total
    rewards, violation count and optional per-step trajectories.
    """
    n_steps = problem.horizon_n
    b = values.shape[0]
    if n_threads and n_threads > 1 and b > 1:
        # Fixed chunking (independent of worker count) keeps results
        # bit-identical for any --threads setting.
        chunks = np.array_split(np.arange(b), min(32, b))
        import concurrent.futures

        i_all = np.broadcast_to(np.asarray(i_start, dtype=float),
                                (b, problem.inv_dim))

        def run(sel):
            return rollout(problem, process, values[sel], policy,
                           i_all[sel], n_start, collect_trajectory)

        with concurrent.futures.ThreadPoolExecutor(max_workers=n_threads) as ex:
            parts = list(ex.map(run, chunks))
        out = {"total": np.concatenate([p["total"] for p in parts]),
               "violations": sum(p["violations"] for p in parts)}
        if collect_trajectory:
            for key in ("inventory", "controls", "exo_obs"):
                out[key] = np.concatenate([p[key] for p in parts], axis=0)
        for key in ("mean_inventory", "mean_control"):
            out[key] = np.sum(
                np.stack([p[key] * len(sel) for p, sel in zip(parts, chunks)]),
                axis=0) / b
        return out
    i = np.array(np.broadcast_to(np.asarray(i_start, dtype=float),
                                 (b, problem.inv_dim)))
    total = np.zeros(b)
    violations = 0
    mean_inventory = np.zeros((n_steps - n_start, problem.inv_dim))
    mean_control = np.zeros((n_steps - n_start, problem.control_dim))
    traj_i = [] if collect_trajectory else None
    traj_u = [] if collect_trajectory else None
    traj_x = [] if collect_trajectory else None
    for n in range(n_start, n_steps):
        x_under = values[:, n, :]
        x_obs = process.observe(n, x_under)
        if policy is None:
            cont_fn = _zero_cont
            u, _, nxt = decide_batch(problem, n, x_obs, i, cont_fn)
        else:
            cont_fn = policy.continuation(problem, process, n, x_under, x_obs, i)
            u, _, nxt = decide_batch(problem, n, x_obs, i, cont_fn,
                                     argmax_grid=policy.argmax_grid)
        total += np.asarray(problem.running_reward(n, x_obs, i, u), dtype=float)
        raw = np.asarray(problem.transition(n, u, i, x_obs), dtype=float)
        violations += int(np.sum(~np.all(
            (raw >= -1e-9) & (raw <= problem.inv_upper + 1e-9), axis=-1)))
        mean_inventory[n - n_start] = i.mean(axis=0)
        mean_control[n - n_start] = u.mean(axis=0)
        if collect_trajectory:
            traj_i.append(i.copy())
            traj_u.append(u.copy())
            traj_x.append(x_obs.copy())
        i = nxt
    total += np.asarray(
        problem.terminal_reward(process.observe(n_steps, values[:, n_steps, :]), i),
        dtype=float,
    )
    out = {"total": total, "violations": violations,
           "mean_inventory": mean_inventory, "mean_control": mean_control}
    if collect_trajectory:
        out["inventory"] = np.stack(traj_i, axis=1)
        out["controls"] = np.stack(traj_u, axis=1)
        out["exo_obs"] = np.stack(traj_x, axis=1)
    return out


# ---------------------------------------------------------------------------
# grid discretisation (Algorithm: per-node regressions + interpolation)
# ---------------------------------------------------------------------------

def _node_grids(problem, grid_levels):
    levels = np.atleast_1d(grid_levels).astype(int)
    if levels.size == 1:
        levels = np.repeat(levels, problem.inv_dim)
    if levels.size != problem.inv_dim:
        raise ValueError("grid_levels must be scalar or one per inventory dim")
    return [np.linspace(0.0, problem.inv_upper[d], levels[d])
            for d in range(problem.inv_dim)]


def _node_candidates(problem, n, nodes, resolution):
    """Per-node control candidates when admissibility ignores the exogenous
    state: (n_nodes, C, q') controls with a (n_nodes, C) feasibility mask.

    Returns None when the problem's transition or feasible region needs x,
    in which case the caller falls back to per-path decisions.
    """
    try:
        if isinstance(problem.control_space, model.FiniteSet):
            pts = problem.control_space.points
            cand = np.broadcast_to(pts, (nodes.shape[0],) + pts.shape)
            nxt = np.asarray(
                problem.transition(n, cand, nodes[:, None, :], None), dtype=float
            )
        else:
            region = model.control_region(problem, n, nodes, None)
            b = nodes.shape[0]
            frac = np.linspace(0.0, 1.0, resolution)
            cand = np.zeros((b, 1, problem.control_dim))
            feas = np.ones((b, 1), dtype=bool)
            for k, d in enumerate(region.dims):
                prefix = {dd: cand[:, :, dd] for dd in region.dims[:k]}
                lo, hi = region.interval(k, prefix)
                lo = _interval_2d(lo, b, cand.shape[1])
                hi = _interval_2d(hi, b, cand.shape[1])
                empty = lo > hi
                pts = lo[..., None] + frac * np.maximum(hi - lo, 0.0)[..., None]
                g = cand.shape[1]
                cand = np.repeat(cand[:, :, None, :], resolution, axis=2)
                cand = cand.reshape(b, g * resolution, problem.control_dim)
                cand[:, :, d] = pts.reshape(b, g * resolution)
                feas = (feas & ~empty)[:, :, None].repeat(resolution, axis=2)
                feas = feas.reshape(b, g * resolution)
            nxt = np.asarray(
                problem.transition(n, cand, nodes[:, None, :], None), dtype=float
            )
    except Exception:
        return None
    if not np.all(np.isfinite(nxt)):
        return None
    mask = np.all(
        (nxt >= -model.BOUND_TOL) & (nxt <= problem.inv_upper + model.BOUND_TOL),
        axis=-1,
    )
    if isinstance(problem.control_space, model.FiniteSet):
        return cand, mask, nxt
    return cand, mask & feas, nxt


def solve_grid_discretisation(problem, process, basis, paths, config,
                              node_chunk=None):
    """Backward induction with one regression per inventory grid node."""
    config.validate()
    if not isinstance(basis, basis_mod.ExoOnly):
        raise TypeError("grid discretisation uses an ExoOnly basis")
    n_steps = problem.horizon_n
    if paths.n_steps < n_steps:
        raise ValueError("paths are shorter than the problem horizon")
    grids = _node_grids(problem, config.grid_levels)
    mesh = np.meshgrid(*grids, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)   # (n_nodes, q)
    n_nodes = nodes.shape[0]
    m = paths.n_paths
    if node_chunk is None:
        # keep the per-block work arrays around ~100 MB
        per_node_cost = m * max(config.argmax_grid ** problem.control_dim
                                if not isinstance(problem.control_space,
                                                  model.FiniteSet)
                                else problem.control_space.points.shape[0], 1)
        node_chunk = max(4, int(12e6 // max(per_node_cost, 1)) or 4)
    coeffs = GdCoefficients(
        alpha=np.zeros((n_steps, n_nodes, basis.n_terms)),
        node_grids=grids, basis=basis,
        condition_numbers=np.zeros(n_steps),
        ridge_flags=np.zeros(n_steps, dtype=bool),
    )
    policy = Policy(algorithm="grid_discretisation", mode=config.mode,
                    problem_fingerprint=problem.fingerprint(),
                    coefficients=coeffs, argmax_grid=config.argmax_grid)
    obs_terminal = process.observe(n_steps, paths.state(n_steps))
    v = np.asarray(problem.terminal_reward(obs_terminal[:, None, :], nodes),
                   dtype=float)                            # (M, n_nodes)
    for n in range(n_steps - 1, -1, -1):
        x_obs = process.observe(n, paths.state(n))
        phi = basis_mod.eval_basis(basis, x_obs)
        coef, diag = fit_least_squares(RegressionProblem(phi, v))
        coeffs.alpha[n] = coef.T
        coeffs.condition_numbers[n] = diag.condition_number
        coeffs.ridge_flags[n] = diag.used_ridge
        if config.mode == "value":
            table = phi @ coef                              # (M, n_nodes)
            per_node = _node_candidates(problem, n, nodes, config.argmax_grid)
            for start in range(0, n_nodes, node_chunk):
                block = slice(start, min(start + node_chunk, n_nodes))
                nb = block.stop - block.start
                if per_node is not None:
                    v[:, block] = _gd_value_block(
                        problem, n, x_obs, table, grids, nodes, per_node,
                        block, config)
                    continue
                i_flat = np.broadcast_to(nodes[block], (m, nb, problem.inv_dim))
                i_flat = i_flat.reshape(m * nb, problem.inv_dim)
                x_flat = np.repeat(x_obs, nb, axis=0)
                rows = np.repeat(np.arange(m), nb)

                def cont_fn(u, i_next, rows=rows):
                    return _multilinear(grids, table, i_next, rows=rows)

                _, val, _ = decide_batch(problem, n, x_flat, i_flat, cont_fn,
                                         argmax_grid=config.argmax_grid)
                v[:, block] = val.reshape(m, nb)
        else:
            for start in range(0, n_nodes, node_chunk):
                block = slice(start, min(start + node_chunk, n_nodes))
                nb = block.stop - block.start
                i_flat = np.broadcast_to(nodes[block], (m, nb, problem.inv_dim))
                i_flat = i_flat.reshape(m * nb, problem.inv_dim)
                vals = np.repeat(paths.values, nb, axis=0)
                res = rollout(problem, process, vals, policy, i_flat, n_start=n)
                v[:, block] = res["total"].reshape(m, nb)
    policy.diagnostics = {
        "condition_numbers": coeffs.condition_numbers,
        "ridge_flags": coeffs.ridge_flags,
        "broken_fraction": None,
    }
    return policy


def _gd_value_block(problem, n, x_obs, table, grids, nodes, per_node, block,
                    config):
    """Vectorised value update for a block of grid nodes.

    Candidates and interpolation stencils are shared across paths (they only
    depend on the node and control), so the per-step work reduces to a few
    gathers on the (paths, nodes) fit table.
    """
    cand, mask, nxt = per_node
    cand_b = cand[block]
    mask_b = mask[block]
    nxt_b = nxt[block]                                     # (nb, C, q)
    m = x_obs.shape[0]
    nb, n_cand = cand_b.shape[0], cand_b.shape[1]
    # interpolation stencil per (node, candidate)
    q = len(grids)
    sizes = [len(g) for g in grids]
    strides = np.ones(q, dtype=int)
    for d in range(q - 2, -1, -1):
        strides[d] = strides[d + 1] * sizes[d + 1]
    idx = np.empty((nb, n_cand, q), dtype=int)
    w = np.empty((nb, n_cand, q))
    for d, grid in enumerate(grids):
        pos = np.clip(np.searchsorted(grid, nxt_b[:, :, d], side="right") - 1,
                      0, sizes[d] - 2)
        idx[:, :, d] = pos
        w[:, :, d] = np.clip((nxt_b[:, :, d] - grid[pos]) / (grid[pos + 1] - grid[pos]),
                             0.0, 1.0)
    cont = None
    for corner in range(1 << q):
        flat = np.zeros((nb, n_cand), dtype=int)
        weight = np.ones((nb, n_cand))
        for d in range(q):
            bit = (corner >> d) & 1
            flat += (idx[:, :, d] + bit) * strides[d]
            weight *= w[:, :, d] if bit else (1.0 - w[:, :, d])
        term = table[:, flat]
        term *= weight
        cont = term if cont is None else cont + term
    f = np.asarray(problem.running_reward(
        n, x_obs[:, None, None, :], nodes[block][None, :, None, :],
        cand_b[None, :, :, :]), dtype=float)
    values = cont
    values += f
    flat_vals = values.reshape(m * nb, n_cand)
    flat_mask = np.broadcast_to(mask_b, (m, nb, n_cand)).reshape(m * nb, n_cand)
    idx_best, best = _tie_break(flat_vals, lambda rows: cand_b[rows % nb],
                                flat_mask)
    best = best.reshape(m, nb)
    if (not isinstance(problem.control_space, model.FiniteSet)):
        # one golden-section polish per dimension around the scan winner
        u0 = cand_b[np.arange(m * nb) % nb, idx_best]
        i_flat = np.broadcast_to(nodes[block], (m, nb, q)).reshape(m * nb, q)
        x_flat = np.repeat(x_obs, nb, axis=0)
        rows = np.repeat(np.arange(m), nb)

        def cont_fn(u, i_next, rows=rows):
            return _multilinear(grids, table, i_next, rows=rows)

        region = model.control_region(problem, n, i_flat, x_flat)
        u_ref, v_ref = _golden_refine(problem, n, x_flat, i_flat, region,
                                      u0.copy(), best.reshape(-1), cont_fn,
                                      config.argmax_grid)
        best = v_ref.reshape(m, nb)
    return best


# ---------------------------------------------------------------------------
# control randomisation
# ---------------------------------------------------------------------------

def _uniform_admissible_control(problem, n, x_obs, i, rng):
    """Draw one admissible control per path, uniformly."""
    if isinstance(problem.control_space, model.FiniteSet):
        mask = model.finite_admissible_mask(problem, n, i, x_obs)
        counts = mask.sum(axis=1)
        if np.any(counts == 0):
            raise EmptyFeasibleSet("no admissible control along a training path")
        pick = (rng.random(i.shape[0]) * counts).astype(int)
        order = np.argsort(~mask, axis=1, kind="stable")   # admissible first
        chosen = order[np.arange(i.shape[0]), pick]
        return problem.control_space.points[chosen]
    region = model.control_region(problem, n, i, x_obs)
    u = np.zeros((i.shape[0], problem.control_dim))
    for k, d in enumerate(region.dims):
        prefix = {dd: u[:, dd] for dd in region.dims[:k]}
        lo, hi = region.interval(k, prefix)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (i.shape[0],))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (i.shape[0],))
        if np.any(lo > hi + model.BOUND_TOL):
            raise EmptyFeasibleSet("empty feasible slice while sampling controls")
        u[:, d] = lo + rng.random(i.shape[0]) * np.maximum(hi - lo, 0.0)
    return u


def solve_control_randomisation(problem, process, basis, paths, config):
    """Control randomisation: the control is an extra regressor dimension."""
    config.validate()
    if not isinstance(basis, basis_mod.PolyWithControl):
        raise TypeError("control randomisation uses a PolyWithControl basis")
    n_steps = problem.horizon_n
    m = paths.n_paths
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    coeffs = basis_mod.CoefficientMatrix(
        alpha=np.zeros((n_steps, basis.n_terms)), basis=basis,
        condition_numbers=np.zeros(n_steps),
        ridge_flags=np.zeros(n_steps, dtype=bool),
    )
    policy = Policy(algorithm="control_randomisation", mode=config.mode,
                    problem_fingerprint=problem.fingerprint(),
                    coefficients=coeffs, argmax_grid=config.argmax_grid)
    obs = [process.observe(n, paths.state(n)) for n in range(n_steps + 1)]
    for sweep in range(config.cr_sweeps):
        have_policy = sweep > 0
        # forward pass: training inventories under randomised controls
        y = np.empty((m, n_steps + 1, problem.inv_dim))
        if callable(config.cr_y0):
            y[:, 0] = config.cr_y0(m, rng)
        elif isinstance(config.cr_y0, str) and config.cr_y0 == "uniform":
            y[:, 0] = rng.random((m, problem.inv_dim)) * problem.inv_upper
        else:
            y[:, 0] = np.broadcast_to(np.asarray(config.cr_y0, dtype=float),
                                      (m, problem.inv_dim))
        u_train = np.empty((m, n_steps, problem.control_dim))
        for n in range(n_steps):
            if config.control_sampler is not None:
                u = np.asarray(config.control_sampler(n, obs[n], y[:, n], rng),
                               dtype=float)
            else:
                u = _uniform_admissible_control(problem, n, obs[n], y[:, n], rng)
            if have_policy:
                explore = rng.random(m) < config.epsilon_explore
                u_pol, _, _ = policy.decide(problem, process, n,
                                            paths.state(n), y[:, n])
                u = np.where(explore[:, None], u, u_pol)
            u_train[:, n] = u
            y[:, n + 1] = model.apply_transition(problem, n, u, y[:, n], obs[n])
        # backward pass
        v = np.asarray(problem.terminal_reward(obs[n_steps], y[:, n_steps]),
                       dtype=float)
        for n in range(n_steps - 1, -1, -1):
            design = basis_mod.eval_basis(basis, obs[n], y[:, n], u_train[:, n])
            coef, diag = fit_least_squares(RegressionProblem(design, v))
            coeffs.alpha[n] = coef
            coeffs.condition_numbers[n] = diag.condition_number
            coeffs.ridge_flags[n] = diag.used_ridge
            if config.mode == "value":
                cont_fn = policy.continuation(problem, process, n,
                                              paths.state(n), obs[n], y[:, n])
                _, val, _ = decide_batch(problem, n, obs[n], y[:, n], cont_fn,
                                         argmax_grid=config.argmax_grid)
                v = val
            else:
                res = rollout(problem, process, paths.values, policy,
                              y[:, n], n_start=n)
                v = res["total"]
    policy.diagnostics = {
        "condition_numbers": coeffs.condition_numbers,
        "ridge_flags": coeffs.ridge_flags,
        "broken_fraction": None,
    }
    return policy


# ---------------------------------------------------------------------------
# regress later
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackwardResult:
    found: bool
    antecedent: float = None


def _antecedent_batch(problem, n, x_obs, y_next, decider, prescan_points=64,
                      max_iters=200):
    """Vectorised antecedent search: solve y_next = phi(n, u*(z, y), y).

    ``decider(y (B, G)) -> u (B, G, q')`` evaluates the step-n control map at
    arbitrary inventories for every path.  Returns (found (B,), y (B,)).
    Scans psi on a uniform grid, bisects the first bracketing sign change and
    accepts the root only when the forward transition reproduces y_next within
    1e-9 * I_max (discontinuous control maps can produce sign changes without
    roots; those count as broken).
    """
    i_max = float(problem.inv_upper[0])
    b = y_next.shape[0]
    grid = np.linspace(0.0, i_max, prescan_points)
    ygrid = np.broadcast_to(grid, (b, prescan_points))

    def psi(y):
        u = decider(y)
        nxt = np.asarray(
            problem.transition(n, u, y[..., None], x_obs[:, None, :]), dtype=float
        )[..., 0]
        return y_next[:, None] - nxt if y.ndim == 2 else y_next - nxt

    vals = psi(ygrid)                                      # (B, P)
    sign_change = vals[:, :-1] * vals[:, 1:] <= 0.0
    has = sign_change.any(axis=1)
    first = np.argmax(sign_change, axis=1)
    lo = grid[first]
    hi = grid[np.minimum(first + 1, prescan_points - 1)]
    f_lo = _choose(vals, first)
    active = has.copy()
    n_iters = min(max_iters, 60)
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(n_iters):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        u_mid = decider(mid[:, None])[:, 0, :]
        nxt = np.asarray(problem.transition(n, u_mid, mid[:, None], x_obs),
                         dtype=float)[:, 0]
        f_mid = y_next - nxt
        left = f_lo * f_mid <= 0.0
        hi = np.where(active & left, mid, hi)
        new_lo = np.where(active & ~left, mid, lo)
        f_lo = np.where(active & ~left, f_mid, f_lo)
        lo = new_lo
    y_root = 0.5 * (lo + hi)
    u_root = decider(y_root[:, None])[:, 0, :]
    forward = np.asarray(problem.transition(n, u_root, y_root[:, None], x_obs),
                         dtype=float)[:, 0]
    found = has & (np.abs(forward - y_next) <= 1e-9 * max(i_max, 1e-300))
    return found, y_root


def backward_inventory_step(problem, n, z, y_next, control_map,
                            prescan_points=64, max_iters=200, process=None):
    """Pathwise optimal antecedent of y_next under the step-n control map.

    ``control_map(z, y)`` evaluates the estimated control; ``z`` is the
    observed exogenous state.  Requires a one-dimensional inventory.  Returns
    BackwardResult; a missing antecedent is a normal outcome (the caller
    repositions the training point at random and resimulates).
    """
    if problem.inv_dim != 1:
        raise ValueError("backward construction requires a 1-d inventory")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    x_obs = z[None, :]

    def decider(y):
        flat = y.reshape(-1)
        u = np.stack([np.atleast_1d(np.asarray(control_map(z, yy), dtype=float))
                      for yy in flat])
        return u.reshape(y.shape + (problem.control_dim,))

    found, root = _antecedent_batch(problem, n, x_obs,
                                    np.asarray([y_next], dtype=float), decider,
                                    prescan_points=prescan_points,
                                    max_iters=max_iters)
    if found[0]:
        return BackwardResult(found=True, antecedent=float(root[0]))
    return BackwardResult(found=False)


def _draw_training_inventory(problem, config, n, x_under, m, rng):
    if callable(config.inventory_sampling):
        y = np.asarray(config.inventory_sampling(n, x_under, rng), dtype=float)
        return y.reshape(m, problem.inv_dim)
    return rng.random((m, problem.inv_dim)) * problem.inv_upper


class _RlStepCache:
    """Per-step observation and conditional-kernel cache for one path set.

    The kernels depend only on (step, exogenous states), not on the fitted
    coefficients, so resimulation sweeps can reuse them across backward
    iterations.
    """

    def __init__(self, problem, process, basis, paths, argmax_grid):
        self.problem = problem
        self.process = process
        self.basis = basis
        self.paths = paths
        self.argmax_grid = argmax_grid
        self._obs = {}
        self._kernels = {}

    def obs(self, n):
        if n not in self._obs:
            self._obs[n] = self.process.observe(n, self.paths.state(n))
        return self._obs[n]

    def kernel(self, n):
        if n not in self._kernels:
            self._kernels[n] = basis_mod.conditional_kernel(
                self.basis, self.process, n, self.paths.state(n))
        return self._kernels[n]

    def decide(self, n, y, alpha, sel=None):
        """Control choice at step n for inventories y along (a subset of)
        the training paths."""
        kern = self.kernel(n) if sel is None else self.kernel(n).restrict(sel)
        x_obs = self.obs(n) if sel is None else self.obs(n)[sel]

        def cont_fn(u, i_next):
            return kern.at(i_next) @ alpha

        return decide_batch(self.problem, n, x_obs, y, cont_fn,
                            argmax_grid=self.argmax_grid)

    def grid_decider(self, n, alpha):
        """u*(z_m, y) evaluator over per-path inventory grids (B, G)."""
        problem = self.problem
        x_obs = self.obs(n)
        kern = self.kernel(n)
        if isinstance(problem.control_space, model.FiniteSet):
            pts = problem.control_space.points

            def decider(y):
                b, g = y.shape
                i4 = y[:, :, None, None]                       # (B, G, 1, 1)
                u = np.broadcast_to(pts, (b, g) + pts.shape)
                nxt = np.asarray(problem.transition(
                    n, u, i4, x_obs[:, None, None, :]), dtype=float)
                feas = np.all((nxt >= -model.BOUND_TOL)
                              & (nxt <= problem.inv_upper + model.BOUND_TOL),
                              axis=-1)
                f = problem.running_reward(n, x_obs[:, None, None, :], i4, u)
                vals = f + kern.at(nxt) @ alpha
                c = pts.shape[0]
                idx, _ = _tie_break(vals.reshape(b * g, c),
                                    np.broadcast_to(u, vals.shape + (pts.shape[1],)
                                                    ).reshape(b * g, c, -1),
                                    feas.reshape(b * g, c))
                return pts[idx].reshape(b, g, pts.shape[1])

            return decider

        def decider(y):
            b, g = y.shape
            rows = np.repeat(np.arange(b), g)
            kern_r = kern.restrict(rows)

            def cont_fn(u, i_next):
                return kern_r.at(i_next) @ alpha

            u, _, _ = decide_batch(problem, n, x_obs[rows], y.reshape(-1, 1),
                                   cont_fn, argmax_grid=self.argmax_grid)
            return u.reshape(b, g, problem.control_dim)

        return decider

    def resimulate(self, n_start, y0, alpha_rows, sel=None):
        """Realised reward from (n_start, y0) forward under the fitted maps."""
        idx = np.arange(self.paths.n_paths) if sel is None else sel
        y = y0.copy()
        total = np.zeros(y.shape[0])
        for j in range(n_start, self.problem.horizon_n):
            x_obs = self.obs(j)[idx]
            u, _, nxt = self.decide(j, y, alpha_rows[j], sel=sel)
            total += np.asarray(self.problem.running_reward(j, x_obs, y, u),
                                dtype=float)
            y = nxt
        total += np.asarray(self.problem.terminal_reward(
            self.obs(self.problem.horizon_n)[idx], y), dtype=float)
        return total


def solve_regress_later(problem, process, basis, paths, config):
    """Regress-later Monte Carlo, value or performance iteration.

    Performance iteration either resimulates inventory trajectories after
    every backward step or, with ``rl_backward_paths``, extends them backward
    through the fixed-point antecedent construction and resimulates only the
    broken paths.
    """
    config.validate()
    if not isinstance(basis, (basis_mod.PolyProduct, basis_mod.HypercubeAffine)):
        raise TypeError("regress later needs a PolyProduct or HypercubeAffine basis")
    n_steps = problem.horizon_n
    m = paths.n_paths
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    coeffs = basis_mod.CoefficientMatrix(
        alpha=np.zeros((n_steps, basis.n_terms)), basis=basis,
        condition_numbers=np.zeros(n_steps),
        ridge_flags=np.zeros(n_steps, dtype=bool),
    )
    policy = Policy(algorithm="regress_later", mode=config.mode,
                    problem_fingerprint=problem.fingerprint(),
                    coefficients=coeffs, argmax_grid=config.argmax_grid)
    broken = np.full(n_steps, np.nan)
    cache = _RlStepCache(problem, process, basis, paths, config.argmax_grid)
    # training inventories, drawn independently at each step (uniform default)
    y_train = np.empty((m, n_steps + 1, problem.inv_dim))
    for n in range(n_steps + 1):
        y_train[:, n] = _draw_training_inventory(problem, config, n,
                                                 paths.state(n), m, rng)
    backward_mode = config.mode == "performance" and config.rl_backward_paths

    if config.mode == "value":
        v = np.asarray(problem.terminal_reward(cache.obs(n_steps),
                                               y_train[:, n_steps]), dtype=float)
        for n in range(n_steps - 1, -1, -1):
            design = basis_mod.eval_basis(basis, cache.obs(n + 1),
                                          y_train[:, n + 1])
            coef, diag = fit_least_squares(RegressionProblem(design, v))
            coeffs.alpha[n] = coef
            coeffs.condition_numbers[n] = diag.condition_number
            coeffs.ridge_flags[n] = diag.used_ridge
            if n == 0:
                break
            _, v, _ = cache.decide(n, y_train[:, n], coef)
    else:
        # realised rewards from the current trajectory heads at step n+1
        heads = y_train[:, n_steps].copy()
        j_next = np.asarray(problem.terminal_reward(cache.obs(n_steps), heads),
                            dtype=float)
        for n in range(n_steps - 1, -1, -1):
            design = basis_mod.eval_basis(basis, cache.obs(n + 1), heads)
            coef, diag = fit_least_squares(RegressionProblem(design, j_next))
            coeffs.alpha[n] = coef
            coeffs.condition_numbers[n] = diag.condition_number
            coeffs.ridge_flags[n] = diag.used_ridge
            if backward_mode:
                decider = cache.grid_decider(n, coef)
                found, roots = _antecedent_batch(
                    problem, n, cache.obs(n), heads[:, 0], decider,
                    prescan_points=config.prescan_points,
                )
                broken[n] = 1.0 - found.mean()
                new_heads = np.where(found[:, None], roots[:, None],
                                     rng.random((m, 1)) * problem.inv_upper)
                j_new = np.empty(m)
                if found.any():
                    sel = np.where(found)[0]
                    u_sel, _, _ = cache.decide(n, new_heads[sel], coef, sel=sel)
                    f_sel = np.asarray(problem.running_reward(
                        n, cache.obs(n)[sel], new_heads[sel], u_sel), dtype=float)
                    j_new[sel] = f_sel + j_next[sel]
                if (~found).any():
                    sel = np.where(~found)[0]
                    j_new[sel] = cache.resimulate(n, new_heads[sel],
                                                  coeffs.alpha, sel=sel)
                heads = new_heads
                j_next = j_new
            else:
                heads = y_train[:, n].copy()
                j_next = cache.resimulate(n, heads, coeffs.alpha)
    policy.diagnostics = {
        "condition_numbers": coeffs.condition_numbers,
        "ridge_flags": coeffs.ridge_flags,
        "broken_fraction": broken if backward_mode else None,
    }
    return policy


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def _fmt(a):
    return np.vectorize(lambda v: format(v, ".17g"), otypes=[object])(a).tolist()


def save_policy(policy, path):
    """Versioned policy file: algorithm tag, basis, coefficients (17 digits),
    problem fingerprint."""
    payload = {
        "format": "invmc-policy",
        "version": 1,
        "algorithm": policy.algorithm,
        "mode": policy.mode,
        "problem_fingerprint": policy.problem_fingerprint,
        "argmax_grid": policy.argmax_grid,
        "basis": basis_mod.basis_to_dict(policy.basis),
        "coefficients": _fmt(policy.coefficients.alpha),
    }
    if isinstance(policy.coefficients, GdCoefficients):
        payload["node_grids"] = [_fmt(g) for g in policy.coefficients.node_grids]
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_policy(path, problem=None):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != "invmc-policy" or payload.get("version") != 1:
        raise ValueError("not a version-1 invmc policy file")
    if problem is not None and payload["problem_fingerprint"] != problem.fingerprint():
        raise ProblemMismatch("policy was fitted on a different problem")
    spec = basis_mod.basis_from_dict(payload["basis"])
    alpha = np.asarray(payload["coefficients"], dtype=float)
    if "node_grids" in payload:
        grids = [np.asarray(g, dtype=float) for g in payload["node_grids"]]
        coeffs = GdCoefficients(alpha=alpha, node_grids=grids, basis=spec,
                                condition_numbers=np.zeros(alpha.shape[0]),
                                ridge_flags=np.zeros(alpha.shape[0], dtype=bool))
    else:
        coeffs = basis_mod.CoefficientMatrix(
            alpha=alpha, basis=spec,
            condition_numbers=np.zeros(alpha.shape[0]),
            ridge_flags=np.zeros(alpha.shape[0], dtype=bool),
        )
    return Policy(algorithm=payload["algorithm"], mode=payload["mode"],
                  problem_fingerprint=payload["problem_fingerprint"],
                  coefficients=coeffs, argmax_grid=payload["argmax_grid"])


# ---------------------------------------------------------------------------
# estimator wrappers (fit -> policy_, sklearn get_params/set_params)
# ---------------------------------------------------------------------------

class _SolverEstimator(BaseEstimator):
    """Base class giving the solvers a fit()-shaped, get_params-able surface."""

    _algorithm = None

    def _config(self):
        raise NotImplementedError

    def fit(self, problem, process, paths):
        basis = self.basis
        config = self._config()
        start = time.perf_counter()
        if self._algorithm == "grid_discretisation":
            policy = solve_grid_discretisation(problem, process, basis, paths, config)
        elif self._algorithm == "control_randomisation":
            policy = solve_control_randomisation(problem, process, basis, paths, config)
        else:
            policy = solve_regress_later(problem, process, basis, paths, config)
        self.solve_seconds_ = time.perf_counter() - start
        self.policy_ = policy
        return self

    def decide(self, problem, process, n, x, i):
        return self.policy_.decide(problem, process, n, x, i)


class GridDiscretisationSolver(_SolverEstimator):
    _algorithm = "grid_discretisation"

    def __init__(self, basis=None, mode="value", grid_levels=5, seed=0,
                 argmax_grid=21):
        self.basis = basis
        self.mode = mode
        self.grid_levels = grid_levels
        self.seed = seed
        self.argmax_grid = argmax_grid

    def _config(self):
        return SolverConfig(algorithm=self._algorithm, mode=self.mode,
                            grid_levels=self.grid_levels, seed=self.seed,
                            argmax_grid=self.argmax_grid)


class ControlRandomisationSolver(_SolverEstimator):
    _algorithm = "control_randomisation"

    def __init__(self, basis=None, mode="value", seed=0, cr_sweeps=1,
                 control_sampler=None, cr_y0="uniform", argmax_grid=21,
                 epsilon_explore=0.3):
        self.basis = basis
        self.mode = mode
        self.seed = seed
        self.cr_sweeps = cr_sweeps
        self.control_sampler = control_sampler
        self.cr_y0 = cr_y0
        self.argmax_grid = argmax_grid
        self.epsilon_explore = epsilon_explore

    def _config(self):
        return SolverConfig(algorithm=self._algorithm, mode=self.mode,
                            seed=self.seed, cr_sweeps=self.cr_sweeps,
                            control_sampler=self.control_sampler,
                            cr_y0=self.cr_y0, argmax_grid=self.argmax_grid,
                            epsilon_explore=self.epsilon_explore)


class RegressLaterSolver(_SolverEstimator):
    _algorithm = "regress_later"

    def __init__(self, basis=None, mode="value", seed=0, rl_backward_paths=False,
                 inventory_sampling="uniform", argmax_grid=21, prescan_points=64):
        self.basis = basis
        self.mode = mode
        self.seed = seed
        self.rl_backward_paths = rl_backward_paths
        self.inventory_sampling = inventory_sampling
        self.argmax_grid = argmax_grid
        self.prescan_points = prescan_points

    def _config(self):
        return SolverConfig(algorithm=self._algorithm, mode=self.mode,
                            seed=self.seed, rl_backward_paths=self.rl_backward_paths,
                            inventory_sampling=self.inventory_sampling,
                            argmax_grid=self.argmax_grid,
                            prescan_points=self.prescan_points)
