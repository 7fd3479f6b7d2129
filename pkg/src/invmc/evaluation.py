"""Forward policy evaluation, myopic baseline, and the exact DP test oracle.

Backward solvers only produce coefficient matrices; the value of the induced
policy is always measured by a fresh forward Monte Carlo run, sharing one
evaluation path set across compared methods so relative results are not
drowned by simulation noise.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import solvers
from .errors import ClosureViolation, ProblemMismatch
from .validation import as_float_array


@dataclass(eq=False)
class EvaluationReport:
    mean_value: float
    std_error: float
    per_path_values: np.ndarray
    mean_inventory: np.ndarray       # (N, q) per-step average inventory
    mean_control: np.ndarray         # (N, q') per-step average control
    violation_count: int
    wall_time: float
    n_paths: int = 0
    trajectory: dict = None

    def to_dict(self):
        return {
            "mean_value": self.mean_value,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "violation_count": self.violation_count,
            "wall_time": self.wall_time,
            "mean_inventory": self.mean_inventory.tolist(),
            "mean_control": self.mean_control.tolist(),
        }


def _make_report(res, wall):
    total = res["total"]
    n = total.shape[0]
    se = float(total.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EvaluationReport(
        mean_value=float(total.mean()),
        std_error=se,
        per_path_values=total,
        mean_inventory=res["mean_inventory"],
        mean_control=res["mean_control"],
        violation_count=res["violations"],
        wall_time=wall,
        n_paths=n,
    )


def evaluate_policy(policy, problem, process, eval_paths, x0, i0, n_threads=0,
                    collect_trajectory=False):
    """Value of the policy run forward along eval_paths from (x0, i0).

    eval_paths should be simulated independently of the training paths.
    Raises ProblemMismatch when the policy was fitted on another problem.
    """
    if policy is not None and policy.problem_fingerprint != problem.fingerprint():
        raise ProblemMismatch("policy fingerprint differs from the problem")
    if x0 is not None:
        x0 = as_float_array(x0, "x0", shape=(problem.exo_dim,))
        if not np.allclose(eval_paths.values[:, 0, :], x0):
            raise ValueError("eval_paths do not start at the supplied x0")
    i0 = as_float_array(i0, "i0", shape=(problem.inv_dim,))
    start = time.perf_counter()
    res = solvers.rollout(problem, process, eval_paths.values, policy, i0,
                          n_threads=n_threads,
                          collect_trajectory=collect_trajectory)
    report = _make_report(res, time.perf_counter() - start)
    if collect_trajectory:
        report.trajectory = {k: res[k] for k in ("inventory", "controls", "exo_obs")}
    return report


def myopic_policy_value(problem, process, eval_paths, x0, i0, n_threads=0):
    """Greedy baseline: argmax of the running reward with zero continuation."""
    return evaluate_policy(None, problem, process, eval_paths, x0, i0,
                           n_threads=n_threads)


@dataclass(eq=False)
class DpOracleResult:
    values: np.ndarray        # (N+1, n_states, n_nodes)
    states: np.ndarray
    nodes: np.ndarray
    controls: np.ndarray
    next_node: np.ndarray     # (N, n_nodes, n_controls) int, -1 inadmissible

    def value(self, n, state_index, node_index):
        return float(self.values[n, state_index, node_index])


def exact_dp_oracle(chain, inventory_nodes, controls, f, g, n_steps,
                    transition=None):
    """Exact backward induction over a finite product space (test oracle).

    ``chain`` is a FiniteChain process component; the transition must map
    every (node, control) pair back onto the node set exactly (within 1e-9),
    otherwise ClosureViolation is raised.  ``transition(n, u, i)`` defaults to
    clamped additive moves i + u.  Controls outside the inventory bounds at a
    node are treated as inadmissible there.
    """
    states = chain.states
    matrix = chain.transition_matrix
    nodes = np.atleast_1d(as_float_array(inventory_nodes, "inventory_nodes"))
    ctl = np.atleast_1d(as_float_array(controls, "controls"))
    if ctl.ndim == 1:
        ctl = ctl[:, None]
    i_max = nodes.max()
    if transition is None:
        def transition(n, u, i):
            return np.clip(i + u[..., 0], 0.0, i_max)
    n_states, n_nodes, n_controls = len(states), len(nodes), len(ctl)
    # resolve the node image of every (step, node, control) once
    next_node = np.full((n_steps, n_nodes, n_controls), -1, dtype=int)
    for n in range(n_steps):
        for li, node in enumerate(nodes):
            for ci in range(n_controls):
                nxt = float(transition(n, ctl[ci], node))
                if nxt < -1e-9 or nxt > i_max + 1e-9:
                    continue  # inadmissible here
                hits = np.where(np.abs(nodes - nxt) <= 1e-9)[0]
                if hits.size == 0:
                    raise ClosureViolation(
                        f"transition({n}, {ctl[ci]}, {node}) = {nxt} is off-grid"
                    )
                next_node[n, li, ci] = hits[0]
    values = np.empty((n_steps + 1, n_states, n_nodes))
    for si, s in enumerate(states):
        for li, node in enumerate(nodes):
            values[n_steps, si, li] = float(g(s, node))
    for n in range(n_steps - 1, -1, -1):
        cont = matrix @ values[n + 1]          # (n_states, n_nodes)
        for si, s in enumerate(states):
            for li, node in enumerate(nodes):
                best = -np.inf
                for ci in range(n_controls):
                    tgt = next_node[n, li, ci]
                    if tgt < 0:
                        continue
                    cand = float(f(n, s, node, ctl[ci])) + cont[si, tgt]
                    if cand > best:
                        best = cand
                if not np.isfinite(best):
                    raise ClosureViolation(
                        f"no admissible control at step {n}, node {node}"
                    )
                values[n, si, li] = best
    return DpOracleResult(values=values, states=states, nodes=nodes,
                          controls=ctl, next_node=next_node)
