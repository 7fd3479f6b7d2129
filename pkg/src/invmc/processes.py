"""Exogenous process simulators and their one-step conditional moments.

Every process is a product of independent scalar components.  Each component
is a Markov recursion in an *underlying* coordinate plus an observation map
(identity for plain AR(1) dynamics; exp/square/polynomial for the price, wind
and demand models).  Conditional moments are always taken one step ahead and,
for observed quantities, computed in closed form from Gaussian (or Gaussian
mixture, or finite chain) formulas so that regress-later conditioning never
needs a nested simulation.
"""

import math

import numpy as np
from scipy.special import ndtr

from .errors import DimensionMismatch, UnsupportedMoment
from .validation import as_float_array, check_positive_int

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(z):
    """Standard normal density, zero at +-inf."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    finite = np.isfinite(z)
    out[finite] = np.exp(-0.5 * z[finite] ** 2) / _SQRT_2PI
    return out


def _pow_weighted_phi(z, power):
    """z**power * phi(z) with the limit 0 at infinite z."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    finite = np.isfinite(z)
    zf = z[finite]
    out[finite] = zf**power * np.exp(-0.5 * zf**2) / _SQRT_2PI
    return out


def _std_partial_moments(a, b, max_degree):
    """E[Z^j 1{a <= Z <= b}] for standard normal Z, j = 0..max_degree.

    Returns an array with the degree on the last axis; a and b broadcast.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    cdf_a = np.where(np.isneginf(a), 0.0, ndtr(a))
    cdf_b = np.where(np.isposinf(b), 1.0, ndtr(b))
    out = np.empty(a.shape + (max_degree + 1,))
    out[..., 0] = cdf_b - cdf_a
    if max_degree >= 1:
        out[..., 1] = _phi(a) - _phi(b)
    for j in range(2, max_degree + 1):
        out[..., j] = (j - 1) * out[..., j - 2] + _pow_weighted_phi(
            a, j - 1
        ) - _pow_weighted_phi(b, j - 1)
    return out


def truncated_gaussian_moments(mean, sd, lo, hi, max_degree):
    """E[X^j 1{lo <= X <= hi}] for X ~ N(mean, sd^2), j = 0..max_degree.

    Degenerate sd == 0 collapses to point-mass moments.  Infinite bounds are
    allowed.  The degree runs along the last axis of the result.
    """
    mean = np.asarray(mean, dtype=float)
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if np.any(np.asarray(lo) > np.asarray(hi)):
        raise ValueError("lo must not exceed hi")
    if sd == 0.0:
        inside = (mean >= lo) & (mean <= hi)
        degrees = np.arange(max_degree + 1)
        return np.where(
            inside[..., None], mean[..., None] ** degrees, 0.0
        )
    a = (np.asarray(lo, dtype=float) - mean) / sd
    b = (np.asarray(hi, dtype=float) - mean) / sd
    partial = _std_partial_moments(a, b, max_degree)
    # X = mean + sd*Z: binomial expansion in the standard partial moments.
    out = np.zeros(np.broadcast(mean, a).shape + (max_degree + 1,))
    for j in range(max_degree + 1):
        acc = np.zeros_like(out[..., 0])
        for k in range(j + 1):
            acc = acc + math.comb(j, k) * mean ** (j - k) * sd**k * partial[..., k]
        out[..., j] = acc
    return out


def gaussian_raw_moments(mean, sd, max_degree):
    """E[X^j] for X ~ N(mean, sd^2), j = 0..max_degree, degree on last axis."""
    mean = np.asarray(mean, dtype=float)
    out = np.empty(mean.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = mean
    for j in range(2, max_degree + 1):
        out[..., j] = mean * out[..., j - 1] + (j - 1) * sd**2 * out[..., j - 2]
    return out


def _polynomial_expectation(coeffs, raw_moments):
    """E[p(X)] from ascending coefficients and the raw moment table."""
    acc = np.zeros_like(raw_moments[..., 0])
    for r, c in enumerate(coeffs):
        if c != 0.0:
            acc = acc + c * raw_moments[..., r]
    return acc


def _polynomial_truncated_expectation(coeffs, trunc_moments):
    acc = np.zeros_like(trunc_moments[..., 0])
    for r, c in enumerate(coeffs):
        if c != 0.0:
            acc = acc + c * trunc_moments[..., r]
    return acc


class ProcessComponent:
    """One scalar coordinate of the exogenous state."""

    draw_kinds = ("normal",)

    def step(self, n, x, draws):
        raise NotImplementedError

    def observe(self, n, x):
        return np.asarray(x, dtype=float)

    def raw_moments(self, x, max_degree):
        """E[X_{n+1}^j | X_n = x] on the underlying coordinate."""
        raise UnsupportedMoment(f"{type(self).__name__} has no analytic moments")

    def observed_moments(self, n_next, x, max_degree):
        """E[obs(n_next, X_{n+1})^j | X_n = x]."""
        return self.raw_moments(x, max_degree)

    def truncated_observed_moments(self, n_next, x, lo, hi, max_degree):
        """E[obs^j 1{lo <= obs < hi}], needed by hypercube bases."""
        raise UnsupportedMoment(
            f"{type(self).__name__} has no truncated observed moments"
        )


class Ar1Euler(ProcessComponent):
    """X_{n+1} = X_n + alpha (mu - X_n) + sigma xi, identity observation."""

    def __init__(self, alpha, mu, sigma):
        if not np.isfinite([alpha, mu, sigma]).all():
            raise ValueError("Ar1Euler parameters must be finite")
        self.alpha = float(alpha)
        self.mu = float(mu)
        self.sigma = float(sigma)

    def _next_mean(self, x):
        return x + self.alpha * (self.mu - x)

    def step(self, n, x, draws):
        return self._next_mean(x) + self.sigma * draws[0]

    def raw_moments(self, x, max_degree):
        return gaussian_raw_moments(self._next_mean(np.asarray(x, dtype=float)),
                                    self.sigma, max_degree)

    def truncated_observed_moments(self, n_next, x, lo, hi, max_degree):
        return truncated_gaussian_moments(
            self._next_mean(np.asarray(x, dtype=float)), self.sigma, lo, hi, max_degree
        )


class JumpPrice(ProcessComponent):
    """Exponential mean-reverting log-price with jumps and a weekly seasonal.

    Y_{n+1} = Y_n + rate (level - Y_n) + vol xi + J_n, where the jump J_n is
    N(0, jump_sd^2) with probability jump_prob.  The observed price is
    P_n = exp(Y_n) - offset + weekly[n].
    """

    draw_kinds = ("normal", "normal", "uniform")

    def __init__(self, rate=0.2055, level=4.1995, vol=0.11856, jump_prob=0.017,
                 jump_sd=0.4229, offset=27.2531, weekly=(0.0,)):
        if not 0.0 <= jump_prob <= 1.0:
            raise ValueError("jump_prob must lie in [0, 1]")
        self.rate = float(rate)
        self.level = float(level)
        self.vol = float(vol)
        self.jump_prob = float(jump_prob)
        self.jump_sd = float(jump_sd)
        self.offset = float(offset)
        self.weekly = as_float_array(weekly, "weekly")

    def seasonal(self, n):
        return float(self.weekly[n % len(self.weekly)])

    def _next_mean(self, y):
        return y + self.rate * (self.level - y)

    def step(self, n, y, draws):
        xi, xi_jump, u = draws
        jump = np.where(u < self.jump_prob, self.jump_sd * xi_jump, 0.0)
        return self._next_mean(y) + self.vol * xi + jump

    def observe(self, n, y):
        return np.exp(y) - self.offset + self.seasonal(n)

    def _mixture(self, y):
        """(weights, means, sds) of the two-component next-step mixture."""
        m = self._next_mean(np.asarray(y, dtype=float))
        sd_nojump = self.vol
        sd_jump = math.hypot(self.vol, self.jump_sd)
        return (
            (1.0 - self.jump_prob, self.jump_prob),
            (m, m),
            (sd_nojump, sd_jump),
        )

    def raw_moments(self, y, max_degree):
        weights, means, sds = self._mixture(y)
        out = weights[0] * gaussian_raw_moments(means[0], sds[0], max_degree)
        out += weights[1] * gaussian_raw_moments(means[1], sds[1], max_degree)
        return out

    def observed_moments(self, n_next, y, max_degree):
        weights, means, sds = self._mixture(y)
        shift = self.seasonal(n_next) - self.offset
        # E[exp(k Y')] for k = 0..max_degree from lognormal mixture means.
        m = means[0]
        exp_moments = np.empty(np.shape(m) + (max_degree + 1,))
        for k in range(max_degree + 1):
            acc = np.zeros_like(m)
            for w, sd in zip(weights, sds):
                acc = acc + w * np.exp(k * m + 0.5 * (k * sd) ** 2)
            exp_moments[..., k] = acc
        out = np.empty_like(exp_moments)
        for j in range(max_degree + 1):
            acc = np.zeros_like(m)
            for k in range(j + 1):
                acc = acc + math.comb(j, k) * shift ** (j - k) * exp_moments[..., k]
            out[..., j] = acc
        return out


class SquaredAr1Wind(ProcessComponent):
    """Wind power driven by an AR(1) in the centred square-root of speed.

    y_{n+1} = rho y_n + noise xi; speed w = (y + mu)^2.  Two power maps are
    shipped: ``as-written`` uses max(w, rated_speed)^3 verbatim, which floors
    the output at ~10.5 MWh; ``rated-capped`` (default) uses min(w, rated
    speed)^3 and then caps the energy at ``rated_energy`` per step so the
    turbine respects its nameplate rating.
    """

    POWER_VARIANTS = ("rated-capped", "as-written")

    # default mu calibrated so stationary mean power is 0.35 MWh/step under
    # the rated-capped map (see benchmarks.calibrate_wind_offset)
    def __init__(self, rho=0.7633, noise=0.4020, mu=1.7641, variant="rated-capped",
                 cp=0.4, air_density=1.225, area=2500.0 * math.pi,
                 rated_speed=14.0, rated_energy=2.1):
        if variant not in self.POWER_VARIANTS:
            raise ValueError(f"variant must be one of {self.POWER_VARIANTS}")
        self.rho = float(rho)
        self.noise = float(noise)
        self.mu = float(mu)
        self.variant = variant
        self.coef = 1e-6 * cp * air_density * area
        self.rated_speed = float(rated_speed)
        self.rated_energy = float(rated_energy)

    def step(self, n, y, draws):
        return self.rho * y + self.noise * draws[0]

    def observe(self, n, y):
        speed = (np.asarray(y, dtype=float) + self.mu) ** 2
        if self.variant == "as-written":
            return self.coef * np.maximum(speed, self.rated_speed) ** 3
        return np.minimum(self.coef * np.minimum(speed, self.rated_speed) ** 3,
                          self.rated_energy)

    def raw_moments(self, y, max_degree):
        return gaussian_raw_moments(self.rho * np.asarray(y, dtype=float),
                                    self.noise, max_degree)

    def observed_moments(self, n_next, y, max_degree):
        # s = y' + mu is Gaussian; the power is piecewise c*s^6 / constant.
        mean_s = self.rho * np.asarray(y, dtype=float) + self.mu
        if self.variant == "as-written":
            edge = math.sqrt(self.rated_speed)
            const = self.coef * self.rated_speed**3
        else:
            edge = (self.rated_energy / self.coef) ** (1.0 / 6.0)
            const = self.rated_energy
        out = np.empty(np.shape(mean_s) + (max_degree + 1,))
        out[..., 0] = 1.0
        for j in range(1, max_degree + 1):
            trunc = truncated_gaussian_moments(mean_s, self.noise, -edge, edge, 6 * j)
            inside_poly = (self.coef**j) * trunc[..., 6 * j]
            prob_inside = trunc[..., 0]
            if self.variant == "as-written":
                full = gaussian_raw_moments(mean_s, self.noise, 6 * j)
                # constant inside the slow-wind band, c*s^6 outside
                out[..., j] = const**j * prob_inside + (self.coef**j) * (
                    full[..., 6 * j] - trunc[..., 6 * j]
                )
            else:
                out[..., j] = inside_poly + const**j * (1.0 - prob_inside)
        return out


class SeasonalAr1Temp(ProcessComponent):
    """Temperature as AR(1) deviations around a tabulated daily profile."""

    def __init__(self, rho=-0.92, noise=2.14, profile=(0.0,)):
        self.rho = float(rho)
        self.noise = float(noise)
        self.profile = as_float_array(profile, "profile")

    def seasonal(self, n):
        return float(self.profile[n % len(self.profile)])

    def step(self, n, t, draws):
        return self.rho * t + self.noise * draws[0]

    def observe(self, n, t):
        return np.asarray(t, dtype=float) + self.seasonal(n)

    def raw_moments(self, t, max_degree):
        return gaussian_raw_moments(self.rho * np.asarray(t, dtype=float),
                                    self.noise, max_degree)

    def observed_moments(self, n_next, t, max_degree):
        return gaussian_raw_moments(
            self.rho * np.asarray(t, dtype=float) + self.seasonal(n_next),
            self.noise, max_degree,
        )


class DemandPoly(SeasonalAr1Temp):
    """Electricity demand as a clamped degree-5 polynomial of temperature.

    The observation is max(q(T), 0) / scale with T the seasonal temperature of
    :class:`SeasonalAr1Temp`.  Demand is clamped at zero because the printed
    polynomial goes negative for extreme temperatures; the clamp regions are
    derived from the real roots of q so conditional moments stay exact.
    """

    # order-5 fit, constant term first
    DEFAULT_COEFFS = (6784.9728, -235.5911, -2.2869, 0.8897, -0.0204, 0.000105)

    def __init__(self, rho=-0.92, noise=2.14, profile=(0.0,),
                 coeffs=DEFAULT_COEFFS, scale=30000.0):
        super().__init__(rho=rho, noise=noise, profile=profile)
        self.coeffs = tuple(float(c) for c in coeffs)
        self.scale = float(scale)
        self._positive_intervals = _positive_regions(self.coeffs)

    def observe(self, n, t):
        temp = super().observe(n, t)
        q = np.polynomial.polynomial.polyval(temp, self.coeffs)
        return np.maximum(q, 0.0) / self.scale

    def observed_moments(self, n_next, t, max_degree):
        mean_temp = self.rho * np.asarray(t, dtype=float) + self.seasonal(n_next)
        out = np.empty(np.shape(mean_temp) + (max_degree + 1,))
        out[..., 0] = 1.0
        for j in range(1, max_degree + 1):
            qj = np.polynomial.polynomial.polypow(self.coeffs, j)
            acc = np.zeros_like(mean_temp)
            for lo, hi in self._positive_intervals:
                trunc = truncated_gaussian_moments(mean_temp, self.noise,
                                                   lo, hi, 5 * j)
                acc = acc + _polynomial_truncated_expectation(qj, trunc)
            out[..., j] = acc / self.scale**j
        return out


def _positive_regions(coeffs):
    """Intervals where an ascending-coefficient polynomial is positive."""
    roots = np.polynomial.polynomial.polyroots(coeffs)
    real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    edges = np.concatenate(([-np.inf], real, [np.inf]))
    intervals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = _interval_probe(lo, hi)
        if np.polynomial.polynomial.polyval(mid, coeffs) > 0.0:
            intervals.append((float(lo), float(hi)))
    return tuple(intervals)


def _interval_probe(lo, hi):
    if np.isneginf(lo) and np.isposinf(hi):
        return 0.0
    if np.isneginf(lo):
        return hi - 1.0
    if np.isposinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


class FiniteChain(ProcessComponent):
    """Finite-state Markov chain on scalar state values (test oracle support)."""

    draw_kinds = ("uniform",)

    def __init__(self, states, transition_matrix):
        self.states = as_float_array(states, "states")
        matrix = as_float_array(transition_matrix, "transition_matrix",
                                shape=(len(self.states), len(self.states)))
        if np.any(matrix < 0.0) or not np.allclose(matrix.sum(axis=1), 1.0):
            raise ValueError("transition_matrix rows must be distributions")
        self.transition_matrix = matrix
        self._cum = np.cumsum(matrix, axis=1)

    def _index(self, x):
        x = np.asarray(x, dtype=float)
        return np.argmin(np.abs(x[..., None] - self.states), axis=-1)

    def step(self, n, x, draws):
        idx = self._index(x)
        rows = self._cum[idx]
        nxt = np.sum(draws[0][..., None] > rows, axis=-1)
        return self.states[np.minimum(nxt, len(self.states) - 1)]

    def raw_moments(self, x, max_degree):
        idx = self._index(x)
        powers = self.states[None, :] ** np.arange(max_degree + 1)[:, None]
        return np.einsum("...s,js->...j", self.transition_matrix[idx], powers)

    def truncated_observed_moments(self, n_next, x, lo, hi, max_degree):
        idx = self._index(x)
        inside = (self.states >= lo) & (self.states < hi)
        powers = np.where(inside[None, :],
                          self.states[None, :] ** np.arange(max_degree + 1)[:, None],
                          0.0)
        return np.einsum("...s,js->...j", self.transition_matrix[idx], powers)


class ProcessSpec:
    """Product of independent scalar components, one per exogenous dimension."""

    def __init__(self, components):
        self.components = tuple(components)
        if not self.components:
            raise ValueError("ProcessSpec needs at least one component")

    @property
    def exo_dim(self):
        return len(self.components)

    def observe(self, n, x):
        """Map underlying states (..., p) to observed values (..., p)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.exo_dim:
            raise DimensionMismatch(
                f"state has {x.shape[-1]} dims, process has {self.exo_dim}"
            )
        cols = [c.observe(n, x[..., d]) for d, c in enumerate(self.components)]
        return np.stack(cols, axis=-1)

    def observed_moments(self, n_next, x, max_degrees):
        """Per-dimension E[obs^j | x], j = 0..max_degrees[d].

        Returns a list of arrays (one per dimension, degree on last axis).
        """
        x = np.asarray(x, dtype=float)
        return [
            c.observed_moments(n_next, x[..., d], int(max_degrees[d]))
            for d, c in enumerate(self.components)
        ]

    def truncated_observed_moments(self, n_next, x, d, lo, hi, max_degree):
        return self.components[d].truncated_observed_moments(
            n_next, np.asarray(x, dtype=float)[..., d], lo, hi, max_degree
        )


def conditional_poly_moments(spec, x, max_degree):
    """Raw one-step moments of the underlying coordinates, per dimension.

    Returns an array (..., p, max_degree + 1).  Raises UnsupportedMoment for
    variants without a closed form.
    """
    x = np.asarray(x, dtype=float)
    cols = [c.raw_moments(x[..., d], max_degree)
            for d, c in enumerate(spec.components)]
    return np.stack(cols, axis=-2)


class PathSet:
    """M simulated trajectories of the exogenous process over N steps.

    Layout is path-major: ``values[m, n, d]`` is path m at step n, dimension d
    (underlying coordinates, not observed ones).
    """

    def __init__(self, values, seed=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise DimensionMismatch("PathSet values must be (paths, steps+1, dims)")
        self.values = values
        self.seed = seed

    @property
    def n_paths(self):
        return self.values.shape[0]

    @property
    def n_steps(self):
        return self.values.shape[1] - 1

    @property
    def exo_dim(self):
        return self.values.shape[2]

    def state(self, n):
        return self.values[:, n, :]

    def export_csv(self, path):
        """Flat CSV with columns path, step, component, value."""
        m, steps, p = self.values.shape
        idx = np.indices((m, steps, p)).reshape(3, -1)
        flat = np.column_stack([idx.T, self.values.reshape(-1)])
        header = "path,step,component,value"
        np.savetxt(path, flat, fmt=["%d", "%d", "%d", "%.17g"],
                   delimiter=",", header=header, comments="")

    @classmethod
    def import_csv(cls, path):
        raw = np.loadtxt(path, delimiter=",", skiprows=1)
        raw = np.atleast_2d(raw)
        m = int(raw[:, 0].max()) + 1
        steps = int(raw[:, 1].max()) + 1
        p = int(raw[:, 2].max()) + 1
        values = np.empty((m, steps, p))
        values[raw[:, 0].astype(int), raw[:, 1].astype(int),
               raw[:, 2].astype(int)] = raw[:, 3]
        return cls(values)

    def export_npy(self, path):
        np.save(path, self.values)

    @classmethod
    def import_npy(cls, path):
        return cls(np.load(path))


def simulate_paths(spec, m_paths, n_steps, x0, seed):
    """Simulate a PathSet with a counter-based Philox stream.

    Draws are taken step by step, component by component, in a fixed order, so
    results do not depend on how downstream consumers chunk the paths.
    """
    m_paths = check_positive_int(m_paths, "m_paths")
    n_steps = check_positive_int(n_steps, "n_steps")
    x0 = as_float_array(x0, "x0", shape=(spec.exo_dim,))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    values = np.empty((m_paths, n_steps + 1, spec.exo_dim))
    values[:, 0, :] = x0
    for n in range(n_steps):
        for d, comp in enumerate(spec.components):
            draws = tuple(
                rng.standard_normal(m_paths) if kind == "normal" else rng.random(m_paths)
                for kind in comp.draw_kinds
            )
            values[:, n + 1, d] = comp.step(n, values[:, n, d], draws)
    return PathSet(values, seed=seed)
