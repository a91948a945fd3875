"""Numerical certification of the structural properties the detectors rely
on: likelihood-ratio ordering of the mixing distributions, monotonicity of
the log LRTs, and the mass of the decision-boundary neighborhood under the
multi-block detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import detectors
from .model import ConfigError
from .numerics import (
    BisectionError,
    LogDensity,
    NumericalError,
    bisect_monotone,
    wilson_interval,
)

_MASS_RNG_SALT = 0xB0DDA17


# ---------------------------------------------------------------------------
# likelihood-ratio order


@dataclass(frozen=True)
class LrOrderReport:
    """Result of checking that f1/f0 is nondecreasing along a grid."""

    passed: bool
    worst_violation: float
    worst_at: Optional[float]
    points_checked: int
    tol: float


def uniform_logdensity(lo, hi):
    if hi <= lo:
        raise ValueError("need hi > lo")
    level = -math.log(hi - lo)
    return LogDensity(fn=lambda x: np.full(np.shape(x), level), lo=lo, hi=hi)


def shifted_exponential_logdensity(shift, mean):
    if mean <= 0:
        raise ValueError("mean must be positive")
    return LogDensity(
        fn=lambda x: -math.log(mean) - (x - shift) / mean, lo=shift, hi=math.inf
    )


def gamma_logdensity(k, s):
    from .numerics import log_gamma_density

    return LogDensity(fn=lambda x: log_gamma_density(x, k, s), lo=0.0, hi=math.inf)


def gaussian_logdensity(mu, var):
    if var <= 0:
        raise ValueError("variance must be positive")
    c = -0.5 * math.log(2.0 * math.pi * var)
    return LogDensity(
        fn=lambda x: c - 0.5 * (x - mu) ** 2 / var, lo=-math.inf, hi=math.inf
    )


def _ratio_step(prev, cur):
    if prev == cur:
        return 0.0
    if math.isinf(prev) or math.isinf(cur):
        return math.inf if cur > prev else -math.inf
    return cur - prev


def check_lr_order(density0, density1, grid, tol=1e-9):
    """Verify the likelihood-ratio order density0 <= density1 on a grid.

    The log ratio log f1 - log f0 must be nondecreasing across the grid.
    Points where both densities vanish are outside the union of supports and
    are skipped; where only f0 vanishes the ratio is +inf, where only f1
    vanishes it is -inf (the extended-ratio convention, under which the
    ordering is still checkable).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be 1-D and strictly increasing")
    l0 = np.atleast_1d(density0(grid))
    l1 = np.atleast_1d(density1(grid))
    worst = 0.0
    worst_at = None
    prev = None
    checked = 0
    for x, a, b in zip(grid, l0, l1):
        if a == -math.inf and b == -math.inf:
            continue
        if a == -math.inf:
            r = math.inf
        elif b == -math.inf:
            r = -math.inf
        else:
            r = b - a
        checked += 1
        if prev is not None:
            step = _ratio_step(prev, r)
            if step < worst:
                worst = step
                worst_at = float(x)
        prev = r
    return LrOrderReport(
        passed=worst >= -tol, worst_violation=worst, worst_at=worst_at,
        points_checked=checked, tol=tol,
    )


# ---------------------------------------------------------------------------
# LRT monotonicity


@dataclass(frozen=True)
class GridSpec:
    """Geometric grid in average power per sample (z over sample count)."""

    lo: float = 0.1
    hi: float = 10.0
    points: int = 1000

    def values(self):
        return np.geomspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class MonotonicityReport:
    axis: int
    grid_lo: float
    grid_hi: float
    points: int
    worst_violation: float
    worst_at: Optional[float]
    tol: float
    passed: bool


def _relative_violations(grid, values, tol):
    diffs = np.diff(values)
    scale = np.maximum(1.0, np.maximum(np.abs(values[:-1]), np.abs(values[1:])))
    rel = diffs / scale
    worst_idx = int(np.argmin(rel)) if rel.size else 0
    worst = float(rel[worst_idx]) if rel.size else 0.0
    return worst, float(grid[worst_idx]), worst >= -tol


def check_lrt_monotone(cfg, grid=GridSpec(), tol=1e-9):
    """Monotonicity reports for one detector configuration.

    For the scalar statistics the log LRT is evaluated on a geometric grid
    of total powers.  For the multi-block detector each axis is swept with
    the other block powers pinned at their typical scale (n/M)(sigma_w2 +
    zeta), and one report is returned per axis.
    """
    xs = grid.values()
    if cfg.variant == detectors.AWGN_UNIFORM:
        zs = xs * cfg.n
        vals = np.array([detectors.log_lrt_awgn(z, cfg) for z in zs])
        worst, at, ok = _relative_violations(xs, vals, tol)
        return [MonotonicityReport(0, grid.lo, grid.hi, grid.points, worst, at, tol, ok)]
    if cfg.variant == detectors.M1_EXPONENTIAL:
        zs = xs * cfg.n
        vals = np.array([detectors.log_lrt_m1(z, cfg) for z in zs])
        worst, at, ok = _relative_violations(xs, vals, tol)
        return [MonotonicityReport(0, grid.lo, grid.hi, grid.points, worst, at, tol, ok)]

    k = cfg.block_size
    sa = np.asarray(cfg.sigma_a2)
    if sa.ndim != 0:
        raise ConfigError("monotonicity grids expect a common per-block signal power")
    cache = {}

    def term(z):
        if z not in cache:
            cache[z] = detectors.log_lrt_block_term(
                z, k, cfg.sigma_w2, float(sa), cfg.zeta, cfg.spec
            )
        return cache[z]

    fixed = k * (cfg.sigma_w2 + cfg.zeta)
    reports = []
    for axis in range(cfg.M):
        vals = []
        for x in xs:
            Z = np.full(cfg.M, fixed)
            Z[axis] = x * k
            # each per-block term carries its own sigma_a2/zeta offset, so
            # their plain sum is the full log LRT
            vals.append(float(np.sum([term(z) for z in Z])))
        worst, at, ok = _relative_violations(xs, np.asarray(vals), tol)
        reports.append(
            MonotonicityReport(axis, grid.lo, grid.hi, grid.points, worst, at, tol, ok)
        )
    return reports


# ---------------------------------------------------------------------------
# boundary curve and boundary-region mass


def delta_for_boundary_mass(epsilon, M, zeta):
    """Half-width making the boundary-region mass bound equal epsilon.

    The per-block power-plus-noise density is a shifted exponential whose
    supremum is 1/zeta, and the union-bound mass of the boundary region is
    at most 2*M*delta*sup f, so delta = epsilon*zeta/(2*M).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if M < 1:
        raise ValueError("M must be >= 1")
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    return epsilon * zeta / (2.0 * M)


def _block_term_fn(cfg):
    sa = float(np.asarray(cfg.sigma_a2))
    k = cfg.block_size

    def term(z):
        return detectors.log_lrt_block_term(z, k, cfg.sigma_w2, sa, cfg.zeta, cfg.spec)

    return term


def boundary_root(cfg, x_others, axis, log_gamma, tol=1e-10, max_expand=25):
    """The normalized power on one axis putting the statistic on the decision
    boundary, with the other components fixed; None when no such point exists.

    Componentwise monotonicity makes the root unique when it exists.  The
    per-block term climbs to its supremum sigma_a2/zeta as the block power
    grows, so a target at or above offset + sigma_a2/zeta is unattainable
    (with a small margin: near the supremum the root location is dominated
    by quadrature noise).
    """
    if cfg.variant != detectors.MBLOCK_PRODUCT:
        raise ConfigError("boundary roots are defined for the multi-block detector")
    x_others = np.asarray(x_others, dtype=float)
    if x_others.shape != (cfg.M - 1,):
        raise ConfigError(f"expected {cfg.M - 1} fixed components, got {x_others.shape}")
    term = _block_term_fn(cfg)
    k = cfg.block_size
    offset = float(np.sum([term(k * x) for x in x_others]))

    def f(x):
        return term(k * x) + offset

    target = log_gamma
    sup_f = float(np.asarray(cfg.sigma_a2)) / cfg.zeta + offset
    if target >= sup_f - 1e-7 * max(1.0, abs(sup_f)):
        return None
    lo = 0.0
    hi = cfg.sigma_w2 + cfg.zeta
    f_hi = f(hi)
    expansions = 0
    while f_hi < target:
        hi *= 2.0
        expansions += 1
        if expansions > max_expand:
            return None
        f_hi = f(hi)
    try:
        return bisect_monotone(f, target, (lo, hi), tol=tol)
    except BisectionError:
        return None


@dataclass
class BoundaryRegion:
    """Monte Carlo estimate of the decision-boundary neighborhood mass."""

    M: int
    n: int
    delta: float
    log_gamma: float
    draws: int
    failures: int
    mass: float
    ci: tuple
    analytic_bound: float
    spot_checks: int
    spot_mismatches: int
    boundary_points: list = field(default_factory=list)
    table_range: tuple = (0.0, 0.0)
    draw_x: Optional[np.ndarray] = None
    draw_in_region: Optional[np.ndarray] = None


def estimate_boundary_mass(cfg, delta, log_gamma, draws, seed, spot_checks=100,
                           confidence=0.95, keep_draws=False):
    """Estimate P(jam-power-plus-noise vector lies within delta of the
    decision boundary) for the multi-block detector.

    Draws the per-block received jam powers i.i.d. exponential with mean
    zeta, adds the noise floor, and tests membership with the corner sign
    test: by componentwise monotonicity, the max-metric delta-cube around x
    meets the boundary iff the log LRT changes sign between the cube's
    lower and upper corners.  A subset of draws is cross-checked against
    per-axis root finding on the exact quadrature path.
    """
    if cfg.variant != detectors.MBLOCK_PRODUCT:
        raise ConfigError("boundary mass is defined for the multi-block detector")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    M = cfg.M
    k = cfg.block_size
    rng = np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, _MASS_RNG_SALT]))
    sigma_j2 = rng.exponential(cfg.zeta, size=(draws, M))
    x = cfg.sigma_w2 + sigma_j2

    z_lo_arr = k * np.clip(x - delta, 0.0, None)
    z_hi_arr = k * (x + delta)
    table = detectors.table_for_config(
        cfg, max(float(z_lo_arr.min()), 1e-12), float(z_hi_arr.max())
    )

    failures = 0
    lo_stat = np.empty(draws)
    hi_stat = np.empty(draws)
    for i in range(draws):
        try:
            # block terms already carry their sigma_a2/zeta offsets
            lo_stat[i] = float(np.sum(table(z_lo_arr[i])))
            hi_stat[i] = float(np.sum(table(z_hi_arr[i])))
        except NumericalError:
            failures += 1
            lo_stat[i] = np.nan
            hi_stat[i] = np.nan
    if failures > 0.001 * draws:
        raise NumericalError(
            f"boundary mass run invalid: {failures} of {draws} draws failed"
        )

    valid = ~np.isnan(lo_stat)
    in_region = np.zeros(draws, dtype=bool)
    in_region[valid] = (lo_stat[valid] < log_gamma) & (log_gamma < hi_stat[valid])
    n_valid = int(np.count_nonzero(valid))
    hits = int(np.count_nonzero(in_region[valid]))
    mass = hits / n_valid
    ci = wilson_interval(hits, n_valid, confidence)

    # cross-check the corner test against per-axis root finding: a root
    # within delta on any single axis certifies membership, so every such
    # draw must also test positive (the converse does not hold; the cube can
    # meet the boundary diagonally without any single-axis crossing).
    # Disagreements are re-judged on the direct quadrature path, since the
    # tabulated corners carry interpolation error on borderline draws.
    term = _block_term_fn(cfg)
    mismatches = 0
    points = []
    n_spot = min(spot_checks, draws)
    for i in range(n_spot):
        if not valid[i]:
            continue
        axis_hit = False
        for axis in range(M):
            others = np.delete(x[i], axis)
            try:
                root = boundary_root(cfg, others, axis, log_gamma)
            except NumericalError:
                failures += 1
                continue
            if root is not None:
                y = x[i].copy()
                y[axis] = root
                points.append(tuple(float(v) for v in y))
                if abs(root - x[i, axis]) < delta * (1.0 - 1e-9):
                    axis_hit = True
        if axis_hit and not in_region[i]:
            lo_d = float(np.sum([term(v) for v in z_lo_arr[i]]))
            hi_d = float(np.sum([term(v) for v in z_hi_arr[i]]))
            if not lo_d < log_gamma < hi_d:
                mismatches += 1
    if mismatches:
        raise NumericalError(
            f"corner sign test disagreed with per-axis roots on {mismatches} draws"
        )

    region = BoundaryRegion(
        M=M, n=cfg.n, delta=delta, log_gamma=log_gamma, draws=n_valid,
        failures=failures, mass=mass, ci=ci,
        analytic_bound=2.0 * M * delta / cfg.zeta,
        spot_checks=n_spot, spot_mismatches=mismatches,
        boundary_points=points, table_range=(table.z_lo, table.z_hi),
    )
    if keep_draws:
        region.draw_x = x
        region.draw_in_region = in_region
    return region
