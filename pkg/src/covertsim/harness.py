"""Monte Carlo estimation of the warden's error probabilities.

Trials are independent work items keyed by (seed, trial index); partitioning
them across worker processes cannot change any result.  Threshold sweeps and
the best-threshold search run on a shared sample set (common random numbers),
so the reported operating curves are exactly monotone rather than monotone in
expectation.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field

import numpy as np

from . import detectors, model, synth
from .model import ConfigError
from .numerics import bisect_monotone, wilson_interval

DEFAULT_TRIALS = 10_000
_H1_TRIAL_OFFSET = 1 << 32  # H0 and H1 trials use disjoint substream indices


@dataclass(frozen=True)
class ErrorRates:
    """False alarm and missed detection estimates at one threshold."""

    p_fa: float
    p_md: float
    ci_fa: tuple
    ci_md: tuple
    trials_h0: int
    trials_h1: int
    threshold: float

    @property
    def sum(self):
        return self.p_fa + self.p_md

    @property
    def ci_sum(self):
        return (self.ci_fa[0] + self.ci_md[0], self.ci_fa[1] + self.ci_md[1])


@dataclass(frozen=True)
class MinErrorResult:
    """Best empirical threshold and its held-out re-estimate."""

    threshold: float
    min_sum_search: float
    rates: ErrorRates
    lrt_gamma_threshold: float
    candidates: int


@dataclass(frozen=True)
class CovertnessRow:
    n: int
    threshold: float
    min_sum: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class CovertnessCurve:
    epsilon: float
    scenario: dict
    rows: tuple


# ---------------------------------------------------------------------------
# statistic gathering


def _gather_range(scenario, hypothesis, seed, start, count, need_haw):
    M = scenario.slots.M
    z = np.empty(count)
    blocks = np.empty((count, M))
    haw2 = np.empty((count, M)) if need_haw else None
    centers = np.empty(count)
    gain_jw = model.path_gain(scenario.geometry.d_jw, scenario.geometry.alpha)
    for j in range(count):
        rng = synth.TrialRng(seed, start + j)
        obs = synth.synthesize_willie_slot(scenario, hypothesis, rng)
        bp = detectors.block_powers(obs, M)
        blocks[j] = bp
        z[j] = detectors._ltr_sum(bp)
        if obs.latents.sigma_j2 is not None:
            centers[j] = scenario.noise.sigma_w2 + float(np.mean(obs.latents.sigma_j2))
        else:
            centers[j] = scenario.noise.sigma_w2 + obs.latents.jam_power * gain_jw
        if need_haw:
            h = obs.latents.fading.get("aw")
            if h is None:
                raise ConfigError("genie statistics need a faded transmitter-to-warden link")
            haw2[j] = np.abs(h) ** 2
    return z, blocks, haw2, centers


def _gather(scenario, hypothesis, trials, seed, trial0, need_haw, workers):
    if workers <= 1 or trials < 4:
        return _gather_range(scenario, hypothesis, seed, trial0, trials, need_haw)
    chunk = max(1, math.ceil(trials / (4 * workers)))
    starts = list(range(0, trials, chunk))
    M = scenario.slots.M
    z = np.empty(trials)
    blocks = np.empty((trials, M))
    haw2 = np.empty((trials, M)) if need_haw else None
    centers = np.empty(trials)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(
                _gather_range, scenario, hypothesis, seed, trial0 + s,
                min(chunk, trials - s), need_haw,
            ): s
            for s in starts
        }
        for fut in concurrent.futures.as_completed(futures):
            s = futures[fut]
            zc, bc, hc, cc = fut.result()
            sl = slice(s, s + len(zc))
            z[sl] = zc
            blocks[sl] = bc
            centers[sl] = cc
            if need_haw:
                haw2[sl] = hc
    return z, blocks, haw2, centers


@dataclass
class SampleSet:
    """Shared per-hypothesis statistics for one (scenario, cfg, seed)."""

    stats_h0: np.ndarray
    stats_h1: np.ndarray
    kind: str  # "power" (z/n) or "loglr"
    lrt_gamma_threshold: float
    centers_h0: np.ndarray = field(default=None, repr=False)


def _check_match(scenario, cfg):
    want = detectors.config_for_scenario(scenario, genie=cfg.genie)
    mismatches = []
    for name in ("variant", "n", "M"):
        if getattr(want, name) != getattr(cfg, name):
            mismatches.append(name)
    for name in ("sigma_w2", "zeta"):
        if not math.isclose(getattr(want, name), getattr(cfg, name), rel_tol=1e-12):
            mismatches.append(name)
    if np.asarray(cfg.sigma_a2).ndim == 0 and not math.isclose(
        float(np.asarray(want.sigma_a2)), float(np.asarray(cfg.sigma_a2)), rel_tol=1e-12
    ):
        mismatches.append("sigma_a2")
    if mismatches:
        raise ConfigError(f"detector does not match scenario: {', '.join(mismatches)} differ")


def _statistics_from_raw(cfg, z, blocks, haw2, table=None):
    """Reduce gathered trial data to the detector's scalar statistic."""
    if cfg.variant == detectors.AWGN_UNIFORM:
        return z / cfg.n
    if cfg.variant == detectors.M1_EXPONENTIAL:
        if not cfg.genie:
            return z / cfg.n
        out = np.empty(len(z))
        sa = float(np.asarray(cfg.sigma_a2))
        for i in range(len(z)):
            out[i] = detectors.log_lrt_m1(z[i], cfg, sigma_a2=haw2[i, 0] * sa)
        return out
    if not cfg.genie:
        # the tabulated block terms each carry their sigma_a2/zeta offset
        return np.sum(table(blocks.ravel()).reshape(blocks.shape), axis=1)
    out = np.empty(len(z))
    sa = float(np.asarray(cfg.sigma_a2))
    for i in range(len(z)):
        out[i] = detectors.log_lrt_mblock(blocks[i], cfg, sigma_a2=haw2[i] * sa)
    return out


def lrt_power_threshold(cfg, z_lo, z_hi, tol=1e-9):
    """Total power z* where the scalar log LRT crosses log gamma.

    Returns +inf when log gamma exceeds the LRT everywhere on the bracket
    (the test never fires) and -inf when it is below it everywhere.
    """
    if cfg.variant == detectors.AWGN_UNIFORM:
        f = lambda z: detectors.log_lrt_awgn(z, cfg)
    elif cfg.variant == detectors.M1_EXPONENTIAL:
        f = lambda z: detectors.log_lrt_m1(z, cfg)
    else:
        raise ConfigError("the power threshold form applies to the scalar variants")
    lo, hi = float(z_lo), float(z_hi)
    if not lo < hi:
        raise ValueError("need z_lo < z_hi")
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > cfg.log_gamma:
        return -math.inf
    if f_hi < cfg.log_gamma:
        return math.inf
    root = bisect_monotone(f, cfg.log_gamma, (lo, hi), tol=tol)
    if root is None:
        return math.inf if f_hi < cfg.log_gamma else -math.inf
    return root


def collect_statistics(scenario, cfg, trials, seed, workers=1):
    """Per-trial detector statistics for `trials` H0 trials and `trials`
    H1 trials, deterministic in (seed, trial index)."""
    _check_match(scenario, cfg)
    need_haw = cfg.genie
    z0, b0, h0, c0 = _gather(scenario, synth.H0, trials, seed, 0, need_haw, workers)
    z1, b1, h1, _ = _gather(
        scenario, synth.H1, trials, seed, _H1_TRIAL_OFFSET, need_haw, workers
    )
    table = None
    if cfg.variant == detectors.MBLOCK_PRODUCT and not cfg.genie:
        # one shared interpolant so both hypotheses see the same statistic map
        all_blocks = np.concatenate([b0, b1])
        positive = all_blocks[all_blocks > 0]
        z_lo = float(positive.min()) if positive.size else 1e-12
        table = detectors.table_for_config(cfg, z_lo, float(all_blocks.max()))
    s0 = _statistics_from_raw(cfg, z0, b0, h0, table)
    s1 = _statistics_from_raw(cfg, z1, b1, h1, table)
    if cfg.variant == detectors.MBLOCK_PRODUCT or cfg.genie:
        kind = "loglr"
        gamma_thr = cfg.log_gamma
    else:
        kind = "power"
        z_all = np.concatenate([z0, z1])
        lo = max(float(z_all.min()) * 0.5, 1e-9 * cfg.n * cfg.sigma_w2)
        hi = float(z_all.max()) * 2.0
        gamma_thr = lrt_power_threshold(cfg, lo, hi)
        if math.isfinite(gamma_thr):
            gamma_thr /= cfg.n
    return SampleSet(
        stats_h0=s0, stats_h1=s1, kind=kind,
        lrt_gamma_threshold=gamma_thr, centers_h0=c0,
    )


# ---------------------------------------------------------------------------
# error rates


def _rates_at(stats_h0, stats_h1, threshold, confidence=0.95):
    fa = int(np.count_nonzero(stats_h0 > threshold))
    md = int(np.count_nonzero(stats_h1 <= threshold))
    n0, n1 = len(stats_h0), len(stats_h1)
    return ErrorRates(
        p_fa=fa / n0, p_md=md / n1,
        ci_fa=wilson_interval(fa, n0, confidence),
        ci_md=wilson_interval(md, n1, confidence),
        trials_h0=n0, trials_h1=n1, threshold=float(threshold),
    )


def estimate_error_rates(scenario, cfg, threshold, trials, seed, workers=1,
                         confidence=0.95):
    """P_FA and P_MD of `decide(stat, threshold)` over fresh trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ss = collect_statistics(scenario, cfg, trials, seed, workers)
    return _rates_at(ss.stats_h0, ss.stats_h1, threshold, confidence)


def sweep_thresholds(scenario, cfg, grid, trials, seed, workers=1, confidence=0.95):
    """ErrorRates per threshold on one shared sample set.

    With a common sample set the false-alarm counts are exactly nonincreasing
    and the miss counts exactly nondecreasing along the sorted grid.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("threshold grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("threshold grid must be sorted ascending")
    ss = collect_statistics(scenario, cfg, trials, seed, workers)
    s0 = np.sort(ss.stats_h0)
    s1 = np.sort(ss.stats_h1)
    n0, n1 = len(s0), len(s1)
    out = []
    for thr in grid:
        fa = n0 - int(np.searchsorted(s0, thr, side="right"))
        md = int(np.searchsorted(s1, thr, side="right"))
        out.append(ErrorRates(
            p_fa=fa / n0, p_md=md / n1,
            ci_fa=wilson_interval(fa, n0, confidence),
            ci_md=wilson_interval(md, n1, confidence),
            trials_h0=n0, trials_h1=n1, threshold=float(thr),
        ))
    return out


def _best_threshold(s0, s1, extra_candidates):
    cands = np.unique(np.concatenate([s0, s1, np.asarray(extra_candidates, dtype=float)]))
    s0s, s1s = np.sort(s0), np.sort(s1)
    n0, n1 = len(s0s), len(s1s)
    fa = n0 - np.searchsorted(s0s, cands, side="right")
    md = np.searchsorted(s1s, cands, side="right")
    sums = fa / n0 + md / n1
    best = int(np.argmin(sums))
    return float(cands[best]), float(sums[best]), len(cands)


def willie_min_error(scenario, cfg, trials, seed, workers=1, confidence=0.95):
    """Search every empirical threshold (plus the LRT's own gamma point) for
    the minimum P_FA + P_MD, then re-estimate at the winner on held-out
    trials to remove the selection bias of the empirical minimum.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ss = collect_statistics(scenario, cfg, trials, seed, workers)
    n_search = trials - trials // 2
    s0_search, s0_hold = ss.stats_h0[:n_search], ss.stats_h0[n_search:]
    s1_search, s1_hold = ss.stats_h1[:n_search], ss.stats_h1[n_search:]
    extra = [-math.inf]
    if math.isfinite(ss.lrt_gamma_threshold):
        extra.append(ss.lrt_gamma_threshold)
    thr, min_sum_search, n_cands = _best_threshold(s0_search, s1_search, extra)
    if len(s0_hold) == 0:  # too few trials to hold anything out
        s0_hold, s1_hold = s0_search, s1_search
    rates = _rates_at(s0_hold, s1_hold, thr, confidence)
    return MinErrorResult(
        threshold=thr, min_sum_search=min_sum_search, rates=rates,
        lrt_gamma_threshold=ss.lrt_gamma_threshold, candidates=n_cands,
    )


def covertness_curve(scenario, epsilon, n_list, trials, seed, workers=1,
                     confidence=0.95, P_f=None):
    """Best-threshold error sums across slot lengths at one constant covert
    power chosen by the selection recipe for this scenario (or forced with
    the P_f override)."""
    n_list = [int(n) for n in n_list]
    if n_list != sorted(n_list):
        raise ValueError("n list must be sorted ascending")
    if P_f is None:
        P_f = model.select_covert_params(scenario, epsilon).P_f
    base = model.with_updates(scenario, P_f=P_f)
    rows = []
    for n in n_list:
        sc = model.with_updates(base, n=n)
        cfg = detectors.config_for_scenario(sc)
        res = willie_min_error(sc, cfg, trials, seed, workers, confidence)
        lo, hi = res.rates.ci_sum
        rows.append(CovertnessRow(
            n=n, threshold=res.threshold, min_sum=res.rates.sum,
            ci_lo=lo, ci_hi=hi,
        ))
    return CovertnessCurve(epsilon=epsilon, scenario=base.to_dict(), rows=tuple(rows))


def concentration_sample_size(scenario, delta, epsilon, n_grid, trials, seed,
                              workers=1):
    """Smallest slot length in the grid where the average power per sample
    concentrates within delta of its conditional center on at least a
    1 - epsilon/2 fraction of H0 trials; None when no grid entry qualifies.
    """
    for n in sorted(int(v) for v in n_grid):
        sc = model.with_updates(scenario, n=n)
        z, _, _, centers = _gather(sc, synth.H0, trials, seed, 0, False, workers)
        freq = float(np.mean(np.abs(z / n - centers) < delta))
        if freq >= 1.0 - epsilon / 2.0:
            return n
    return None


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    """CSV with full-precision floats (repr round-trips exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_roc_csv(path, rates):
    write_csv(
        path,
        ["threshold", "p_fa", "p_md", "ci_fa_lo", "ci_fa_hi", "ci_md_lo", "ci_md_hi"],
        [
            (r.threshold, r.p_fa, r.p_md, r.ci_fa[0], r.ci_fa[1], r.ci_md[0], r.ci_md[1])
            for r in rates
        ],
    )


def write_curve_csv(path, curve):
    write_csv(
        path,
        ["n", "threshold", "min_sum", "ci_lo", "ci_hi"],
        [(r.n, r.threshold, r.min_sum, r.ci_lo, r.ci_hi) for r in curve.rows],
    )
