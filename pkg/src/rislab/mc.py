"""Reproducible parallel Monte Carlo estimators.

Randomness is counter-based: block b of ``block_size`` trials draws from
Philox keyed by the master seed with its 256-bit counter set to
b * 2**128, so every block is an independent substream whose content
depends only on (master_seed, block index).  Workers process disjoint
blocks and the reductions are order-independent, which makes every
estimate a pure function of (master_seed, trial count) regardless of
worker count or scheduling.

Two sampling paths exist per configuration: a generic matrix path that
draws the full (H, G) pair, and, for single-antenna geometries and pure
or activation schemes, fast paths built on exact distributional
identities (cascade block sums are conditionally Gaussian given one
hop, so a block sum equals sqrt(Gamma(m, 1)) * CN(0, 1); the two-hop
product with one hop conditioned is a Wishart factor times an i.i.d.
Gaussian matrix).  The fast paths are validated against the matrix path
in the test suite.  The draw layout of each path is fixed and is part
of the estimator's identity.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelDims, PartitionPlan, Scheme, SchemeConfig, complex_normal, fr_sign_matrix
from .errors import DomainError, InsufficientDataError, UnsupportedConfigurationError

_Z95 = 1.959963984540054
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SnrGrid:
    """Linear SNR evaluation points and the target rate in bits/use."""

    rho_values: tuple[float, ...]
    rate_r: float

    def __post_init__(self):
        if len(self.rho_values) == 0:
            raise DomainError("SnrGrid: needs at least one SNR point")
        if any(r <= 0.0 for r in self.rho_values):
            raise DomainError("SnrGrid: rho values must be strictly positive")
        if any(b <= a for a, b in zip(self.rho_values, self.rho_values[1:])):
            raise DomainError("SnrGrid: rho values must be strictly increasing")
        if self.rate_r < 0.0:
            raise DomainError("SnrGrid: rate_r must be >= 0")

    @classmethod
    def from_db(cls, db_values, rate_r: float) -> "SnrGrid":
        return cls(tuple(10.0 ** (db / 10.0) for db in db_values), rate_r)


@dataclass(frozen=True)
class RngSpec:
    """Master seed plus the counter-based substream derivation rule."""

    master_seed: int
    block_size: int = 1 << 14

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise DomainError("RngSpec: master_seed must fit in 64 bits")
        if self.block_size < 1:
            raise DomainError("RngSpec: block_size must be >= 1")

    def generator(self, block_index: int) -> np.random.Generator:
        """Independent substream for one trial block."""
        bg = np.random.Philox(key=self.master_seed, counter=block_index << 128)
        return np.random.Generator(bg)


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage probability with a 95% Wilson interval."""

    rho: float
    p_hat: float
    trials: int
    ci_low: float
    ci_high: float
    events: int
    seed: RngSpec

    def __post_init__(self):
        if not 0.0 <= self.ci_low <= self.p_hat <= self.ci_high <= 1.0:
            raise DomainError("OutageEstimate: interval must satisfy 0 <= low <= p <= high <= 1")


@dataclass(frozen=True)
class CorrelationEstimate:
    coeff: float
    std_error: float
    trials: int
    sub_slots: tuple[int, int]
    seed: RngSpec


@dataclass(frozen=True)
class SlopePoint:
    snr_db: float
    rho: float
    p_hat: float
    events: int
    trials: int
    valid: bool


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares diversity slope of -log10(p) against log10(rho)."""

    slope: float
    intercept: float
    residual_rms: float
    points: tuple[SlopePoint, ...]
    seed: RngSpec


def wilson_interval(events: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% (by default) Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DomainError("wilson_interval: trials must be >= 1")
    p = events / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    low = 0.0 if events == 0 else max(0.0, center - half)
    high = 1.0 if events == trials else min(1.0, center + half)
    return low, high


# ---------------------------------------------------------------------------
# Block kernels
# ---------------------------------------------------------------------------


def _siso_gain_block(
    kind: Scheme, plan: PartitionPlan, gen: np.random.Generator, nt: int
) -> np.ndarray:
    """Per-trial sub-slot gains W_k (nt, K) for single-antenna geometries.

    Uses the conditional-Gaussian identity: a sub-surface cascade sum
    over m elements equals sqrt(X) * Z with X ~ Gamma(m, 1), Z ~ CN(0,1).
    """
    q, k, m = plan.q, plan.k_parts, plan.m
    if kind is Scheme.PR:
        x = gen.gamma(float(q), size=nt)
        z = gen.standard_normal(size=(nt, 2))
        return (x * 0.5 * (z[:, 0] ** 2 + z[:, 1] ** 2))[:, None]
    if kind is Scheme.AR:
        x = gen.gamma(float(m), size=(nt, k))
        z = gen.standard_normal(size=(nt, k, 2))
        return x * 0.5 * (z[..., 0] ** 2 + z[..., 1] ** 2)
    if kind is Scheme.FR:
        x = gen.gamma(float(m), size=(nt, k))
        z = gen.standard_normal(size=(nt, k, 2))
        block_sums = np.sqrt(0.5 * x) * (z[..., 0] + 1j * z[..., 1])
        w = block_sums @ fr_sign_matrix(plan).T
        return w.real**2 + w.imag**2
    if kind is Scheme.PB:
        e = gen.standard_exponential(size=(nt, q, 2))
        return (np.sqrt(e[..., 0] * e[..., 1]).sum(axis=1) ** 2)[:, None]
    raise UnsupportedConfigurationError(f"_siso_gain_block: unsupported scheme {kind}")


def _wishart_factor(gen: np.random.Generator, nt: int, dim: int, dof: int) -> np.ndarray:
    """Lower-triangular Bartlett factor L of a complex Wishart(dim, dof).

    L L^H ~ W_dim(dof, I): squared diagonals are Gamma(dof - i), strict
    lower entries are CN(0, 1).
    """
    l = np.zeros((nt, dim, dim), dtype=complex)
    for i in range(dim):
        l[:, i, i] = np.sqrt(gen.gamma(float(dof - i), size=nt))
    if dim > 1:
        below = complex_normal(gen, (nt, dim * (dim - 1) // 2))
        pos = 0
        for i in range(1, dim):
            l[:, i, :i] = below[:, pos : pos + i]
            pos += i
    return l


def _gram_eigs_batch(eff: np.ndarray) -> np.ndarray:
    """Eigenvalues (nt, s) of the smaller-side Gram matrix of (nt, l, n) blocks."""
    nt, l, n = eff.shape
    a = eff @ eff.conj().transpose(0, 2, 1) if l <= n else eff.conj().transpose(0, 2, 1) @ eff
    s = min(l, n)
    if s == 1:
        return a[:, 0, 0].real[:, None]
    if s == 2:
        tr_half = 0.5 * (a[:, 0, 0].real + a[:, 1, 1].real)
        det_disc = np.sqrt(
            np.maximum(0.0, (0.5 * (a[:, 0, 0].real - a[:, 1, 1].real)) ** 2 + np.abs(a[:, 0, 1]) ** 2)
        )
        lam = np.stack([tr_half - det_disc, tr_half + det_disc], axis=1)
        return np.clip(lam, 0.0, None)
    return np.clip(np.linalg.eigvalsh(a), 0.0, None)


def _product_wishart_eigs(
    gen: np.random.Generator, nt: int, n: int, l: int, dof: int
) -> np.ndarray:
    """Gram eigenvalues of one two-hop product draw via the Wishart identity.

    Conditioned on the first hop, the product has i.i.d. Gaussian rows
    with covariance H^H H, so it equals Z L^H with L the Bartlett factor.
    Requires dof >= min(n, l).
    """
    dim = min(n, l)
    other = max(n, l)
    lfac = _wishart_factor(gen, nt, dim, dof)
    z = complex_normal(gen, (nt, other, dim))
    return _gram_eigs_batch(z @ lfac.conj().transpose(0, 2, 1))


def _matrix_eig_block(
    dims: ChannelDims, kind: Scheme, plan: PartitionPlan, gen: np.random.Generator, nt: int
) -> np.ndarray:
    """(nt, K, n0-side) sub-slot Gram eigenvalues from full matrix draws."""
    h = complex_normal(gen, (nt, dims.q, dims.n))
    g = complex_normal(gen, (nt, dims.l, dims.q))
    k_parts = plan.k_parts
    out = None
    for k in range(1, k_parts + 1):
        if kind in (Scheme.PR, Scheme.PB) or (kind is Scheme.AR and k_parts == 1):
            if kind is Scheme.PB:
                cascade = h[:, :, 0] * g[:, 0, :]
                eigs = (np.abs(cascade).sum(axis=1) ** 2)[:, None]
            else:
                eigs = _gram_eigs_batch(g @ h)
        elif kind is Scheme.AR:
            idx = plan.elements(k)
            eigs = _gram_eigs_batch(g[:, :, idx] @ h[:, idx, :])
        elif kind is Scheme.FR:
            signs = np.ones(dims.q)
            if not (k_parts == 2 and k == 1):
                signs[plan.elements(k)] = -1.0
            eigs = _gram_eigs_batch((g * signs[None, None, :]) @ h)
        else:
            raise UnsupportedConfigurationError(f"_matrix_eig_block: unsupported scheme {kind}")
        if out is None:
            out = np.empty((nt, k_parts, eigs.shape[1]))
        out[:, k - 1, :] = eigs
    return out


def _fast_mimo_supported(dims: ChannelDims, kind: Scheme, plan: PartitionPlan) -> bool:
    m = plan.m if kind is Scheme.AR else dims.q
    return kind in (Scheme.PR, Scheme.AR) and m >= min(dims.n, dims.l)


def _eig_block(
    dims: ChannelDims,
    kind: Scheme,
    plan: PartitionPlan,
    gen: np.random.Generator,
    nt: int,
    force_generic: bool,
) -> np.ndarray:
    """Sub-slot spectra (nt, K, s): gains for SISO, Gram eigenvalues otherwise."""
    if dims.is_siso and not force_generic:
        w = _siso_gain_block(kind, plan, gen, nt)
        return w[:, :, None]
    if not dims.is_siso and kind is Scheme.PB:
        raise UnsupportedConfigurationError("Monte Carlo: PB is defined for the SISO channel only")
    if not force_generic and _fast_mimo_supported(dims, kind, plan):
        k_parts = plan.k_parts
        dof = plan.m if kind is Scheme.AR else dims.q
        out = None
        for k in range(k_parts):
            eigs = _product_wishart_eigs(gen, nt, dims.n, dims.l, dof)
            if out is None:
                out = np.empty((nt, k_parts, eigs.shape[1]))
            out[:, k, :] = eigs
        return out
    return _matrix_eig_block(dims, kind, plan, gen, nt)


def _outage_counts(
    eigs: np.ndarray, rho_values: tuple[float, ...], rate_r: float, n_tx: int
) -> np.ndarray:
    """Outage event counts per SNR for one block of sub-slot spectra.

    The event (1/K) sum_k I_k < R is evaluated in product form:
    prod_{k,i} (1 + rho*lam/N) < 2**(R*K).
    """
    nt, k_parts, _ = eigs.shape
    thresh = 2.0 ** (rate_r * k_parts)
    counts = np.empty(len(rho_values), dtype=np.int64)
    flat = eigs.reshape(nt, -1)
    for j, rho in enumerate(rho_values):
        prod = np.prod(1.0 + (rho / n_tx) * flat, axis=1)
        counts[j] = int(np.count_nonzero(prod < thresh))
    return counts


def _block_bounds(trials: int, block_size: int):
    n_blocks = (trials + block_size - 1) // block_size
    for b in range(n_blocks):
        yield b, min(block_size, trials - b * block_size)


def _outage_block_job(args) -> np.ndarray:
    (n, q, l, kind_value, assignment, rho_values, rate_r, seed, block_size, b, nt, force_generic) = args
    dims = ChannelDims(n=n, q=q, l=l)
    plan = PartitionPlan(
        k_parts=max(assignment), m=len(assignment) // max(assignment), assignment=assignment
    )
    gen = RngSpec(seed, block_size).generator(b)
    eigs = _eig_block(dims, Scheme(kind_value), plan, gen, nt, force_generic)
    return _outage_counts(eigs, rho_values, rate_r, n)


def estimate_outage(
    dims: ChannelDims,
    config: SchemeConfig,
    grid: SnrGrid,
    trials: int,
    rng: RngSpec,
    workers: int = 1,
    force_generic: bool = False,
) -> list[OutageEstimate]:
    """Monte Carlo outage estimates, one per SNR point, sharing the draws
    across the grid (slot mutual information is monotone in SNR, so shared
    draws keep the estimates exactly monotone)."""
    if trials < 1:
        raise DomainError(f"estimate_outage: trials must be >= 1, got {trials}")
    if config.q != dims.q:
        raise DomainError(f"estimate_outage: config is for q={config.q}, dims has q={dims.q}")
    if config.kind is Scheme.PB and not dims.is_siso:
        raise UnsupportedConfigurationError("estimate_outage: PB is defined for SISO only")
    jobs = [
        (
            dims.n,
            dims.q,
            dims.l,
            config.kind.value,
            config.plan.assignment,
            grid.rho_values,
            grid.rate_r,
            rng.master_seed,
            rng.block_size,
            b,
            nt,
            force_generic,
        )
        for b, nt in _block_bounds(trials, rng.block_size)
    ]
    counts = np.zeros(len(grid.rho_values), dtype=np.int64)
    if workers <= 1:
        for job in jobs:
            counts += _outage_block_job(job)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_outage_block_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
                counts += res
    out = []
    for rho, ev in zip(grid.rho_values, counts.tolist()):
        p = ev / trials
        lo, hi = wilson_interval(ev, trials)
        out.append(
            OutageEstimate(
                rho=rho,
                p_hat=p,
                trials=trials,
                ci_low=min(lo, p),
                ci_high=max(hi, p),
                events=ev,
                seed=rng,
            )
        )
    return out


def _correlation_block_job(args):
    (q, assignment, k_slot, l_slot, seed, block_size, b, nt) = args
    plan = PartitionPlan(
        k_parts=max(assignment), m=len(assignment) // max(assignment), assignment=assignment
    )
    gen = RngSpec(seed, block_size).generator(b)
    w = _siso_gain_block(Scheme.FR, plan, gen, nt)
    wk = w[:, k_slot - 1]
    wl = w[:, l_slot - 1]
    return b, np.array(
        [wk.sum(), wl.sum(), (wk * wk).sum(), (wl * wl).sum(), (wk * wl).sum(), float(nt)]
    )


def estimate_correlation(
    dims: ChannelDims,
    plan: PartitionPlan,
    sub_slots: tuple[int, int],
    trials: int,
    rng: RngSpec,
    workers: int = 1,
) -> CorrelationEstimate:
    """Sample Pearson correlation of flip-scheme gains W_k, W_l (k != l)."""
    if not dims.is_siso:
        raise UnsupportedConfigurationError("estimate_correlation: defined for the SISO channel")
    if dims.q != plan.q:
        raise DomainError("estimate_correlation: plan does not match dims")
    k_slot, l_slot = sub_slots
    if k_slot == l_slot:
        raise DomainError("estimate_correlation: sub-slots must differ")
    for s in sub_slots:
        if not 1 <= s <= plan.k_parts:
            raise DomainError(f"estimate_correlation: sub-slot {s} out of range 1..{plan.k_parts}")
    if trials < 2:
        raise DomainError("estimate_correlation: needs at least two trials")
    jobs = [
        (dims.q, plan.assignment, k_slot, l_slot, rng.master_seed, rng.block_size, b, nt)
        for b, nt in _block_bounds(trials, rng.block_size)
    ]
    partials = {}
    if workers <= 1:
        for job in jobs:
            b, acc = _correlation_block_job(job)
            partials[b] = acc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for b, acc in pool.map(
                _correlation_block_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))
            ):
                partials[b] = acc
    # Fixed-order reduction: float sums must not depend on completion order.
    total = np.zeros(6)
    for b in sorted(partials):
        total += partials[b]
    sk, sl, skk, sll, skl, n = total
    mk, ml = sk / n, sl / n
    vk = skk / n - mk * mk
    vl = sll / n - ml * ml
    cov = skl / n - mk * ml
    r = cov / math.sqrt(vk * vl)
    return CorrelationEstimate(
        coeff=float(r),
        std_error=(1.0 - r * r) / math.sqrt(n),
        trials=trials,
        sub_slots=(k_slot, l_slot),
        seed=rng,
    )


def estimate_dmt_slope(
    dims: ChannelDims,
    config: SchemeConfig,
    rate_r: float,
    window_db,
    trials,
    rng: RngSpec,
    workers: int = 1,
    force_generic: bool = False,
) -> SlopeFit:
    """Fitted decay slope of -log10(p_hat) against log10(rho) over a window.

    ``trials`` is either one count shared by the window (a single pass
    with shared draws) or a per-point schedule.  Points with fewer than
    10 observed events fail the validity guard and are flagged out of the
    fit; fewer than three valid points is an error.
    """
    window_db = tuple(float(d) for d in window_db)
    if len(window_db) < 3:
        raise DomainError("estimate_dmt_slope: window must contain at least 3 SNR points")
    if np.ndim(trials) == 0:
        grid = SnrGrid.from_db(window_db, rate_r)
        estimates = estimate_outage(dims, config, grid, int(trials), rng, workers, force_generic)
    else:
        schedule = [int(t) for t in trials]
        if len(schedule) != len(window_db):
            raise DomainError(
                f"estimate_dmt_slope: schedule has {len(schedule)} entries for "
                f"{len(window_db)} window points"
            )
        estimates = [
            estimate_outage(
                dims, config, SnrGrid.from_db([db], rate_r), t, rng, workers, force_generic
            )[0]
            for db, t in zip(window_db, schedule)
        ]
    points = []
    for db, est in zip(window_db, estimates):
        valid = est.p_hat > 10.0 / est.trials
        points.append(
            SlopePoint(
                snr_db=db, rho=est.rho, p_hat=est.p_hat, events=est.events, trials=est.trials, valid=valid
            )
        )
    good = [p for p in points if p.valid]
    if len(good) < 3:
        raise InsufficientDataError(
            f"estimate_dmt_slope: only {len(good)} of {len(points)} points pass the validity guard"
        )
    x = np.array([math.log10(p.rho) for p in good])
    y = np.array([-math.log10(p.p_hat) for p in good])
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(a, y, rcond=None)
    rms = math.sqrt(float(res[0]) / len(good)) if len(res) else 0.0
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=rms,
        points=tuple(points),
        seed=rng,
    )


def sample_slot_mi(
    dims: ChannelDims,
    config: SchemeConfig,
    rho: float,
    trials: int,
    rng: RngSpec,
    force_generic: bool = False,
) -> np.ndarray:
    """Per-trial slot mutual information draws (bits/use), for empirical
    characteristic functions and distribution-level cross checks."""
    if trials < 1:
        raise DomainError("sample_slot_mi: trials must be >= 1")
    out = np.empty(trials)
    pos = 0
    for b, nt in _block_bounds(trials, rng.block_size):
        gen = rng.generator(b)
        eigs = _eig_block(dims, config.kind, config.plan, gen, nt, force_generic)
        mi = np.log1p((rho / dims.n) * eigs.reshape(nt, -1)).sum(axis=1) / (
            config.k_parts * math.log(2.0)
        )
        out[pos : pos + nt] = mi
        pos += nt
    return out
