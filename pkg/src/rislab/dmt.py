"""Diversity-multiplexing tradeoff curves and asymptotic summaries.

All curves are piecewise linear and stored as their integer-point
vertex lists; linear interpolation between vertices is implied.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .channel import ChannelDims, PartitionPlan
from .errors import DomainError


@dataclass(frozen=True)
class DmtCurve:
    """Vertex list (r, d) at integer multiplexing gains 0..r_max."""

    vertices: tuple[tuple[int, int], ...]
    label: str

    def __post_init__(self):
        if not self.vertices:
            raise DomainError("DmtCurve: empty vertex list")
        rs = [r for r, _ in self.vertices]
        ds = [d for _, d in self.vertices]
        if rs != list(range(len(rs))):
            raise DomainError("DmtCurve: vertices must sit at consecutive integers from 0")
        if any(d < 0 for d in ds):
            raise DomainError("DmtCurve: diversity gains must be >= 0")
        if any(b > a for a, b in zip(ds, ds[1:])):
            raise DomainError("DmtCurve: diversity must be non-increasing in r")

    @property
    def max_r(self) -> int:
        return self.vertices[-1][0]

    def diversity(self, r: int) -> int:
        if not 0 <= r <= self.max_r:
            raise DomainError(f"DmtCurve: r={r} outside 0..{self.max_r}")
        return self.vertices[r][1]


class PartitionVerdict(str, enum.Enum):
    BOTH = "achieves both extremes"
    D_MAX_ONLY = "d_max only"
    R_MAX_ONLY = "r_max only"
    NEITHER = "neither"


@dataclass(frozen=True)
class AsymptoticSummary:
    """Cut-set extremes, SISO coding gain and the equal-partition window."""

    d_max: int
    r_max: int
    coding_gain: float | None
    condition_window: tuple[int, ...]


def _pr_diversity(triple: tuple[int, int, int], r: int) -> int:
    n0, n1, n2 = triple
    excess = max(0, n0 + n1 - n2 - r)
    return (n0 - r) * (n1 - r) - (excess * excess) // 4


def dmt_pr(dims: ChannelDims) -> DmtCurve:
    """Tradeoff of the two-hop product channel under fixed full reflection:
    d(r) = (n0-r)(n1-r) - floor(([n0+n1-n2-r]^+)^2 / 4) on the sorted triple."""
    triple = dims.sorted_triple
    vertices = tuple((r, _pr_diversity(triple, r)) for r in range(triple[0] + 1))
    return DmtCurve(vertices=vertices, label=f"PR({dims.n},{dims.q},{dims.l})")


def dmt_ar(dims: ChannelDims, plan: PartitionPlan) -> DmtCurve:
    """Activation-scheme tradeoff: K parallel (N, m, L) sub-channels give
    K times the per-sub-channel curve, up to r = min(N, m, L)."""
    if plan.q != dims.q:
        raise DomainError(f"dmt_ar: plan is for q={plan.q}, dims has q={dims.q}")
    sub = ChannelDims(n=dims.n, q=plan.m, l=dims.l)
    base = dmt_pr(sub)
    vertices = tuple((r, plan.k_parts * d) for r, d in base.vertices)
    return DmtCurve(vertices=vertices, label=f"AR({dims.n},{dims.q},{dims.l})xK{plan.k_parts}")


def dmt_fr_lower_bound(dims: ChannelDims, plan: PartitionPlan) -> DmtCurve:
    """Flip-scheme lower bound: pointwise max of the activation curve (on
    its own domain) and the full-surface curve, out to r = min(N, Q, L)."""
    ar = dmt_ar(dims, plan)
    pr = dmt_pr(dims)
    vertices = []
    for r in range(pr.max_r + 1):
        d = pr.diversity(r)
        if r <= ar.max_r:
            d = max(d, ar.diversity(r))
        vertices.append((r, d))
    return DmtCurve(
        vertices=tuple(vertices), label=f"FR-LB({dims.n},{dims.q},{dims.l})xK{plan.k_parts}"
    )


def cutset_pair_diversity(a: int, b: int, r: int) -> int:
    """Tradeoff of a single a x b Rayleigh hop at integer r (both-hop min
    bounds any reflection scheme)."""
    if r > min(a, b):
        raise DomainError(f"cutset_pair_diversity: r={r} exceeds min({a},{b})")
    return (a - r) * (b - r)


def condition_window(dims: ChannelDims) -> tuple[int, ...]:
    """Sub-surface sizes m that are divisors of Q inside
    [min(N, L), |N-L| + 1]; empty when the interval is empty."""
    lo = min(dims.n, dims.l)
    hi = abs(dims.n - dims.l) + 1
    return tuple(m for m in range(1, dims.q + 1) if dims.q % m == 0 and lo <= m <= hi)


def cutset_summary(dims: ChannelDims, rate_r: float) -> AsymptoticSummary:
    """Cut-set extremes d_max = min(N, L) * Q and r_max = min(N, Q, L), the
    SISO coding gain (2^R - 1)/Q, and the equal-partition size window."""
    coding_gain = (2.0**rate_r - 1.0) / dims.q if dims.is_siso else None
    return AsymptoticSummary(
        d_max=min(dims.n, dims.l) * dims.q,
        r_max=min(dims.n, dims.q, dims.l),
        coding_gain=coding_gain,
        condition_window=condition_window(dims),
    )


def check_partition_condition(dims: ChannelDims, m: int) -> PartitionVerdict:
    """Which cut-set extremes an equal partition of size m attains.

    m >= min(N, L) preserves the maximum multiplexing gain; m <= |N-L|+1
    makes the per-sub-channel diversity multiply up to the cut-set
    maximum.
    """
    if m < 1 or dims.q % m != 0:
        raise DomainError(f"check_partition_condition: m={m} must divide q={dims.q}")
    reaches_r = m >= min(dims.n, dims.l)
    reaches_d = m <= abs(dims.n - dims.l) + 1
    if reaches_r and reaches_d:
        return PartitionVerdict.BOTH
    if reaches_d:
        return PartitionVerdict.D_MAX_ONLY
    if reaches_r:
        return PartitionVerdict.R_MAX_ONLY
    return PartitionVerdict.NEITHER
