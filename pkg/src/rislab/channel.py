"""Channel geometry, fading draws, reflection states and mutual information.

The model is a two-hop Rayleigh channel: an N-antenna transmitter, a
reflecting surface with Q elements, and an L-antenna receiver.  Every
slot is split into K sub-slots; a scheme assigns each sub-slot a
diagonal reflection matrix, and the slot mutual information is the
average of the per-sub-slot log-det terms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedConfigurationError

#: Largest supported element count; desk-scale experiments need no more,
#: and dense matrices stay cheap below it.
ELEMENT_CAP = 1024

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class ChannelDims:
    """The (N, Q, L) geometry: Tx antennas, RIS elements, Rx antennas."""

    n: int
    q: int
    l: int

    def __post_init__(self):
        for name, v in (("n", self.n), ("q", self.q), ("l", self.l)):
            if int(v) != v or v < 1:
                raise DomainError(f"ChannelDims: {name} must be a positive integer, got {v}")
        if self.q > ELEMENT_CAP:
            raise DomainError(f"ChannelDims: q={self.q} exceeds the element cap {ELEMENT_CAP}")

    @property
    def sorted_triple(self) -> tuple[int, int, int]:
        """(n0, n1, n2) with n0 <= n1 <= n2."""
        return tuple(sorted((self.n, self.q, self.l)))

    @property
    def nu(self) -> tuple[int, int, int]:
        """nu_i = n_i - n0 for the sorted triple; nu_0 is always 0."""
        n0, n1, n2 = self.sorted_triple
        return (0, n1 - n0, n2 - n0)

    @property
    def is_siso(self) -> bool:
        return self.n == 1 and self.l == 1


@dataclass(frozen=True)
class PartitionPlan:
    """A K-way split of the Q elements into equal disjoint sub-surfaces.

    ``assignment`` maps element index (0-based position) to sub-surface
    index in 1..K.
    """

    k_parts: int
    m: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        if self.k_parts < 1 or self.m < 1:
            raise DomainError("PartitionPlan: k_parts and m must be >= 1")
        q = self.k_parts * self.m
        if len(self.assignment) != q:
            raise DomainError(
                f"PartitionPlan: assignment length {len(self.assignment)} != k_parts*m = {q}"
            )
        counts = [0] * (self.k_parts + 1)
        for a in self.assignment:
            if not 1 <= a <= self.k_parts:
                raise DomainError(f"PartitionPlan: sub-surface index {a} out of range 1..{self.k_parts}")
            counts[a] += 1
        if any(c != self.m for c in counts[1:]):
            raise DomainError("PartitionPlan: every sub-surface must receive exactly m elements")

    @classmethod
    def contiguous(cls, q: int, k_parts: int) -> "PartitionPlan":
        """Default block partition: elements (k-1)m .. km-1 go to sub-surface k."""
        if q % k_parts != 0:
            raise DomainError(f"PartitionPlan: k_parts={k_parts} does not divide q={q}")
        m = q // k_parts
        assignment = tuple(1 + i // m for i in range(q))
        return cls(k_parts=k_parts, m=m, assignment=assignment)

    @property
    def q(self) -> int:
        return self.k_parts * self.m

    def elements(self, k: int) -> np.ndarray:
        """0-based element indices of sub-surface k (1-based k)."""
        if not 1 <= k <= self.k_parts:
            raise DomainError(f"PartitionPlan: sub-slot {k} out of range 1..{self.k_parts}")
        return np.flatnonzero(np.asarray(self.assignment) == k)


class Scheme(str, enum.Enum):
    PR = "PR"  # pure reflect: single partition, fixed reflection
    AR = "AR"  # activate-reflect: only S_k is ON during sub-slot k
    FR = "FR"  # flip-reflect: S_k gets a pi phase flip during sub-slot k
    PB = "PB"  # passive beamforming: phases aligned to the cascaded channel


@dataclass(frozen=True)
class SchemeConfig:
    """A scheme identity plus its partition plan (K = 1 for PR and PB)."""

    kind: Scheme
    plan: PartitionPlan

    def __post_init__(self):
        if self.kind in (Scheme.PR, Scheme.PB) and self.plan.k_parts != 1:
            raise DomainError(f"SchemeConfig: {self.kind.value} requires a single partition")

    @classmethod
    def pr(cls, q: int) -> "SchemeConfig":
        return cls(Scheme.PR, PartitionPlan.contiguous(q, 1))

    @classmethod
    def pb(cls, q: int) -> "SchemeConfig":
        return cls(Scheme.PB, PartitionPlan.contiguous(q, 1))

    @classmethod
    def ar(cls, q: int, k_parts: int) -> "SchemeConfig":
        return cls(Scheme.AR, PartitionPlan.contiguous(q, k_parts))

    @classmethod
    def fr(cls, q: int, k_parts: int) -> "SchemeConfig":
        return cls(Scheme.FR, PartitionPlan.contiguous(q, k_parts))

    @property
    def k_parts(self) -> int:
        return self.plan.k_parts

    @property
    def q(self) -> int:
        return self.plan.q


@dataclass(frozen=True)
class ChannelRealization:
    """One fading draw: h_mat is Q x N (Tx->RIS), g_mat is L x Q (RIS->Rx)."""

    h_mat: np.ndarray
    g_mat: np.ndarray

    def __post_init__(self):
        h, g = self.h_mat, self.g_mat
        if h.ndim != 2 or g.ndim != 2 or h.shape[0] != g.shape[1]:
            raise DomainError(f"ChannelRealization: inconsistent shapes {h.shape}, {g.shape}")
        if not (np.isfinite(h).all() and np.isfinite(g).all()):
            raise DomainError("ChannelRealization: non-finite entries")
        h.flags.writeable = False
        g.flags.writeable = False

    @property
    def dims(self) -> ChannelDims:
        return ChannelDims(n=self.h_mat.shape[1], q=self.h_mat.shape[0], l=self.g_mat.shape[0])


@dataclass(frozen=True)
class ReflectionState:
    """Per-element reflection amplitudes in [0, 1] and phases in [0, 2*pi)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        a, p = self.amplitudes, self.phases
        if a.shape != p.shape or a.ndim != 1:
            raise DomainError("ReflectionState: amplitudes and phases must be matching vectors")
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise DomainError("ReflectionState: amplitudes must lie in [0, 1]")
        if np.any(p < 0.0) or np.any(p >= 2.0 * np.pi):
            raise DomainError("ReflectionState: phases must lie in [0, 2*pi)")
        a.flags.writeable = False
        p.flags.writeable = False

    @property
    def phasors(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)


def complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian draws.

    Draw layout is fixed (one (…, 2) standard-normal call, real part
    first) so that identical stream state yields bit-identical output.
    """
    z = rng.standard_normal(size=(*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * _SQRT_HALF


def draw_channel(dims: ChannelDims, stream: np.random.Generator) -> ChannelRealization:
    """One independent CN(0,1) fading draw of both hops from ``stream``."""
    h = complex_normal(stream, (dims.q, dims.n))
    g = complex_normal(stream, (dims.l, dims.q))
    return ChannelRealization(h_mat=h, g_mat=g)


def fr_flip_mask(plan: PartitionPlan, sub_slot: int) -> np.ndarray:
    """Boolean mask of elements phase-flipped by pi at the given sub-slot.

    With two partitions the first sub-slot keeps every element at the
    default phase; in every other case sub-surface S_k is flipped.
    """
    k_parts = plan.k_parts
    if k_parts == 2 and sub_slot == 1:
        return np.zeros(plan.q, dtype=bool)
    mask = np.zeros(plan.q, dtype=bool)
    mask[plan.elements(sub_slot)] = True
    return mask


def fr_sign_matrix(plan: PartitionPlan) -> np.ndarray:
    """(K, K) matrix of block signs: row k gives the sign of each sub-surface
    block sum in the sub-slot-k cascaded channel."""
    k = plan.k_parts
    signs = np.ones((k, k))
    if k == 2:
        signs[1, 1] = -1.0
    elif k > 2:
        np.fill_diagonal(signs, -1.0)
    return signs


def build_reflection(
    config: SchemeConfig, sub_slot: int, realization: ChannelRealization | None = None
) -> ReflectionState:
    """Reflection state of the surface during one sub-slot.

    AR turns sub-surface S_k fully on and everything else off; FR flips
    S_k by pi (except the first sub-slot when K = 2); PR keeps a fixed
    all-on zero-phase state, which is statistically equivalent to random
    rotations; PB aligns each element against the cascaded SISO channel
    phase and therefore needs the realization.
    """
    plan = config.plan
    if not 1 <= sub_slot <= plan.k_parts:
        raise DomainError(f"build_reflection: sub_slot {sub_slot} out of range 1..{plan.k_parts}")
    q = plan.q
    if config.kind is Scheme.AR:
        amplitudes = np.zeros(q)
        amplitudes[plan.elements(sub_slot)] = 1.0
        return ReflectionState(amplitudes=amplitudes, phases=np.zeros(q))
    if config.kind is Scheme.FR:
        phases = np.where(fr_flip_mask(plan, sub_slot), np.pi, 0.0)
        return ReflectionState(amplitudes=np.ones(q), phases=phases)
    if config.kind is Scheme.PR:
        return ReflectionState(amplitudes=np.ones(q), phases=np.zeros(q))
    if config.kind is Scheme.PB:
        if realization is None:
            raise DomainError("build_reflection: PB needs the channel realization")
        dims = realization.dims
        if not dims.is_siso:
            raise UnsupportedConfigurationError(
                "build_reflection: PB is defined for the SISO channel only"
            )
        cascade = realization.h_mat[:, 0] * realization.g_mat[0, :]
        phases = np.mod(-np.angle(cascade), 2.0 * np.pi)
        return ReflectionState(amplitudes=np.ones(q), phases=phases)
    raise UnsupportedConfigurationError(f"build_reflection: unknown scheme {config.kind}")


def effective_channel(realization: ChannelRealization, state: ReflectionState) -> np.ndarray:
    """End-to-end L x N matrix G @ diag(a_i e^{j phi_i}) @ H of one sub-slot."""
    if state.amplitudes.shape[0] != realization.h_mat.shape[0]:
        raise DomainError(
            f"effective_channel: {state.amplitudes.shape[0]} reflection coefficients for "
            f"{realization.h_mat.shape[0]} elements"
        )
    return (realization.g_mat * state.phasors[np.newaxis, :]) @ realization.h_mat


def gram_eigenvalues(eff: np.ndarray) -> np.ndarray:
    """Eigenvalues of the smaller-side Gram matrix of ``eff`` (ascending)."""
    l, n = eff.shape
    a = eff @ eff.conj().T if l <= n else eff.conj().T @ eff
    lam = np.linalg.eigvalsh(a)
    return np.clip(lam.real, 0.0, None)


def mutual_information_subslot(eff: np.ndarray, rho: float, n: int) -> float:
    """log2 det(I + (rho/n) * eff eff^H) in bits per channel use.

    Evaluated from the Hermitian eigenvalues of the smaller-side Gram
    matrix, which stays well conditioned at high SNR.
    """
    if rho < 0.0:
        raise DomainError(f"mutual_information_subslot: rho must be >= 0, got {rho}")
    if not np.isfinite(eff).all():
        raise DomainError("mutual_information_subslot: non-finite channel entries")
    lam = gram_eigenvalues(eff)
    return float(np.sum(np.log1p((rho / n) * lam)) / math.log(2.0))


def slot_mutual_information(
    realization: ChannelRealization, config: SchemeConfig, rho: float
) -> float:
    """Slot mutual information: the K-sub-slot average of the log-det terms."""
    dims = realization.dims
    k_parts = config.k_parts
    total = 0.0
    for k in range(1, k_parts + 1):
        state = build_reflection(config, k, realization)
        eff = effective_channel(realization, state)
        total += mutual_information_subslot(eff, rho, dims.n)
    return total / k_parts
