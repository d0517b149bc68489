"""Closed-form and quadrature-based outage expressions.

Covers the characteristic function of the mutual information of the
Rayleigh product channel (evaluated through a scaled Mellin-Barnes
assembly), the Gil-Pelaez outage inversion for partitioned schemes, the
CLT product-of-shifted-exponentials approximation, the SISO closed
form, the flip-scheme gain correlation model and its nested-quadrature
outage approximation, and the independence lower bound.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .channel import ChannelDims
from .errors import AccuracyError, DomainError, UnsupportedConfigurationError
from .specfun import loggamma_cont, marcum_q1, product_shifted_exp_cdf

_LN2 = math.log(2.0)
_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class CharFunSample:
    """One evaluation of the mutual-information characteristic function."""

    t: float
    value: complex

    def __post_init__(self):
        if abs(self.value) > 1.0 + 1e-6:
            raise AccuracyError(
                f"CharFunSample: |phi({self.t})| = {abs(self.value):.6f} exceeds 1",
                partial=self.value,
            )
        if self.t == 0.0 and self.value != 1.0:
            raise AccuracyError("CharFunSample: phi(0) must be exactly 1")


# ---------------------------------------------------------------------------
# Characteristic function (Mellin-Barnes assembly)
# ---------------------------------------------------------------------------

#: Contour offset: between the rightmost pole of Gamma(s) (s = 0) and the
#: first positive-real-part pole of the frequency gamma family (s = b1 + 1).
_CONTOUR_OFFSET = 0.5


def _charfun_window(dims: ChannelDims) -> float:
    """Half-width of the contour window; the integrand decays at least like
    exp(-pi*|y|/2) once |y| clears the smallest integer lower parameter."""
    _, nu1, _ = dims.nu
    n0 = dims.sorted_triple[0]
    return 20.0 + 2.0 * nu1 + 2.0 * n0


def _loggamma_freq_line(v: np.ndarray) -> np.ndarray:
    """loggamma(-1/2 - 1j*v) with an imaginary part continuous in v.

    Branch-free reflection: for z = -1/2 - 1j*v,
    log sin(pi z) = log(1/2) + 1j*pi - pi*v + softplus(2*pi*v),
    which is smooth in v, unlike the generic reflection path whose
    imaginary part jumps by 2*pi at v = 0.  Needed so the interpolation
    table below sees a smooth function; exp of the result is unchanged.
    """
    v = np.asarray(v, dtype=float)
    u = 2.0 * np.pi * v
    softplus = np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))
    log_sin = math.log(0.5) + 1j * np.pi - np.pi * v + softplus
    return math.log(math.pi) - log_sin - _loggamma_right_cont(1.5 + 1j * v)


def _loggamma_right_cont(z: np.ndarray) -> np.ndarray:
    from .specfun import _loggamma_right

    return _loggamma_right(np.asarray(z, dtype=complex))


class _FreqGammaTable:
    """Uniform-grid cubic spline of v -> loggamma(-1/2 - 1j*v).

    The frequency-dependent gamma factor of the line integrand only
    depends on tau + y, so one global 1-D table replaces the per-node
    complex log-gamma calls.  The table grows lazily.
    """

    step = 0.01
    margin = 4.0

    def __init__(self):
        self.hi = 0.0
        self.lo = 0.0
        self.spline = None

    def ensure(self, lo: float, hi: float):
        if self.spline is not None and lo >= self.lo and hi <= self.hi:
            return
        from scipy.interpolate import CubicSpline

        self.lo = min(lo, self.lo) - self.margin
        self.hi = max(hi, self.hi) * 1.25 + self.margin
        grid = np.arange(self.lo, self.hi + self.step, self.step)
        vals = _loggamma_freq_line(grid)
        self.spline = CubicSpline(grid, vals)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.spline(v)


_FREQ_GAMMA = _FreqGammaTable()
_CONTOUR_CACHE: dict = {}


def char_fun_batch(
    dims: ChannelDims, rho: float, t: np.ndarray, nodes_per_unit: float = 10.0
) -> np.ndarray:
    """Vectorised characteristic function of the slot mutual information
    of the (N, Q, L) channel under fixed full reflection.

    Entries of the determinant are Mellin-Barnes line integrals sharing
    one contour; each row is rescaled by the magnitude of its dominant
    gamma factors so that arbitrarily large element counts stay inside
    double precision.  phi(0) is pinned to 1 exactly.
    """
    if rho <= 0.0:
        raise DomainError(f"char_fun_batch: rho must be > 0, got {rho}")
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape, dtype=complex)
    pos = t > 0.0
    neg = t < 0.0
    out[~(pos | neg)] = 1.0
    if np.any(pos):
        out[pos] = _char_fun_positive(dims, rho, t[pos], nodes_per_unit)
    if np.any(neg):
        out[neg] = np.conj(_char_fun_positive(dims, rho, -t[neg], nodes_per_unit))
    return out


def _contour_constants(dims: ChannelDims, nodes_per_unit: float):
    """Cached t-independent contour quantities for one geometry."""
    key = (dims.sorted_triple, nodes_per_unit)
    hit = _CONTOUR_CACHE.get(key)
    if hit is not None:
        return hit
    n0, _, _ = dims.sorted_triple
    _, nu1, nu2 = dims.nu
    c = _CONTOUR_OFFSET
    w = _charfun_window(dims)
    nodes = int(2 * w * nodes_per_unit) | 1
    y = np.linspace(-w, w, nodes)
    h = y[1] - y[0]
    s = c + 1j * y

    lg_s = loggamma_cont(s)
    b2 = nu2 + np.arange(1, n0 + 1)  # row parameter
    b3 = nu1 + np.arange(1, n0 + 1)[:, None] + np.arange(1, n0 + 1)[None, :] - 1
    beta = np.array(
        [
            float(np.real(loggamma_cont(b2[i] - c)) + np.real(loggamma_cont(nu1 + (i + 1) - c)))
            for i in range(n0)
        ]
    )
    # C[e, node] for flattened entries e = i*n0 + j.
    cmat = np.empty((n0 * n0, nodes), dtype=complex)
    for i in range(n0):
        lg_b2 = loggamma_cont(b2[i] - s)
        for j in range(n0):
            cmat[i * n0 + j] = np.exp(lg_b2 + loggamma_cont(b3[i, j] - s) - beta[i])
    log_pref = -sum(
        math.lgamma(z) + math.lgamma(z + nu1) + math.lgamma(z + nu2) for z in range(1, n0 + 1)
    )
    norm = math.exp(log_pref + float(np.sum(beta)))
    out = (y, h, s, lg_s, b2, b3, beta, cmat, norm)
    _CONTOUR_CACHE[key] = out
    return out


def _char_fun_positive(
    dims: ChannelDims, rho: float, t: np.ndarray, nodes_per_unit: float
) -> np.ndarray:
    n0, _, _ = dims.sorted_triple
    x = dims.n / rho
    log_x = math.log(x)
    y, h, s, lg_s_base, b2, b3, beta, cmat, norm = _contour_constants(dims, nodes_per_unit)
    lg_s = lg_s_base + s * log_x
    cmat_t = np.ascontiguousarray(cmat.T)

    tau = t / _LN2
    _FREQ_GAMMA.ensure(float(tau.min()) + float(y[0]), float(tau.max()) + float(y[-1]))

    out = np.empty(t.shape, dtype=complex)
    # Chunk over t to bound the (t, node) workspaces.
    chunk = max(1, int(4.0e6 / y.size))
    for lo in range(0, t.size, chunk):
        hi = min(lo + chunk, t.size)
        tauc = tau[lo:hi, None]
        b1c = -1j * tauc
        lg_b1 = loggamma_cont(b1c[:, 0])[:, None]
        # loggamma(b1 - s) = loggamma(-offset - 1j*(tau + y)): one table lookup.
        lg_freq = _FREQ_GAMMA(tauc + y[None, :])
        amat = np.exp(lg_freq - lg_b1 + lg_s[None, :]) * (h / (2.0 * math.pi))
        gline = amat @ cmat_t  # (nt, n0*n0)
        # Analytic restoration of the Gamma(b1 - s) pole at s = b1, which a
        # vertical line inside (0, 1) cannot keep on its right.  The 1/Gamma(b1)
        # entry normalisation cancels against the residue's Gamma(b1).
        b2r = np.asarray(b2, dtype=float)[None, :, None]
        b3r = np.asarray(b3, dtype=float)[None, :, :]
        res = np.exp(
            loggamma_cont(b2r - b1c[:, :, None])
            + loggamma_cont(b3r - b1c[:, :, None])
            + b1c[:, :, None] * log_x
            - beta[None, :, None]
        )
        m = gline.reshape(-1, n0, n0) + res
        out[lo:hi] = _det_batched(m) * norm
    return out


def _det_batched(m: np.ndarray) -> np.ndarray:
    n0 = m.shape[-1]
    if n0 == 1:
        return m[:, 0, 0]
    if n0 == 2:
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    return np.linalg.det(m)


def char_fun(dims: ChannelDims, rho: float, t: float) -> CharFunSample:
    """Characteristic function sample phi(Q, t) of the slot mutual information."""
    value = complex(char_fun_batch(dims, rho, np.array([float(t)]))[0])
    return CharFunSample(t=float(t), value=value)


def char_fun_density(dims: ChannelDims, rho: float, t: float) -> CharFunSample:
    """Independent quadrature path for single-stream geometries (n0 = 1).

    The nonzero Gram eigenvalue of the two-hop product is a product of
    two gamma variables, with density
    2 lam^((n1+n2)/2 - 1) K_{n2-n1}(2 sqrt(lam)) / (Gamma(n1) Gamma(n2));
    for the 1xQx1 channel this is 2 lam^((Q-1)/2) K_{Q-1}(2 sqrt(lam)) / Gamma(Q).
    """
    n0, n1, n2 = dims.sorted_triple
    if n0 != 1:
        raise UnsupportedConfigurationError("char_fun_density: requires min(N, Q, L) = 1")
    if rho <= 0.0:
        raise DomainError(f"char_fun_density: rho must be > 0, got {rho}")
    lg = math.lgamma(n1) + math.lgamma(n2)
    order = n2 - n1
    scale = rho / dims.n

    def integrand(u: float, part: str) -> float:
        # substitution lam = u^2; weight = f(lam) * 2u
        logw = (n1 + n2 - 1) * math.log(u) - 2.0 * u - lg + math.log(4.0)
        wgt = math.exp(logw) * special.kve(order, 2.0 * u)
        phase = t * math.log1p(scale * u * u) / _LN2
        return wgt * (math.cos(phase) if part == "re" else math.sin(phase))

    upper = 0.5 * (n1 + n2) + 40.0 + 10.0 * math.sqrt(n1 + n2)
    re, _ = integrate.quad(integrand, 0.0, upper, args=("re",), epsabs=1e-13, epsrel=1e-12, limit=500)
    im, _ = integrate.quad(integrand, 0.0, upper, args=("im",), epsabs=1e-13, epsrel=1e-12, limit=500)
    return CharFunSample(t=float(t), value=complex(re, im))


# ---------------------------------------------------------------------------
# Gil-Pelaez inversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GilPelaezPlan:
    """Numerical plan for the oscillatory outage inversion.

    Panels of width 2*pi/(osc_factor * omega_max) are integrated with
    embedded 8/16-point Gauss-Legendre rules; omega_max bounds the phase
    rate of the integrand.  Integration stops once the truncation rule
    |phi(T)|^K / T < tail_cut holds, or at t_max with an explicit tail
    bound folded into the error estimate.
    """

    osc_factor: float = 3.2
    tail_cut: float = 1e-10
    t_max: float = 1500.0
    block_panels: int = 256
    nodes_per_unit: float = 10.0
    tol_abs: float = 1e-6
    tol_rel: float = 5e-3


_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


def outage_gil_pelaez(
    dims: ChannelDims,
    rate_r: float,
    k_parts: int,
    rho: float,
    plan: GilPelaezPlan | None = None,
) -> float:
    """Outage probability of K independent parallel sub-slot channels with
    per-sub-slot geometry ``dims``, inverted from the characteristic function:

        1/2 - (1/pi) * int_0^inf Im{[e^{-j t R} phi(t)]^K} / t dt

    With K = 1 this is the outage of the (N, Q, L) channel under fixed
    full reflection.
    """
    plan = plan or GilPelaezPlan()
    if rho <= 0.0:
        raise DomainError(f"outage_gil_pelaez: rho must be > 0, got {rho}")
    if rate_r < 0.0:
        raise DomainError(f"outage_gil_pelaez: rate_r must be >= 0, got {rate_r}")
    if k_parts < 1:
        raise DomainError(f"outage_gil_pelaez: k_parts must be >= 1, got {k_parts}")

    n0, n1, n2 = dims.sorted_triple
    i_cap = n0 * math.log2(1.0 + 8.0 * (rho / dims.n) * n2)
    omega = k_parts * (rate_r + i_cap) + 1.0
    h = 2.0 * math.pi / (plan.osc_factor * omega)

    x8, w8 = _GL8
    x16, w16 = _GL16
    total16 = 0.0
    quad_err = 0.0
    t_end = 0.0
    tail_bound = math.inf
    panel_idx = 0
    while t_end < plan.t_max:
        n_panels = min(plan.block_panels, int((plan.t_max - t_end) / h) + 1)
        starts = t_end + h * np.arange(n_panels)
        mid = starts[:, None] + 0.5 * h
        t8 = (mid + 0.5 * h * x8[None, :]).ravel()
        t16 = (mid + 0.5 * h * x16[None, :]).ravel()
        tt = np.concatenate([t8, t16])
        phi = char_fun_batch(dims, rho, tt, plan.nodes_per_unit)
        psi = (np.exp(-1j * tt * rate_r) * phi) ** k_parts
        f = psi.imag / tt
        f8 = f[: t8.size].reshape(n_panels, 8)
        f16 = f[t8.size :].reshape(n_panels, 16)
        i8 = 0.5 * h * f8 @ w8
        i16 = 0.5 * h * f16 @ w16
        total16 += float(np.sum(i16))
        quad_err += float(np.sum(np.abs(i16 - i8)))
        t_end = float(starts[-1] + h)
        panel_idx += n_panels
        # Truncation rule on the last panel of the block.
        phi_last = np.abs(phi[t8.size + (n_panels - 1) * 16 : t8.size + n_panels * 16])
        tail_stat = float(np.max(phi_last) ** k_parts) / t_end
        amp = float(np.max(phi_last * t16[-16:]))
        tail_bound = amp**k_parts / (math.pi * k_parts * t_end**k_parts)
        if tail_stat < plan.tail_cut:
            break

    value = 0.5 - total16 / math.pi
    err = quad_err / math.pi + tail_bound
    if err > max(plan.tol_abs, plan.tol_rel * abs(value)):
        raise AccuracyError(
            f"outage_gil_pelaez: error estimate {err:.3e} exceeds tolerance for value {value:.6e}",
            partial=min(1.0, max(0.0, value)),
            error_estimate=err,
        )
    if value < 0.0:
        if value < -10.0 * (err + 1e-12):
            raise AccuracyError(
                f"outage_gil_pelaez: negative result {value:.3e} beyond error estimate {err:.3e}",
                partial=0.0,
                error_estimate=err,
            )
        _LOG.debug("outage_gil_pelaez: clamping small negative %.3e to 0", value)
        value = 0.0
    return min(1.0, value)


# ---------------------------------------------------------------------------
# CLT approximation and SISO closed form
# ---------------------------------------------------------------------------


def outage_ar_clt(rate_r: float, k_parts: int, m: int, rho: float) -> float:
    """Activation-scheme SISO outage under the Gaussian sub-channel limit.

    Each active sub-surface gain is approximated as Exp(mean m), so the
    outage event is a product of K shifted exponentials staying below
    2**(R*K); with K = 1 this reduces to the closed form of
    ``outage_pr_siso``.
    """
    if rho <= 0.0:
        raise DomainError(f"outage_ar_clt: rho must be > 0, got {rho}")
    if rate_r < 0.0:
        raise DomainError(f"outage_ar_clt: rate_r must be >= 0, got {rate_r}")
    return product_shifted_exp_cdf(k_parts, rho * m, 2.0 ** (rate_r * k_parts))


def outage_pr_siso(rate_r: float, rho: float, q: int) -> float:
    """Single-partition SISO outage approximation 1 - exp(-(2^R - 1)/(rho*Q))."""
    if rho <= 0.0:
        raise DomainError(f"outage_pr_siso: rho must be > 0, got {rho}")
    if rate_r < 0.0:
        raise DomainError(f"outage_pr_siso: rate_r must be >= 0, got {rate_r}")
    return -math.expm1(-(2.0**rate_r - 1.0) / (rho * q))


# ---------------------------------------------------------------------------
# Flip-scheme correlation model and outage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelatedGainModel:
    """Second-order model of the flip-scheme sub-slot gains.

    zeta is the Pearson correlation between gains of different sub-slots,
    b the number of elements whose sign differs between the two flip
    patterns, omega = Q(1 - zeta) the conditional scale and sigma_sq = Q
    the per-sub-slot mean gain.
    """

    q: int
    zeta: float
    b: int
    omega: float
    sigma_sq: float

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise DomainError(f"CorrelatedGainModel: zeta = {self.zeta} outside [0, 1]")
        if not math.isclose(self.omega, self.q * (1.0 - self.zeta), rel_tol=1e-12):
            raise DomainError("CorrelatedGainModel: omega must equal q*(1 - zeta)")


def corr_coeff(q: int, k_parts: int, m: int) -> CorrelatedGainModel:
    """Correlation coefficient of flip-scheme gains over different sub-slots:
    zeta = ((Q - 2b)^2 + 2Q) / (Q (Q + 2)), with b = m for two partitions
    and b = 2m otherwise."""
    if k_parts < 2:
        raise DomainError(f"corr_coeff: needs at least two sub-slots, got k_parts={k_parts}")
    if k_parts * m != q:
        raise DomainError(f"corr_coeff: k_parts*m = {k_parts * m} != q = {q}")
    b = m if k_parts == 2 else 2 * m
    zeta = ((q - 2 * b) ** 2 + 2 * q) / (q * (q + 2))
    return CorrelatedGainModel(q=q, zeta=zeta, b=b, omega=q * (1.0 - zeta), sigma_sq=float(q))


def corr_coeff_limit(k_parts: int) -> float:
    """Large-Q limit of the flip-scheme gain correlation."""
    if k_parts < 2:
        raise DomainError(f"corr_coeff_limit: needs at least two sub-slots, got {k_parts}")
    if k_parts == 2:
        return 0.0
    return 1.0 - 8.0 * (k_parts - 2) / k_parts**2


@dataclass(frozen=True)
class FrQuadratureSpec:
    """Integration plan of the flip-scheme nested outage quadrature.

    The tau_k = 1 + rho*w_k substitution maps each gain to [1, c_k] with
    c_i = 2^{RK} / prod_{k<i} tau_k, and the innermost conditional CDF is
    evaluated at Theta = (2^{RK}/prod tau_k - 1)/(rho*omega).
    """

    tolerance: float = 1e-10
    k_cap: int = 4
    quad_limit: int = 200

    @staticmethod
    def upper_limit(rate_r: float, k_parts: int, tau_prefix_product: float) -> float:
        return 2.0 ** (rate_r * k_parts) / tau_prefix_product

    @staticmethod
    def threshold(
        rate_r: float, k_parts: int, tau_product: float, rho: float, omega: float
    ) -> float:
        return max(0.0, (2.0 ** (rate_r * k_parts) / tau_product - 1.0) / (rho * omega))


def outage_fr_siso(
    rate_r: float,
    k_parts: int,
    m: int,
    rho: float,
    spec: FrQuadratureSpec | None = None,
    zeta: float | None = None,
) -> float:
    """Flip-scheme SISO outage through the correlated-gain surrogate.

    The first sub-slot gain is Exp(mean Q); conditioned on it, the other
    gains are independent non-central chi-squares, and the innermost
    integral closes through the Marcum Q function.  ``zeta`` overrides
    the model correlation (zeta = 0 decouples the sub-slots and must
    reproduce the independent-exponential product CDF).
    """
    spec = spec or FrQuadratureSpec()
    if rho <= 0.0:
        raise DomainError(f"outage_fr_siso: rho must be > 0, got {rho}")
    if rate_r < 0.0:
        raise DomainError(f"outage_fr_siso: rate_r must be >= 0, got {rate_r}")
    if k_parts < 2:
        raise DomainError(f"outage_fr_siso: needs at least two sub-slots, got {k_parts}")
    if k_parts > spec.k_cap:
        raise UnsupportedConfigurationError(
            f"outage_fr_siso: k_parts={k_parts} exceeds the dimensionality cap "
            f"{spec.k_cap}; pass a spec with a larger k_cap to override"
        )
    q = k_parts * m
    if zeta is None:
        zeta = corr_coeff(q, k_parts, m).zeta
    omega = q * (1.0 - zeta)
    t_big = 2.0 ** (rate_r * k_parts)
    if t_big <= 1.0:
        return 0.0
    eps = spec.tolerance

    def cond_pdf(x: float, y: float) -> float:
        # density of a later gain given the first one, scaled-exponential form
        arg = 2.0 * math.sqrt(zeta * x * y) / omega
        return math.exp(-((math.sqrt(x) - math.sqrt(zeta * y)) ** 2) / omega) * special.i0e(arg) / omega

    def bracket(tau1: float, tau_prod: float) -> float:
        theta = FrQuadratureSpec.threshold(rate_r, k_parts, tau_prod, rho, omega)
        a = math.sqrt(2.0 * zeta * (tau1 - 1.0) / (rho * omega))
        return 1.0 - marcum_q1(a, math.sqrt(2.0 * theta))

    def quad_rel(fn, lo, hi):
        # the integrand vanishes over most of the domain deep in the tail,
        # which trips the roundoff detector of relative-tolerance
        # quadrature; exactness is enforced by the surrogate-sampling
        # cross check, so the warning carries no information here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(fn, lo, hi, epsabs=1e-300, epsrel=eps, limit=spec.quad_limit)
        return val

    def level(depth: int, tau1: float, tau_prod: float) -> float:
        # depth counts integrated variables so far (tau_1 .. tau_depth)
        if depth == k_parts - 1:
            return bracket(tau1, tau_prod)
        upper = FrQuadratureSpec.upper_limit(rate_r, k_parts, tau_prod)
        y = (tau1 - 1.0) / rho

        def g(tau: float) -> float:
            return cond_pdf((tau - 1.0) / rho, y) * level(depth + 1, tau1, tau_prod * tau)

        return quad_rel(g, 1.0, upper)

    def outer(tau1: float) -> float:
        f1 = math.exp(-(tau1 - 1.0) / (rho * q)) / q
        return f1 * level(1, tau1, tau1)

    val = quad_rel(outer, 1.0, t_big)
    return float(min(1.0, max(0.0, val * rho ** -(k_parts - 1))))


def outage_fr_bound(
    rate_r: float,
    k_parts: int,
    q: int,
    rho: float,
    dims: ChannelDims | None = None,
    plan: GilPelaezPlan | None = None,
) -> float:
    """Independence lower bound on the flip-scheme outage: the activation
    scheme run with every sub-slot using all Q elements.  SISO goes through
    the product-CDF closed form, other geometries through the inversion."""
    if dims is None or dims.is_siso:
        return outage_ar_clt(rate_r, k_parts, q, rho)
    if dims.q != q:
        raise DomainError(f"outage_fr_bound: dims.q = {dims.q} != q = {q}")
    return outage_gil_pelaez(ChannelDims(dims.n, q, dims.l), rate_r, k_parts, rho, plan)
