"""Experiment descriptions, validation, and the batch evaluation core."""

from __future__ import annotations

from dataclasses import dataclass

from . import __version__
from .analytic import (
    outage_ar_clt,
    outage_fr_bound,
    outage_fr_siso,
    outage_gil_pelaez,
    outage_pr_siso,
)
from .channel import ChannelDims, Scheme, SchemeConfig
from .errors import AccuracyError, SpecfileError, UnsupportedConfigurationError
from .mc import RngSpec, SnrGrid, estimate_outage

OUTAGE_COLUMNS = [
    "snr_db",
    "scheme",
    "N",
    "L",
    "Q",
    "K",
    "m",
    "R",
    "p_mc",
    "ci_low",
    "ci_high",
    "p_analytic",
    "trials",
    "seed",
]

DMT_COLUMNS = ["label", "scheme", "N", "L", "Q", "K", "m", "r", "d"]

_EVALUATORS = ("mc", "analytic", "both")
_ANALYTIC_METHODS = (
    "auto",
    "closed_form",  # single-partition SISO approximation
    "product_clt",  # activation-scheme SISO CLT product form
    "inversion",  # Gil-Pelaez characteristic-function inversion
    "fr_quadrature",  # flip-scheme correlated-gain nested quadrature
    "fr_bound",  # independence lower bound
    "none",
)


@dataclass(frozen=True)
class ResultRow:
    """One output line: a (scheme, SNR) cell with its estimates."""

    snr_db: float
    scheme: str
    n: int
    l: int
    q: int
    k_parts: int
    m: int
    rate_r: float
    p_mc: float | None
    ci_low: float | None
    ci_high: float | None
    p_analytic: float | None
    trials: int | None
    seed: int | None

    def __post_init__(self):
        if self.p_mc is None and self.p_analytic is None:
            raise SpecfileError("ResultRow: needs at least one of p_mc / p_analytic")
        if (self.p_mc is None) != (self.ci_low is None) or (self.p_mc is None) != (
            self.ci_high is None
        ):
            raise SpecfileError("ResultRow: CI fields must accompany p_mc")

    def as_tuple(self) -> tuple:
        return (
            self.snr_db,
            self.scheme,
            self.n,
            self.l,
            self.q,
            self.k_parts,
            self.m,
            self.rate_r,
            self.p_mc,
            self.ci_low,
            self.ci_high,
            self.p_analytic,
            self.trials,
            self.seed,
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative batch experiment over one scheme and an SNR grid."""

    scheme: Scheme
    n: int
    l: int
    q: int
    k_parts: int
    snr_db: tuple[float, ...]
    rate_r: float
    trials: int
    seed: int
    evaluator: str = "both"
    analytic: str = "auto"
    out: str | None = None
    workers: int = 1
    block_size: int = 1 << 14

    def __post_init__(self):
        if self.evaluator not in _EVALUATORS:
            raise SpecfileError(f"evaluator must be one of {_EVALUATORS}, got {self.evaluator!r}")
        if self.analytic not in _ANALYTIC_METHODS:
            raise SpecfileError(
                f"analytic must be one of {_ANALYTIC_METHODS}, got {self.analytic!r}"
            )
        if self.q % self.k_parts != 0:
            raise SpecfileError(f"k_parts={self.k_parts} does not divide q={self.q}")
        if self.scheme in (Scheme.PR, Scheme.PB) and self.k_parts != 1:
            raise SpecfileError(f"{self.scheme.value} requires k_parts = 1")
        if self.scheme is Scheme.PB and not (self.n == 1 and self.l == 1):
            raise SpecfileError("PB is defined for the SISO channel only")
        if self.evaluator in ("mc", "both") and self.trials < 1:
            raise SpecfileError(f"trials must be >= 1 for Monte Carlo runs, got {self.trials}")
        if not self.snr_db:
            raise SpecfileError("snr_db grid is empty")
        if self.rate_r < 0:
            raise SpecfileError("rate_r must be >= 0")
        if self.workers < 1:
            raise SpecfileError("workers must be >= 1")

    @property
    def dims(self) -> ChannelDims:
        return ChannelDims(n=self.n, q=self.q, l=self.l)

    @property
    def m(self) -> int:
        return self.q // self.k_parts

    def config(self) -> SchemeConfig:
        if self.scheme is Scheme.PR:
            return SchemeConfig.pr(self.q)
        if self.scheme is Scheme.PB:
            return SchemeConfig.pb(self.q)
        if self.scheme is Scheme.AR:
            return SchemeConfig.ar(self.q, self.k_parts)
        return SchemeConfig.fr(self.q, self.k_parts)


_SPEC_KEYS = {
    "scheme",
    "n",
    "l",
    "q",
    "k_parts",
    "snr_db",
    "rate_r",
    "trials",
    "seed",
    "evaluator",
    "analytic",
    "out",
    "workers",
    "block_size",
}

_SPEC_DEFAULTS = {
    "k_parts": "1",
    "rate_r": "1.0",
    "trials": "1000000",
    "seed": "20240101",
    "evaluator": "both",
    "analytic": "auto",
    "workers": "1",
    "block_size": str(1 << 14),
}


def _parse_snr_field(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("SNR range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        values = []
        v = start
        while v <= stop + 1e-9:
            values.append(round(v, 9))
            v += step
        return tuple(values)
    return tuple(float(p) for p in text.split(","))


def parse_specfile(text: str, path_label: str = "<spec>") -> ExperimentSpec:
    """Parse a flat key = value experiment description.

    Unknown keys are errors; messages carry the offending line number.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise SpecfileError(f"{path_label}:{lineno}: expected 'key = value'", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SPEC_KEYS:
            raise SpecfileError(f"{path_label}:{lineno}: unknown key {key!r}", line=lineno)
        if key in raw:
            raise SpecfileError(f"{path_label}:{lineno}: duplicate key {key!r}", line=lineno)
        raw[key] = value
    for key in ("scheme", "n", "l", "q", "snr_db"):
        if key not in raw:
            raise SpecfileError(f"{path_label}: missing required key {key!r}")
    merged = dict(_SPEC_DEFAULTS)
    merged.update(raw)
    try:
        scheme = Scheme(merged["scheme"].upper())
    except ValueError as exc:
        raise SpecfileError(f"{path_label}: unknown scheme {merged['scheme']!r}") from exc
    try:
        return ExperimentSpec(
            scheme=scheme,
            n=int(merged["n"]),
            l=int(merged["l"]),
            q=int(merged["q"]),
            k_parts=int(merged["k_parts"]),
            snr_db=_parse_snr_field(merged["snr_db"]),
            rate_r=float(merged["rate_r"]),
            trials=int(merged["trials"]),
            seed=int(merged["seed"]),
            evaluator=merged["evaluator"].lower(),
            analytic=merged["analytic"].lower(),
            out=merged.get("out"),
            workers=int(merged["workers"]),
            block_size=int(merged["block_size"]),
        )
    except SpecfileError:
        raise
    except ValueError as exc:
        raise SpecfileError(f"{path_label}: {exc}") from exc


def resolve_analytic_method(scheme: Scheme, dims: ChannelDims, k_parts: int, method: str) -> str:
    if method != "auto":
        return method
    siso = dims.is_siso
    if scheme is Scheme.PR:
        return "closed_form" if siso else "inversion"
    if scheme is Scheme.AR:
        return "product_clt" if siso else "inversion"
    if scheme is Scheme.FR:
        return "fr_quadrature" if siso and k_parts <= 4 else "fr_bound"
    return "none"  # PB has no in-scope closed form; Monte Carlo only


def analytic_outage(
    scheme: Scheme, dims: ChannelDims, k_parts: int, rate_r: float, rho: float, method: str
) -> float | None:
    """Dispatch one analytic outage evaluation; None when not defined."""
    method = resolve_analytic_method(scheme, dims, k_parts, method)
    m = dims.q // k_parts
    if method == "none":
        return None
    if method == "closed_form":
        if not dims.is_siso:
            raise UnsupportedConfigurationError("closed_form applies to the SISO channel only")
        return outage_pr_siso(rate_r, rho, dims.q)
    if method == "product_clt":
        if not dims.is_siso:
            raise UnsupportedConfigurationError("product_clt applies to the SISO channel only")
        return outage_ar_clt(rate_r, k_parts, m, rho)
    if method == "inversion":
        sub = ChannelDims(n=dims.n, q=m, l=dims.l)
        return outage_gil_pelaez(sub, rate_r, k_parts, rho)
    if method == "fr_quadrature":
        return outage_fr_siso(rate_r, k_parts, m, rho)
    if method == "fr_bound":
        return outage_fr_bound(rate_r, k_parts, dims.q, rho, dims)
    raise UnsupportedConfigurationError(f"unknown analytic method {method!r}")


def run_experiment(spec: ExperimentSpec) -> tuple[list[ResultRow], dict, list[str]]:
    """Evaluate one experiment; returns (rows, metadata, accuracy_failures).

    Accuracy failures leave the affected analytic cells empty and are
    reported so the caller can flag partial output (exit status 3).
    """
    dims = spec.dims
    config = spec.config()
    failures: list[str] = []
    mc_estimates = None
    if spec.evaluator in ("mc", "both"):
        grid = SnrGrid.from_db(spec.snr_db, spec.rate_r)
        rng = RngSpec(master_seed=spec.seed, block_size=spec.block_size)
        mc_estimates = estimate_outage(dims, config, grid, spec.trials, rng, spec.workers)
    method = resolve_analytic_method(spec.scheme, dims, spec.k_parts, spec.analytic)
    rows = []
    for idx, snr_db in enumerate(spec.snr_db):
        rho = 10.0 ** (snr_db / 10.0)
        p_analytic = None
        if spec.evaluator in ("analytic", "both") and method != "none":
            try:
                p_analytic = analytic_outage(
                    spec.scheme, dims, spec.k_parts, spec.rate_r, rho, method
                )
            except AccuracyError as exc:
                failures.append(f"{snr_db} dB: {exc}")
                p_analytic = None
        est = mc_estimates[idx] if mc_estimates is not None else None
        rows.append(
            ResultRow(
                snr_db=snr_db,
                scheme=spec.scheme.value,
                n=spec.n,
                l=spec.l,
                q=spec.q,
                k_parts=spec.k_parts,
                m=spec.m,
                rate_r=spec.rate_r,
                p_mc=None if est is None else est.p_hat,
                ci_low=None if est is None else est.ci_low,
                ci_high=None if est is None else est.ci_high,
                p_analytic=p_analytic,
                trials=None if est is None else est.trials,
                seed=None if est is None else spec.seed,
            )
        )
    metadata = {
        "tool": "rislab",
        "version": __version__,
        "table": "outage",
        "scheme": spec.scheme.value,
        "dims": f"N={spec.n},Q={spec.q},L={spec.l}",
        "k_parts": spec.k_parts,
        "rate_r": spec.rate_r,
        "snr_db": ",".join(f"{v:g}" for v in spec.snr_db),
        "evaluator": spec.evaluator,
        "analytic_method": method,
        "trials": spec.trials if spec.evaluator != "analytic" else 0,
        "seed": spec.seed,
        "block_size": spec.block_size,
    }
    if spec.scheme is Scheme.PB:
        metadata["note"] = "PB series is mc-only; no analytic expression in scope"
    if failures:
        metadata["partial"] = "; ".join(failures)
    return rows, metadata, failures
