"""Endogeneity test statistics, chi-square inference, and identity verification.

The generic Hausman statistic compares the OLS and 2SLS coefficient vectors of
the endogenous block through a difference of their estimated asymptotic
variances; its three named versions differ only in which residual-variance
estimates enter the weighting matrix. The control-function Wald statistic is
computed directly from the augmented regression and coincides with the
Hausman form evaluated at the control-function residual variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .data import Dataset, design_matrices
from .errors import DegenerateVariance
from .estimators import CfFit, FitResult, fit_cf, fit_ols, fit_tsls

TEST_NAMES = ("t_h1", "t_h2", "t_h3", "t_cf")

# Relative beta-gap size above which the strict statistic ordering is asserted.
STRICTNESS_THRESHOLD = 1e-8


# ---------------------------------------------------------------------------
# Chi-square distribution (regularized lower incomplete gamma)
# ---------------------------------------------------------------------------

_GAMMA_EPS = 1e-16
_GAMMA_ITMAX = 600


def _reg_lower_gamma(a: float, x: float) -> float:
    """P(a, x): series for x < a + 1, Lentz continued fraction otherwise."""
    if x <= 0.0:
        return 0.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        total = term = 1.0 / a
        for _ in range(_GAMMA_ITMAX):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _GAMMA_EPS:
                break
        return min(1.0, total * math.exp(log_prefactor))
    # continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    q = math.exp(log_prefactor) * h
    return max(0.0, 1.0 - q)


def chi2_cdf(df: int, x: float) -> float:
    """CDF of the chi-square distribution with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    return _reg_lower_gamma(df / 2.0, x / 2.0)


def _chi2_pdf(df: int, x: float) -> float:
    if x <= 0.0:
        return 0.0
    half = df / 2.0
    return math.exp((half - 1.0) * math.log(x) - x / 2.0 - half * math.log(2.0) - math.lgamma(half))


def chi2_quantile(df: int, p: float) -> float:
    """Inverse chi-square CDF via bracketed bisection plus Newton polish."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    lo, hi = 0.0, float(df)
    while chi2_cdf(df, hi) < p:
        hi *= 2.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(df, mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * (1.0 + hi):
            break
    x = 0.5 * (lo + hi)
    for _ in range(4):
        pdf = _chi2_pdf(df, x)
        if pdf <= 0.0:
            break
        step = (chi2_cdf(df, x) - p) / pdf
        x_new = x - step
        if lo < x_new < hi:
            x = x_new
        if abs(step) < 1e-14 * (1.0 + x):
            break
    return x


# ---------------------------------------------------------------------------
# Test statistics
# ---------------------------------------------------------------------------

def hausman_statistic(beta_gap, gram_2sls, gram_ols, sigma2_1: float, sigma2_2: float) -> float:
    """Generic Hausman quadratic form in the OLS/2SLS coefficient gap.

    The weighting matrix is ``sigma2_1 * gram_2sls^-1 - sigma2_2 * gram_ols^-1``.

    Raises
    ------
    NotPositiveDefinite
        When the weighting matrix is not SPD, which signals an invalid
        variance pairing (it cannot happen for the three named versions
        when the 2SLS variance is at least the OLS one).
    """
    gap = np.asarray(beta_gap, dtype=float).reshape(-1)
    if not np.any(gap):
        return 0.0
    k = gap.shape[0]
    eye = np.eye(k)
    inv_2sls = linalg.spd_solve(np.asarray(gram_2sls, dtype=float), eye)
    inv_ols = linalg.spd_solve(np.asarray(gram_ols, dtype=float), eye)
    w = sigma2_1 * inv_2sls - sigma2_2 * inv_ols
    w = 0.5 * (w + w.T)  # kill rounding asymmetry before the SPD solve
    return float(gap @ linalg.spd_solve(w, gap))


def cf_statistic(cf: CfFit, ds: Dataset) -> float:
    """Wald statistic for a zero coefficient on the control-function block.

    Computed directly from the augmented regression as
    ``rho' (V_hat' M_X V_hat) rho / sigma2_u``.
    """
    if cf.sigma2_u <= _variance_floor(ds.y2):
        raise DegenerateVariance("control-function residual variance is numerically zero")
    dm = design_matrices(ds)
    mv = linalg.annihilate(dm.x, cf.v_hat)
    gram = mv.T @ mv
    return float(cf.rho_cf @ gram @ cf.rho_cf) / cf.sigma2_u


def compute_h_n(beta_gap, gram_ols, sigma2_2sls: float, n: int) -> float:
    """Scalar linking the control-function and 2SLS variance estimates."""
    gap = np.asarray(beta_gap, dtype=float).reshape(-1)
    gram = np.asarray(gram_ols, dtype=float)
    return float(gap @ gram @ gap) / (n * sigma2_2sls)


def _variance_floor(y2: np.ndarray) -> float:
    # Exact fits leave residuals at rounding scale; anything this small is
    # a degenerate variance, not sampling noise.
    return 1e-24 * (float(np.mean(np.square(y2))) + 1.0)


@dataclass(frozen=True)
class Statistics:
    """All four statistics plus the fit bundle they were computed from."""

    t_h1: float
    t_h2: float
    t_h3: float
    t_cf: float
    h_n: float
    df: int
    beta_gap: np.ndarray
    ols: FitResult
    tsls: FitResult
    cf: CfFit
    gram_2sls: np.ndarray  # Y1_hat' M_Z1 Y1_hat
    gram_ols: np.ndarray   # Y1' M_Z1 Y1

    def by_name(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in TEST_NAMES}


def _grams(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    dm = design_matrices(ds)
    m1 = linalg.annihilate(ds.z1, ds.y1)
    gram_ols = m1.T @ m1
    y1_hat = linalg.project(dm.z, ds.y1)
    m2 = linalg.annihilate(ds.z1, y1_hat)
    gram_2sls = m2.T @ m2
    return gram_2sls, gram_ols


def compute_statistics(ds: Dataset) -> Statistics:
    """Fit all estimators and evaluate the four test statistics."""
    ols = fit_ols(ds)
    tsls = fit_tsls(ds)
    cf = fit_cf(ds)
    floor = _variance_floor(ds.y2)
    for label, s2 in (("ols", ols.sigma2), ("tsls", tsls.sigma2), ("cf", cf.sigma2_u)):
        if s2 <= floor:
            raise DegenerateVariance(f"{label} residual variance is numerically zero")
    gram_2sls, gram_ols = _grams(ds)
    gap = ols.beta_hat - tsls.beta_hat
    return Statistics(
        t_h1=hausman_statistic(gap, gram_2sls, gram_ols, ols.sigma2, ols.sigma2),
        t_h2=hausman_statistic(gap, gram_2sls, gram_ols, tsls.sigma2, tsls.sigma2),
        t_h3=hausman_statistic(gap, gram_2sls, gram_ols, tsls.sigma2, ols.sigma2),
        t_cf=cf_statistic(cf, ds),
        h_n=compute_h_n(gap, gram_ols, tsls.sigma2, ds.n),
        df=ds.d_y1,
        beta_gap=gap,
        ols=ols,
        tsls=tsls,
        cf=cf,
        gram_2sls=gram_2sls,
        gram_ols=gram_ols,
    )


@dataclass(frozen=True)
class TestReport:
    """Four endogeneity statistics with chi-square p-values and decisions."""

    t_h1: float
    t_h2: float
    t_h3: float
    t_cf: float
    h_n: float
    df: int
    p_values: dict[str, float]
    decisions: dict[float, dict[str, bool]]
    beta_gap: np.ndarray

    def statistics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in TEST_NAMES}


def run_all_tests(ds: Dataset, alphas=(0.01, 0.05, 0.10)) -> TestReport:
    """Compute all four statistics, p-values, and per-level reject decisions."""
    stats = compute_statistics(ds)
    values = stats.by_name()
    p_values = {name: 1.0 - chi2_cdf(stats.df, t) for name, t in values.items()}
    decisions = {}
    for alpha in alphas:
        crit = chi2_quantile(stats.df, 1.0 - alpha)
        decisions[float(alpha)] = {name: bool(t > crit) for name, t in values.items()}
    return TestReport(
        t_h1=stats.t_h1,
        t_h2=stats.t_h2,
        t_h3=stats.t_h3,
        t_cf=stats.t_cf,
        h_n=stats.h_n,
        df=stats.df,
        p_values=p_values,
        decisions=decisions,
        beta_gap=stats.beta_gap,
    )


# ---------------------------------------------------------------------------
# Identity verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    """Relative discrepancies of the exact finite-sample identities.

    Every gap is zero in real arithmetic on admissible data; the report
    measures how far floating point strays.
    """

    theta_cf_vs_tsls_gap: float      # CF theta equals the 2SLS theta
    rho_closed_form_gap: float       # rho equals its closed form in the beta gap
    tcf_equivalence_gap: float       # direct Wald form vs Hausman form of t_cf
    variance_link_ols_gap: float     # sigma2_u vs sigma2_ols * (1 - t_h1/n)
    variance_link_tsls_gap: float    # sigma2_u vs sigma2_tsls * (1 - t_h2/n - h_n)
    scaled_statistic_gap: float      # sigma2_ols*t_h1 = sigma2_tsls*t_h2 = sigma2_u*t_cf
    theta_gap_transform_gap: float   # theta gap as a linear map of the beta gap
    ordering_ok: bool

    def max_gap(self) -> float:
        return max(
            self.theta_cf_vs_tsls_gap,
            self.rho_closed_form_gap,
            self.tcf_equivalence_gap,
            self.variance_link_ols_gap,
            self.variance_link_tsls_gap,
            self.scaled_statistic_gap,
            self.theta_gap_transform_gap,
        )

    def within(self, tol: float) -> bool:
        return self.max_gap() < tol and self.ordering_ok


def _rel_vec(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


def _rel_scalar(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + abs(b))


def verify_identities(ds: Dataset, tol: float = 1e-8) -> IdentityReport:
    """Evaluate every exact finite-sample identity on one dataset.

    ``tol`` only affects the ``ordering_ok`` slack for near-ties; the gaps
    themselves are always reported.
    """
    stats = compute_statistics(ds)
    ols, tsls, cf = stats.ols, stats.tsls, stats.cf
    n = ds.n
    gap = stats.beta_gap

    # CF estimates against their closed forms in the beta gap.
    mz_y1 = cf.v_hat  # annihilator of Z applied to Y1
    gram_mz = mz_y1.T @ mz_y1
    rho_closed = linalg.spd_solve(gram_mz, stats.gram_ols @ gap)

    # Direct Wald form against the Hausman form at the CF variance.
    t_cf_hausman = hausman_statistic(gap, stats.gram_2sls, stats.gram_ols, cf.sigma2_u, cf.sigma2_u)

    # Structural coefficient gap as a linear transform of the beta gap.
    z1y1 = linalg.solve_least_squares(ds.z1, ds.y1)  # (Z1'Z1)^-1 Z1'Y1
    transform = np.vstack([np.eye(ds.d_y1), -z1y1])
    theta_gap_pred = transform @ gap

    scaled = (
        ols.sigma2 * stats.t_h1,
        tsls.sigma2 * stats.t_h2,
        cf.sigma2_u * stats.t_cf,
    )
    scaled_gap = max(
        _rel_scalar(scaled[0], scaled[2]),
        _rel_scalar(scaled[1], scaled[2]),
        _rel_scalar(scaled[0], scaled[1]),
    )

    gap_is_strict = np.linalg.norm(gap) > STRICTNESS_THRESHOLD * (1.0 + np.linalg.norm(ols.beta_hat))
    t = stats.by_name()
    slack = tol * (1.0 + t["t_cf"])
    if gap_is_strict:
        ordering_ok = t["t_cf"] > t["t_h1"] > t["t_h2"] > t["t_h3"]
    else:
        ordering_ok = (
            t["t_cf"] >= t["t_h1"] - slack
            and t["t_h1"] >= t["t_h2"] - slack
            and t["t_h2"] >= t["t_h3"] - slack
        )

    return IdentityReport(
        theta_cf_vs_tsls_gap=_rel_vec(cf.theta_cf, tsls.theta_hat),
        rho_closed_form_gap=_rel_vec(cf.rho_cf, rho_closed),
        tcf_equivalence_gap=_rel_scalar(stats.t_cf, t_cf_hausman),
        variance_link_ols_gap=_rel_scalar(cf.sigma2_u, ols.sigma2 * (1.0 - stats.t_h1 / n)),
        variance_link_tsls_gap=_rel_scalar(
            cf.sigma2_u, tsls.sigma2 * (1.0 - stats.t_h2 / n - stats.h_n)
        ),
        scaled_statistic_gap=scaled_gap,
        theta_gap_transform_gap=_rel_vec(ols.theta_hat - tsls.theta_hat, theta_gap_pred),
        ordering_ok=bool(ordering_ok),
    )
