"""OLS, 2SLS, reduced-form, and control-function estimation.

All residual variances use divisor n (no degrees-of-freedom correction); the
finite-sample identities between the variance estimators are exact only under
that convention. 2SLS residuals are computed against the original design, not
the instrumented one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .data import Dataset, design_matrices


@dataclass(frozen=True)
class FitResult:
    """Coefficients and residuals of one structural-equation fit."""

    theta_hat: np.ndarray  # (d_y1 + d_z1,)
    beta_hat: np.ndarray   # leading (d_y1,) subvector of theta_hat
    residuals: np.ndarray  # (n,)
    sigma2: float          # ||residuals||^2 / n
    method: str            # 'ols' or 'tsls'


@dataclass(frozen=True)
class ReducedFormFit:
    """First-stage regression of the endogenous block on all exogenous columns."""

    pi_hat: np.ndarray  # (d_z1 + d_z2, d_y1)
    v_hat: np.ndarray   # (n, d_y1), residuals orthogonal to Z


@dataclass(frozen=True)
class CfFit:
    """Control-function fit: outcome regressed on [X | first-stage residuals]."""

    theta_cf: np.ndarray  # (d_y1 + d_z1,)
    rho_cf: np.ndarray    # (d_y1,), coefficients on the residual block
    v_hat: np.ndarray     # (n, d_y1)
    u_hat: np.ndarray     # (n,)
    sigma2_u: float       # ||u_hat||^2 / n


def _finish(theta: np.ndarray, residuals: np.ndarray, d_y1: int, method: str) -> FitResult:
    n = residuals.shape[0]
    return FitResult(
        theta_hat=theta,
        beta_hat=theta[:d_y1].copy(),
        residuals=residuals,
        sigma2=float(residuals @ residuals) / n,
        method=method,
    )


def fit_ols(ds: Dataset) -> FitResult:
    """Least squares of the outcome on X = [Y1 | Z1]."""
    dm = design_matrices(ds)
    theta = linalg.solve_least_squares(dm.x, ds.y2)
    return _finish(theta, ds.y2 - dm.x @ theta, ds.d_y1, "ols")


def fit_tsls(ds: Dataset) -> FitResult:
    """Two-stage least squares: regress the outcome on the projection of X
    onto the instrument space; residuals are taken against the original X."""
    dm = design_matrices(ds)
    x_hat = linalg.project(dm.z, dm.x)
    theta = linalg.solve_least_squares(x_hat, ds.y2)
    return _finish(theta, ds.y2 - dm.x @ theta, ds.d_y1, "tsls")


def fit_reduced_form(ds: Dataset) -> ReducedFormFit:
    """First stage: Y1 on Z = [Z1 | Z2]; residuals are the control functions."""
    dm = design_matrices(ds)
    pi_hat = linalg.solve_least_squares(dm.z, ds.y1)
    return ReducedFormFit(pi_hat=pi_hat, v_hat=ds.y1 - dm.z @ pi_hat)


def fit_cf(ds: Dataset) -> CfFit:
    """Joint least squares of the outcome on [X | V_hat].

    Raises RankDeficient when V_hat has no variation left (Y1 perfectly
    explained by Z).
    """
    dm = design_matrices(ds)
    v_hat = linalg.annihilate(dm.z, ds.y1)
    design = np.hstack([dm.x, v_hat])
    coef = linalg.solve_least_squares(design, ds.y2)
    k = ds.d_y1 + ds.d_z1
    u_hat = ds.y2 - design @ coef
    return CfFit(
        theta_cf=coef[:k].copy(),
        rho_cf=coef[k:].copy(),
        v_hat=v_hat,
        u_hat=u_hat,
        sigma2_u=float(u_hat @ u_hat) / ds.n,
    )
