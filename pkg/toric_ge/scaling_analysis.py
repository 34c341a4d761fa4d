# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the finite-size scaling analysis of multi-size sweep data.

Functions in the source file:
    * :class:`BoundaryPeakError`: Exception for a maximum on the edge of the beta grid.
    * :class:`InsufficientDataError`: Exception for fits or series with too little data.
    * :class:`DegeneratePointError`: Exception for fits left without usable points.
    * :class:`NonPositiveExponentError`: Exception for an extrapolation with gamma <= 0.
    * :class:`SweepSeries`: The beta grid of one lattice size.
    * :class:`PeakEstimate`: Vertex of a fitted peak.
    * :class:`LinearFit`: Result of a straight-line least squares fit.
    * :class:`ScalingFit`: Full finite-size scaling result.
    * :func:`locate_peak`: Quadratic vertex around the discrete maximum of a field.
    * :func:`fit_log_divergence`: Slope of peak heights against ln N.
    * :func:`fit_powerlaw_convergence`: Exponent of the convergence of peak locations.
    * :func:`extrapolate_beta_m`: Peak location in the thermodynamic limit.
    * :func:`q_maximum`: Location and height of the maximum of Q.
    * :func:`scaling_table`: Per-size peaks as a DataFrame.
    * :func:`run_scaling`: The whole analysis for a set of sizes.
"""

import logging
from dataclasses import (
    dataclass,
    field
)
from typing import (
    Dict,
    Optional
)

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from toric_ge import estimators as est
from toric_ge.constants import BETA_CRITICAL

logger = logging.getLogger(__name__)

PEAK_WINDOW = 5

# Error column of every sweep field
ERROR_COLUMNS = {
    'E_per_link': 'E_err',
    'GE': 'GE_err',
    'GEt': 'GEt_err',
    'Q': 'Q_err',
    'dGEt_dbeta': 'dGEt_err',
}


class BoundaryPeakError(ValueError):
    """
    Exception for a field whose discrete maximum sits on the first or last grid point (or that has
    no maximum at all). The beta grid must be widened.
    """
    pass


class InsufficientDataError(ValueError):
    """
    Exception for a fit with fewer points than it needs for positive degrees of freedom, or a
    series with too few or invalid rows.
    """
    pass


class DegeneratePointError(ValueError):
    """
    Exception for a convergence fit left with too few points after dropping peak locations equal
    to the critical coupling.
    """
    pass


class NonPositiveExponentError(ValueError):
    """
    Exception for an extrapolation in ``N ** -gamma`` with ``gamma <= 0``.
    """
    pass


@dataclass(frozen=True, eq=False)
class SweepSeries:
    """
    Sweep results of one lattice size: a DataFrame with a strictly increasing ``beta`` column and
    the value and error columns of the sweep CSV.
    """
    L: int
    frame: pd.DataFrame

    def __post_init__(self):
        if len(self.frame) == 0:
            raise InsufficientDataError(f"Series for L={self.L} is empty")
        betas = self.frame['beta'].to_numpy(dtype=float)
        if np.any(np.diff(betas) <= 0):
            raise InsufficientDataError(f"Series for L={self.L} has a beta column that is not strictly increasing")
        numeric = self.frame.select_dtypes(include='number').to_numpy(dtype=float)
        if not np.all(np.isfinite(numeric)):
            raise InsufficientDataError(f"Series for L={self.L} holds non-finite values")

    @property
    def N(self):
        return 2 * self.L * self.L

    @property
    def betas(self):
        return self.frame['beta'].to_numpy(dtype=float)

    def values(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=float)

    def errors(self, name: str) -> Optional[np.ndarray]:
        """Error bars of a field, or None if the series carries none (or only zeros)."""
        column = ERROR_COLUMNS.get(name)
        if column is None or column not in self.frame:
            return None
        errors = self.frame[column].to_numpy(dtype=float)
        return errors if np.all(errors > 0) else None


@dataclass(frozen=True)
class PeakEstimate:
    beta_m: float
    height: float
    beta_m_err: float
    height_err: float
    needs_refinement: bool


@dataclass(frozen=True, eq=False)
class LinearFit:
    """
    ``y = slope * x + intercept`` with standard errors, degrees of freedom and residuals.
    """
    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    dof: int
    residuals: np.ndarray


@dataclass(frozen=True, eq=False)
class ScalingFit:
    table: pd.DataFrame
    kappa: float
    kappa_err: float
    gamma: float
    gamma_err: float
    beta_m_inf: float
    beta_m_inf_err: float
    beta_m_inf_sensitivity: Dict[str, float] = field(default_factory=dict)
    beta_q_inf: float = np.nan
    beta_q_inf_err: float = np.nan
    dGE_peak_kappa: float = np.nan
    dGE_peak_kappa_err: float = np.nan
    residuals: Dict[str, list] = field(default_factory=dict)


def _line(x, slope, intercept):
    return slope * x + intercept


def _fit_line(x, y, errors=None) -> LinearFit:
    """
    Weighted straight-line least squares. Error bars are used as absolute sigmas when given;
    otherwise the covariance is scaled by the residual variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dof = x.size - 2
    if dof <= 0:
        raise InsufficientDataError(f"A straight-line fit needs at least 3 points, got {x.size}")
    p0 = np.polyfit(x, y, 1)
    popt, pcov = curve_fit(_line, x, y, p0=p0, sigma=errors, absolute_sigma=errors is not None)
    perr = np.sqrt(np.clip(np.diag(pcov), 0.0, None))
    return LinearFit(slope=float(popt[0]), intercept=float(popt[1]), slope_err=float(perr[0]),
                     intercept_err=float(perr[1]), dof=dof, residuals=y - _line(x, *popt))


def locate_peak(betas, values, errors=None) -> PeakEstimate:
    """
    Fit a parabola through the 5 grid points centred on the discrete maximum of ``values`` and
    return its vertex. Errors of the vertex come from linear propagation of the coefficient
    covariance.

    :param betas: Strictly increasing beta grid
    :type betas: array-like
    :param values: Field values (pass absolute values to locate a peak of ``|value|``)
    :type values: array-like
    :param errors: Optional error bars of ``values``
    :type errors: array-like
    :raises BoundaryPeakError: if the maximum is on a grid end or the window is not concave
    """
    betas = np.asarray(betas, dtype=float)
    values = np.asarray(values, dtype=float)
    if betas.size < PEAK_WINDOW:
        raise InsufficientDataError(f"Peak location needs at least {PEAK_WINDOW} grid points, got {betas.size}")
    top = int(np.argmax(values))
    if top == 0 or top == values.size - 1:
        raise BoundaryPeakError(f"Maximum at beta={betas[top]} lies on the grid boundary, widen the grid")

    half = PEAK_WINDOW // 2
    start = min(max(top - half, 0), values.size - PEAK_WINDOW)
    window = slice(start, start + PEAK_WINDOW)
    centre = betas[top]
    scale = float(np.median(np.diff(betas[window])))
    t = (betas[window] - centre) / scale
    y = values[window]

    design = np.vander(t, 3)
    if errors is not None and np.all(np.asarray(errors)[window] > 0):
        weights = 1.0 / np.asarray(errors, dtype=float)[window] ** 2
        normal = design.T @ (design * weights[:, None])
        coefficients = np.linalg.solve(normal, design.T @ (weights * y))
        covariance = np.linalg.inv(normal)
    else:
        normal = design.T @ design
        coefficients = np.linalg.solve(normal, design.T @ y)
        residual = y - design @ coefficients
        covariance = np.linalg.inv(normal) * (residual @ residual) / (PEAK_WINDOW - 3)

    a, b, c = coefficients
    if not a < 0:
        raise BoundaryPeakError(f"No concave peak around beta={centre}")
    vertex = -b / (2.0 * a)
    height = c - b * b / (4.0 * a)

    grad_vertex = np.array([b / (2.0 * a * a), -1.0 / (2.0 * a), 0.0])
    grad_height = np.array([b * b / (4.0 * a * a), -b / (2.0 * a), 1.0])
    vertex_err = np.sqrt(max(grad_vertex @ covariance @ grad_vertex, 0.0)) * scale
    height_err = np.sqrt(max(grad_height @ covariance @ grad_height, 0.0))

    needs_refinement = bool(abs(vertex) > 0.5)
    if needs_refinement:
        logger.warning(f"Peak vertex at beta={centre + vertex * scale:.6f} falls outside the central grid cell "
                       f"around beta={centre}; a finer grid over [{betas[window][0]}, {betas[window][-1]}] "
                       f"is recommended")
    return PeakEstimate(beta_m=float(centre + vertex * scale), height=float(height),
                        beta_m_err=float(vertex_err), height_err=float(height_err),
                        needs_refinement=needs_refinement)


def fit_log_divergence(N, heights, errors=None) -> LinearFit:
    """
    Fit peak heights against ``ln N``. The slope is the divergence coefficient kappa.

    :param N: Link counts
    :type N: array-like
    :param heights: Peak heights
    :type heights: array-like
    :param errors: Optional error bars of the heights
    :type errors: array-like
    :raises InsufficientDataError: for fewer than 3 sizes
    """
    return _fit_line(np.log(np.asarray(N, dtype=float)), heights, errors)


def fit_powerlaw_convergence(N, beta_m, beta_star: float = BETA_CRITICAL, errors=None) -> LinearFit:
    """
    Fit ``ln|beta_star - beta_m|`` against ``ln N``. The returned fit holds gamma = -slope in
    ``slope`` (with ``slope_err`` its error); ``intercept`` is the log amplitude. Points with
    ``beta_m == beta_star`` carry no information and are dropped with a warning.

    :param N: Link counts
    :type N: array-like
    :param beta_m: Peak locations
    :type beta_m: array-like
    :param beta_star: Critical coupling the peaks converge to
    :type beta_star: float
    :param errors: Optional error bars of the peak locations
    :type errors: array-like
    :raises DegeneratePointError: if fewer than 3 usable points remain
    """
    N = np.asarray(N, dtype=float)
    beta_m = np.asarray(beta_m, dtype=float)
    distance = np.abs(beta_star - beta_m)
    usable = distance > 0
    if not np.all(usable):
        logger.warning(f"Dropping sizes N={N[~usable].tolist()} with beta_m equal to beta*={beta_star}")
        if np.count_nonzero(usable) < 3:
            raise DegeneratePointError(f"Only {np.count_nonzero(usable)} sizes left after dropping "
                                       f"beta_m == beta*")
    log_errors = None if errors is None else np.asarray(errors, dtype=float)[usable] / distance[usable]
    fit = _fit_line(np.log(N[usable]), np.log(distance[usable]), log_errors)
    return LinearFit(slope=0.0 - fit.slope, intercept=fit.intercept, slope_err=fit.slope_err,
                     intercept_err=fit.intercept_err, dof=fit.dof, residuals=fit.residuals)


def extrapolate_beta_m(N, beta_m, gamma: float, errors=None) -> LinearFit:
    """
    Fit ``beta_m`` against ``N ** -gamma``; the intercept is the infinite-size peak location.

    :param N: Link counts
    :type N: array-like
    :param beta_m: Peak locations
    :type beta_m: array-like
    :param gamma: Convergence exponent
    :type gamma: float
    :param errors: Optional error bars of the peak locations
    :type errors: array-like
    :raises NonPositiveExponentError: if ``gamma <= 0``
    """
    if not gamma > 0:
        raise NonPositiveExponentError(f"Extrapolation needs gamma > 0, got {gamma}")
    return _fit_line(np.asarray(N, dtype=float) ** -gamma, beta_m, errors)


def q_maximum(series: SweepSeries) -> PeakEstimate:
    """Locate the maximum of Q with the same quadratic vertex method as :func:`locate_peak`."""
    return locate_peak(series.betas, series.values('Q'), series.errors('Q'))


def _peak_of(series, name):
    return locate_peak(series.betas, np.abs(series.values(name)), series.errors(name))


def scaling_table(series_by_size: Dict[int, SweepSeries]) -> pd.DataFrame:
    """
    Per-size peak data: location and height of the ``|dGEt/dbeta|`` peak and of the Q maximum,
    with errors, one row per size in increasing L.

    :param series_by_size: Sweep series keyed by L
    :type series_by_size: dict
    """
    rows = list()
    for L in sorted(series_by_size):
        series = series_by_size[L]
        peak = _peak_of(series, 'dGEt_dbeta')
        q_peak = q_maximum(series)
        rows.append({
            'L': L,
            'N': series.N,
            'beta_m': peak.beta_m,
            'beta_m_err': peak.beta_m_err,
            'h_m': peak.height,
            'h_m_err': peak.height_err,
            'refine': peak.needs_refinement or q_peak.needs_refinement,
            'beta_Q': q_peak.beta_m,
            'beta_Q_err': q_peak.beta_m_err,
            'Q_max': q_peak.height,
            'Q_max_err': q_peak.height_err,
        })
        _, dGE, dGE_err = est.finite_difference_derivative(series.betas, series.values('GE'), series.errors('GE'))
        ge_peak = locate_peak(series.betas, np.abs(dGE), dGE_err if np.all(dGE_err > 0) else None)
        rows[-1].update({'h_GE': ge_peak.height, 'h_GE_err': ge_peak.height_err})
    return pd.DataFrame(rows)


def _errors_or_none(table, column):
    errors = table[column].to_numpy(dtype=float)
    return errors if np.all(errors > 0) else None


def run_scaling(series_by_size: Dict[int, SweepSeries], beta_star: float = BETA_CRITICAL) -> ScalingFit:
    """
    Run the complete analysis: kappa from the peak heights, gamma from the peak locations, the
    infinite-size peak location (with its shift when gamma moves by one standard error), the
    infinite-size location of the Q maximum and, when the sweep carries it, the divergence of the
    ``|dGE/dbeta|`` peaks.

    :param series_by_size: Sweep series keyed by L, at least 3 sizes
    :type series_by_size: dict
    :param beta_star: Critical coupling
    :type beta_star: float
    :raises InsufficientDataError: for fewer than 3 sizes
    """
    if len(series_by_size) < 3:
        raise InsufficientDataError(f"Scaling analysis needs at least 3 sizes, got {sorted(series_by_size)}")
    table = scaling_table(series_by_size)
    N = table['N'].to_numpy(dtype=float)

    kappa = fit_log_divergence(N, table['h_m'], _errors_or_none(table, 'h_m_err'))
    beta_m_errors = _errors_or_none(table, 'beta_m_err')
    gamma = fit_powerlaw_convergence(N, table['beta_m'], beta_star, beta_m_errors)
    intercept = extrapolate_beta_m(N, table['beta_m'], gamma.slope, beta_m_errors)

    sensitivity = dict()
    for label, shifted in (('gamma_minus', gamma.slope - gamma.slope_err),
                           ('gamma_plus', gamma.slope + gamma.slope_err)):
        if shifted > 0:
            sensitivity[label] = extrapolate_beta_m(N, table['beta_m'], shifted, beta_m_errors).intercept
        else:
            logger.warning(f"gamma shifted by one standard error is {shifted}, skipping {label}")

    q_intercept = extrapolate_beta_m(N, table['beta_Q'], gamma.slope, _errors_or_none(table, 'beta_Q_err'))

    ge_fit = fit_log_divergence(N, table['h_GE'], _errors_or_none(table, 'h_GE_err'))

    logger.info(f"Scaling over L={table['L'].tolist()}: kappa={kappa.slope:.4f}, gamma={gamma.slope:.4f}, "
                f"beta_m(inf)={intercept.intercept:.5f}")
    return ScalingFit(
        table=table,
        kappa=kappa.slope, kappa_err=kappa.slope_err,
        gamma=gamma.slope, gamma_err=gamma.slope_err,
        beta_m_inf=intercept.intercept, beta_m_inf_err=intercept.intercept_err,
        beta_m_inf_sensitivity=sensitivity,
        beta_q_inf=q_intercept.intercept, beta_q_inf_err=q_intercept.intercept_err,
        dGE_peak_kappa=ge_fit.slope, dGE_peak_kappa_err=ge_fit.slope_err,
        residuals={
            'kappa': kappa.residuals.tolist(),
            'gamma': gamma.residuals.tolist(),
            'beta_m_inf': intercept.residuals.tolist(),
        },
    )
