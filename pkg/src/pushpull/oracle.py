"""Brute-force grid oracle for best responses and symmetric equilibria.

Everything here answers one question by exhaustive search: which grid
thresholds come within a utility slack of the maximum. The closed-form
layers are validated against these sweeps, never the other way around.
The bulk evaluators below vectorize the same formulas the scalar
utility uses; tests pin them against each other pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import (
    Belief,
    ModelParams,
    PushKind,
    Quality,
    horizon_window,
    viewcount,
)
from .numerics import lambert_w0_log_arr
from .utility import (
    Scenario,
    _discontinuity_preimages,
    _sub_params,
    strategy_cap,
    symmetric_cap,
    utility,
)

INF = math.inf


@dataclass(frozen=True)
class GridSpec:
    """Resolution and slack for the exhaustive sweeps.

    tol is in utility units (days of viewing); None means 1e-6 * tau,
    resolved against the model the grid is used with.
    """

    n_beta: int = 201
    n_alpha: int = 101
    tol: Optional[float] = None

    def __post_init__(self):
        if self.n_beta < 100:
            raise ValueError(f"n_beta={self.n_beta} must be at least 100")
        if self.n_alpha < 100:
            raise ValueError(f"n_alpha={self.n_alpha} must be at least 100")
        if self.tol is not None and not self.tol > 0.0:
            raise ValueError("tol must be positive")

    def resolve_tol(self, p: ModelParams) -> float:
        return self.tol if self.tol is not None else 1e-6 * p.tau


def _alpha_cap(p: ModelParams, s: Scenario) -> float:
    # candidates above the self-consistent cap exceed their own strategy
    # space, so no admissible symmetric equilibrium lives there
    return symmetric_cap(p, s)


def _window_kinks(alpha: float, p: ModelParams) -> list:
    # levels where a trend window dies under the deviator's crossing
    # dynamics: pure push for the tau0 terms, population-boosted for tau1.
    # The deviation optimum sits exactly on these kinks, so a grid that
    # skips them certifies false fixed points nearby.
    push = PushKind.EXPONENTIAL_SATURATING
    out = []
    for q in (Quality.GOOD, Quality.BAD):
        t0, t1, _ = horizon_window(q, p, push)
        t0_eff = min(max(t0, 0.0), p.tau)
        t1_eff = min(max(t1, 0.0), p.tau)
        out.append(viewcount(t0_eff, q, INF, p, push))
        out.append(viewcount(t1_eff, q, alpha, p, push))
    return out


def _beta_grid(alpha: float, p: ModelParams, s: Scenario,
               n_beta: int) -> np.ndarray:
    cap = strategy_cap(alpha, p, s)
    if cap <= 0.0:
        return np.zeros(1)
    base = np.linspace(0.0, cap, n_beta)
    eps = 1e-9 * max(cap, 1e-9)
    extra = [min(alpha, cap)]
    if s is Scenario.VARIABLE_HORIZON:
        extra.extend(_window_kinks(alpha, p))
    for d in _discontinuity_preimages(alpha, p, s):
        extra.extend((d - eps, d, d + eps))
    extra_arr = np.clip(np.asarray(extra, dtype=float), 0.0, cap)
    return np.unique(np.concatenate([base, extra_arr]))


# -- vectorized utility sweeps ------------------------------------------------

def _pos_arr(x):
    return np.maximum(x, 0.0)


def _tb_linear_arr(betas, alpha, lam, lpu):
    pure = betas / lam
    if lpu == 0.0:
        return pure
    boosted = alpha / lam + (betas - alpha) / (lam + lpu)
    return np.where(betas <= alpha, pure, boosted)


def _tb_pure_exp_arr(betas, lam, n):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.log1p(-np.minimum(betas, n) / n) / lam
    return np.where(betas >= n, INF, t)


def _tb_exp_arr(betas, alpha, lam, lpu, n):
    pure = _tb_pure_exp_arr(betas, lam, n)
    if lpu == 0.0 or alpha >= n:
        return pure
    zeta = lam * n / lpu
    c = -zeta * (1.0 - betas / n) - math.log1p(-alpha / n)
    boosted = (c + lambert_w0_log_arr(math.log(zeta) - c)) / lam
    return np.where(betas <= alpha, pure, boosted)


def _tb_side_arr(betas, alpha, lam, lpu, tau):
    x2 = (lam * tau) ** 2
    s = np.sqrt(_pos_arr(x2 - 2.0 * betas))
    pure = s / lam
    if 2.0 * alpha > x2:
        t = pure
    else:
        ax = math.sqrt(x2 - 2.0 * alpha)
        mixed = (ax * lpu / lam + s) / (lam + lpu)
        t = np.where(betas >= alpha, pure, mixed)
    return np.where(betas > 0.5 * x2, INF, t)


def _window_term_arr(w, t):
    # bare window minus crossing, 0 when the crossing never happens
    return np.where(np.isfinite(t), w - t, 0.0)


def _bulk_utilities(alpha: float, betas: np.ndarray, belief: Belief,
                    p: ModelParams, s: Scenario) -> np.ndarray:
    """U(alpha, beta) over a beta array; must match the scalar utility."""
    pig, pib = belief.pi_g, belief.pi_b
    if s is Scenario.TREND_VIEWCOUNT_LINEAR:
        return _bulk_utilities(alpha, betas, belief, _sub_params(p),
                               Scenario.LINEAR_FIXED_HORIZON)
    if s is Scenario.LINEAR_FIXED_HORIZON:
        tb_g = _tb_linear_arr(betas, alpha, p.lambda_ps_g, p.lambda_pu)
        tb_b = _tb_linear_arr(betas, alpha, p.lambda_ps_b, p.lambda_pu)
        return pig * _pos_arr(p.tau - tb_g) - pib * _pos_arr(p.tau - tb_b)
    if s is Scenario.EXPONENTIAL_FIXED_HORIZON:
        n = p.require_pool()
        tb_g = _tb_exp_arr(betas, alpha, p.lambda_ps_g, p.lambda_pu, n)
        tb_b = _tb_exp_arr(betas, alpha, p.lambda_ps_b, p.lambda_pu, n)
        win_g = np.where(np.isfinite(tb_g), _pos_arr(p.tau - tb_g), 0.0)
        win_b = np.where(np.isfinite(tb_b), _pos_arr(p.tau - tb_b), 0.0)
        return pig * win_g - pib * win_b
    if s is Scenario.VARIABLE_HORIZON:
        return _bulk_variable_horizon(alpha, betas, belief, p)
    if s is Scenario.SIDE_INFORMATION:
        tb_g = _tb_side_arr(betas, alpha, p.lambda_ps_g, p.lambda_pu, p.tau)
        tb_b = _tb_side_arr(betas, alpha, p.lambda_ps_b, p.lambda_pu, p.tau)
        win_g = np.where(np.isfinite(tb_g), _pos_arr(p.tau - tb_g), 0.0)
        win_b = np.where(np.isfinite(tb_b), _pos_arr(p.tau - tb_b), 0.0)
        return pig * win_g - pib * win_b
    # trend*viewcount with saturating push: the strict first-passage time
    # needs a scan, so this one stays scalar
    return np.array([utility(alpha, float(b), belief, p, s) for b in betas])


def _bulk_variable_horizon(alpha, betas, belief, p):
    pig, pib = belief.pi_g, belief.pi_b
    n = p.require_pool()
    push = PushKind.EXPONENTIAL_SATURATING
    w0g, t1g, xth_g = horizon_window(Quality.GOOD, p, push)
    w0b, t1b, xth_b = horizon_window(Quality.BAD, p, push)
    tb_g = _tb_exp_arr(betas, alpha, p.lambda_ps_g, p.lambda_pu, n)
    tb_b = _tb_exp_arr(betas, alpha, p.lambda_ps_b, p.lambda_pu, n)
    u_above = (pig * np.where(np.isfinite(tb_g), _pos_arr(t1g - tb_g), 0.0)
               - pib * np.where(np.isfinite(tb_b), _pos_arr(t1b - tb_b), 0.0))
    tbp_g = _tb_pure_exp_arr(betas, p.lambda_ps_g, n)
    tbp_b = _tb_pure_exp_arr(betas, p.lambda_ps_b, n)
    ta_g = INF if alpha >= n else -math.log1p(-alpha / n) / p.lambda_ps_g
    ta_b = INF if alpha >= n else -math.log1p(-alpha / n) / p.lambda_ps_b
    reopen_g = max(t1g - ta_g, 0.0) if ta_g < INF else 0.0
    reopen_b = max(t1b - ta_b, 0.0) if ta_b < INF else 0.0
    early_g = np.where(np.isfinite(tbp_g), _pos_arr(w0g - tbp_g), 0.0)
    early_b = np.where(np.isfinite(tbp_b), _pos_arr(w0b - tbp_b), 0.0)
    if alpha > xth_g:
        u_below = pig * (early_g + reopen_g) - pib * (early_b + reopen_b)
    elif alpha >= xth_b:
        u_below = (pig * _window_term_arr(t1g, tbp_g)
                   - pib * (early_b + reopen_b))
    else:
        bad_term = (t1b - ta_b) if ta_b < INF else 0.0
        u_below = pig * _window_term_arr(t1g, tbp_g) - pib * bad_term
    return np.where(betas > alpha, u_above, u_below)


# -- public sweeps -------------------------------------------------------------

def grid_best_response(alpha: float, belief: Belief, p: ModelParams,
                       s: Scenario, g: GridSpec) -> np.ndarray:
    """All grid thresholds within g.tol of the best achievable utility."""
    betas = _beta_grid(alpha, p, s, g.n_beta)
    us = _bulk_utilities(alpha, betas, belief, p, s)
    return betas[us >= us.max() - g.resolve_tol(p)]


def find_symmetric_equilibria(belief: Belief, p: ModelParams,
                              s: Scenario, g: GridSpec) -> np.ndarray:
    """All grid alphas whose own threshold is within g.tol of optimal."""
    a_cap = _alpha_cap(p, s)
    tol = g.resolve_tol(p)
    out = []
    for a in np.linspace(0.0, a_cap, g.n_alpha):
        betas = _beta_grid(a, p, s, g.n_beta)
        us = _bulk_utilities(a, betas, belief, p, s)
        a_in = min(a, betas[-1])
        i = int(np.searchsorted(betas, a_in))
        if i < betas.size and betas[i] == a_in:
            u_self = float(us[i])
        else:
            u_self = utility(a, a_in, belief, p, s)
        if u_self >= us.max() - tol:
            out.append(a)
    return np.asarray(out)
