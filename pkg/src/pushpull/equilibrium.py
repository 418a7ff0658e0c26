"""Closed-form classification of symmetric Wardrop equilibria.

A threshold alpha is a symmetric Wardrop equilibrium when it is a best
response to the trajectory generated by the whole population playing
alpha: U(alpha, alpha) >= max_beta U(alpha, beta). Each classifier
returns the full fixed-point set in closed form; the oracle module
cross-checks every emitted set against a brute-force grid.

Candidate thresholds live in [0, beta_tau(Bad)] evaluated at the
self-consistent cap: the largest beta with t_beta(Bad) = tau collects
no pull before the horizon, which gives lambda_B*tau under linear push
and N(1 - exp(-lambda_B*tau)) under saturating push.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .dynamics import Belief, InfiniteHorizonError, ModelParams
from .utility import (
    Scenario,
    UtilityError,
    best_response_side_info,
    side_info_lambda_pu_s,
    side_info_peaks,
)

INF = math.inf


class EquilibriumKind(enum.Enum):
    EMPTY = "Empty"
    FINITE_POINTS = "FinitePoints"
    INTERVAL = "Interval"
    INTERVAL_UNION_POINTS = "IntervalUnionPoints"


@dataclass(frozen=True)
class EquilibriumSet:
    """Fixed-point set with symbolic endpoint labels for auditing.

    points/intervals hold the numeric set; point_labels and
    interval_labels name each value (0, alpha_bar, beta_tau_b, ...);
    case records which branch of the classification fired; aux carries
    extra computed quantities worth reporting.
    """

    kind: EquilibriumKind
    points: Tuple[float, ...] = ()
    intervals: Tuple[Tuple[float, float], ...] = ()
    point_labels: Tuple[str, ...] = ()
    interval_labels: Tuple[Tuple[str, str], ...] = ()
    case: str = ""
    aux: Tuple[Tuple[str, float], ...] = ()

    def contains(self, alpha: float, tol: float) -> bool:
        for v in self.points:
            if abs(alpha - v) <= tol:
                return True
        for lo, hi in self.intervals:
            if lo - tol <= alpha <= hi + tol:
                return True
        return False

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "points": [_json_num(v) for v in self.points],
            "intervals": [[_json_num(lo), _json_num(hi)]
                          for lo, hi in self.intervals],
            "point_labels": list(self.point_labels),
            "interval_labels": [list(pair) for pair in self.interval_labels],
            "case": self.case,
            "aux": {k: _json_num(v) for k, v in self.aux},
        }


@dataclass(frozen=True)
class SideInfoDiagnostics:
    """Branch peaks and the pull-rate singularity of the look-ahead game.

    beta1 belongs to the late (pull-weighted) branch and varies with
    lambda_pu; beta2 to the early push-only branch. lambda_pu_s is the
    pull rate where beta1's denominator changes sign (NaN for a uniform
    belief, where it never does). L and x restate the rate gap
    lambda_G - lambda_B and the pulled good rate lambda_G + lambda_pu.
    mu_positive evaluates the printed sufficient condition for the
    equilibrium set to have positive measure.
    """

    beta1: float
    beta2: float
    lambda_pu_s: float
    L: float
    x: float
    mu_positive: bool

    def as_dict(self) -> dict:
        return {
            "beta1": _json_num(self.beta1),
            "beta2": _json_num(self.beta2),
            "lambda_pu_s": _json_num(self.lambda_pu_s),
            "L": _json_num(self.L),
            "x": _json_num(self.x),
            "mu_positive": self.mu_positive,
        }


def _json_num(v: float):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


class EquilibriumError(ValueError):
    """Classification asked outside a theorem's hypotheses."""


# -- linear push, plain viewcount ---------------------------------------------

def classify_linear(belief: Belief, p: ModelParams) -> EquilibriumSet:
    """Fixed points under linear push: one of {0}, [0, cap], {cap}.

    The deviator utility is piecewise linear in beta, so everything is
    decided by two slope signs. When waiting is cheap for good relative
    to bad content below the population threshold (pi_G/lam_G >=
    pi_B/lam_B) the unique equilibrium is immediate access; when the
    pulled rates also keep the upper branch non-increasing every
    threshold up to the cap is a fixed point; otherwise only the cap.
    """
    cap = p.lambda_ps_b * p.tau
    pig, pib = belief.pi_g, belief.pi_b
    if pig / p.lambda_ps_g >= pib / p.lambda_ps_b:
        return EquilibriumSet(
            EquilibriumKind.FINITE_POINTS, points=(0.0,), point_labels=("0",),
            case="i", aux=(("beta_tau_b", cap),))
    if (pig / (p.lambda_ps_g + p.lambda_pu)
            >= pib / (p.lambda_ps_b + p.lambda_pu)):
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((0.0, cap),),
            interval_labels=(("0", "beta_tau_b"),),
            case="ii", aux=(("beta_tau_b", cap),))
    return EquilibriumSet(
        EquilibriumKind.FINITE_POINTS, points=(cap,),
        point_labels=("beta_tau_b",), case="iii",
        aux=(("beta_tau_b", cap),))


# -- saturating push, plain viewcount -----------------------------------------

def _require_exp_hypotheses(p: ModelParams) -> float:
    n = p.require_pool()
    if not p.lambda_ps_g > p.lambda_ps_b:
        raise EquilibriumError(
            "requires lambda_ps(G) > lambda_ps(B): "
            f"{p.lambda_ps_g} <= {p.lambda_ps_b}")
    if not p.lambda_ps_g * n <= p.lambda_pu:
        raise EquilibriumError(
            "requires lambda_ps(G)*n_pool <= lambda_pu: "
            f"{p.lambda_ps_g * n} > {p.lambda_pu}")
    return n


def _pull_ratio(a: float, n: float, p: ModelParams) -> float:
    # R(a) = (lam_pu + lam_G (n-a)) / (lam_pu + lam_B (n-a)), the
    # crossing-speed ratio right above a population playing a
    return ((p.lambda_pu + p.lambda_ps_g * (n - a))
            / (p.lambda_pu + p.lambda_ps_b * (n - a)))


def classify_exponential(belief: Belief, p: ModelParams) -> EquilibriumSet:
    """Fixed points under saturating push and plain viewcount.

    With rho = pi_G/pi_B and R(a) the pulled crossing-speed ratio at
    population threshold a (R decreases in a):

      rho >  lam_G/lam_B          -> {0}
      rho >= R(0)                 -> [0, cap]
      rho >= R(cap)               -> [alpha_bar, cap], R(alpha_bar)=rho
      else                        -> {cap}

    with the boundary rho = lam_G/lam_B giving exactly {0, cap}: there
    the payoff of joining the crowd at the cap ties the payoff of
    immediate access.
    """
    n = _require_exp_hypotheses(p)
    cap = n * (1.0 - math.exp(-p.lambda_ps_b * p.tau))
    pig, pib = belief.pi_g, belief.pi_b
    aux = (("beta_tau_b", cap),)
    rho = INF if pib == 0.0 else pig / pib
    rate_ratio = p.lambda_ps_g / p.lambda_ps_b
    if rho > rate_ratio:
        return EquilibriumSet(
            EquilibriumKind.FINITE_POINTS, points=(0.0,), point_labels=("0",),
            case="iii-a", aux=aux)
    if rho == rate_ratio:
        # tau*pi_B = pi_G*t_cap(G): both extremes are fixed points
        return EquilibriumSet(
            EquilibriumKind.FINITE_POINTS, points=(0.0, cap),
            point_labels=("0", "beta_tau_b"), case="iii-b", aux=aux)
    if rho >= _pull_ratio(0.0, n, p):
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((0.0, cap),),
            interval_labels=(("0", "beta_tau_b"),), case="ii-a", aux=aux)
    if rho >= _pull_ratio(cap, n, p):
        alpha_bar = n - p.lambda_pu * (pig - pib) / (
            pib * p.lambda_ps_g - pig * p.lambda_ps_b)
        alpha_bar = min(max(alpha_bar, 0.0), cap)
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((alpha_bar, cap),),
            interval_labels=(("alpha_bar", "beta_tau_b"),), case="ii-b",
            aux=aux + (("alpha_bar", alpha_bar),))
    return EquilibriumSet(
        EquilibriumKind.FINITE_POINTS, points=(cap,),
        point_labels=("beta_tau_b",), case="i", aux=aux)


# -- saturating push, trend-gated windows --------------------------------------

def classify_variable_horizon(belief: Belief, p: ModelParams) -> EquilibriumSet:
    """Fixed points when rewards accrue only inside the trending window.

    Same tree as classify_exponential, with the candidate cap moved to
    the bad window's effective end T1B = min(tau1(B), tau) and the
    interval's lower end alpha_0 solving the bare window comparison
    pi_G (tau1G - t_a(G)) = pi_B (T1B - t_a(B)) in closed form.
    """
    if p.gamma_th is None:
        raise EquilibriumError("gamma_th is required for the variable horizon")
    if p.gamma_th <= p.lambda_pu:
        raise InfiniteHorizonError(
            f"gamma_th={p.gamma_th} <= lambda_pu={p.lambda_pu}: "
            "the trending window never closes")
    n = _require_exp_hypotheses(p)
    lam_g, lam_b = p.lambda_ps_g, p.lambda_ps_b
    t1g = math.log(lam_g * n / (p.gamma_th - p.lambda_pu)) / lam_g
    t1b = math.log(lam_b * n / (p.gamma_th - p.lambda_pu)) / lam_b
    t1b_eff = min(t1b, p.tau)
    cap_tau = n * (1.0 - math.exp(-lam_b * p.tau))
    if t1b_eff <= 0.0:
        # the bad content never trends: waiting costs nothing and pays
        # nothing, immediate access keeps the whole good window
        return EquilibriumSet(
            EquilibriumKind.FINITE_POINTS, points=(0.0,), point_labels=("0",),
            case="degenerate-window", aux=(("tau1_b", t1b),))
    cap = n * (1.0 - math.exp(-lam_b * t1b_eff))
    aux = (("beta_tau1_b", cap), ("beta_tau_b", cap_tau),
           ("tau1_g", t1g), ("tau1_b", t1b))
    pig, pib = belief.pi_g, belief.pi_b
    rho = INF if pib == 0.0 else pig / pib
    if rho >= lam_g / lam_b:
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((0.0, cap),),
            interval_labels=(("0", "beta_tau1_b"),), case="interval-full",
            aux=aux)
    if rho >= _pull_ratio(0.0, n, p):
        d = (pib * t1b_eff - pig * t1g) / (pig / lam_g - pib / lam_b)
        alpha_0 = max(0.0, n * (1.0 - math.exp(d)))
        alpha_0 = min(alpha_0, cap)
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((alpha_0, cap),),
            interval_labels=(("alpha_0", "beta_tau1_b"),),
            case="interval-window", aux=aux + (("alpha_0", alpha_0),))
    if rho >= _pull_ratio(cap, n, p):
        d = (pib * t1b_eff - pig * t1g) / (pig / lam_g - pib / lam_b)
        alpha_0 = max(0.0, n * (1.0 - math.exp(d)))
        alpha_bar = n - p.lambda_pu * (pig - pib) / (
            pib * lam_g - pig * lam_b)
        lo = min(max(alpha_bar, alpha_0, 0.0), cap)
        return EquilibriumSet(
            EquilibriumKind.INTERVAL, intervals=((lo, cap),),
            interval_labels=(("alpha_bar", "beta_tau1_b"),),
            case="interval-pull",
            aux=aux + (("alpha_0", alpha_0), ("alpha_bar", alpha_bar)))
    return EquilibriumSet(
        EquilibriumKind.FINITE_POINTS, points=(cap,),
        point_labels=("beta_tau1_b",), case="cap-only", aux=aux)


# -- linear push, look-ahead metric --------------------------------------------

def classify_side_info(belief: Belief,
                       p: ModelParams) -> Tuple[EquilibriumSet,
                                                SideInfoDiagnostics]:
    """Fixed points under the look-ahead value metric.

    Above the pull-rate singularity (and for a uniform belief) emits
    the bracket between the two branch peaks intersected with [0, cap].
    When that bracket misses [0, cap] entirely, both peaks are spurious
    (the underlying branch derivatives never vanish inside the strategy
    space), so the set reduces to endpoint membership exactly as at or
    below the singularity: whichever of {0, cap} the branch best
    responses confirm.

    The bracket is kept even when it covers all of [0, cap] with both
    peaks outside; the grid oracle refutes that stretch of the printed
    form (the true set there is {0}), so oracle agreement is only
    promised outside it. See the verification draw constraints.
    """
    pig, pib = belief.pi_g, belief.pi_b
    cap = 0.5 * (p.lambda_ps_b * p.tau) ** 2
    beta1, beta2 = side_info_peaks(belief, p)
    s = side_info_lambda_pu_s(belief, p)
    mu_flag = ((p.lambda_pu > s and beta1 >= 0.0 > beta2)
               or (pig < pib and beta1 <= cap))
    diags = SideInfoDiagnostics(
        beta1=beta1, beta2=beta2,
        lambda_pu_s=(math.nan if pig == pib else s),
        L=p.lambda_ps_g - p.lambda_ps_b,
        x=p.lambda_ps_g + p.lambda_pu,
        mu_positive=bool(mu_flag),
    )
    aux = (("beta_tau_b", cap), ("beta1", beta1), ("beta2", beta2),
           ("lambda_pu_s", diags.lambda_pu_s))
    lo_raw, hi_raw = min(beta1, beta2), max(beta1, beta2)
    overlaps = hi_raw >= 0.0 and lo_raw <= cap
    if (pig == pib or p.lambda_pu > s) and overlaps:
        lo = min(max(lo_raw, 0.0), cap)
        hi = min(max(hi_raw, 0.0), cap)
        lo_lab = _clamp_label(lo_raw, lo, cap,
                              "beta1" if lo_raw == beta1 else "beta2")
        hi_lab = _clamp_label(hi_raw, hi, cap,
                              "beta1" if hi_raw == beta1 else "beta2")
        if hi == lo:
            eq = EquilibriumSet(
                EquilibriumKind.FINITE_POINTS, points=(lo,),
                point_labels=(lo_lab,), case="interval-regime", aux=aux)
        else:
            eq = EquilibriumSet(
                EquilibriumKind.INTERVAL, intervals=((lo, hi),),
                interval_labels=((lo_lab, hi_lab),), case="interval-regime",
                aux=aux)
        return eq, diags
    pts = []
    labels = []
    tol = 1e-12 * max(cap, 1.0)
    for endpoint, lab in ((0.0, "0"), (cap, "beta_tau_b")):
        br = best_response_side_info(endpoint, belief, p)
        if any(abs(endpoint - v) <= tol for v in br.values):
            pts.append(endpoint)
            labels.append(lab)
    if pts:
        eq = EquilibriumSet(
            EquilibriumKind.FINITE_POINTS, points=tuple(pts),
            point_labels=tuple(labels), case="endpoint-regime", aux=aux)
    else:
        eq = EquilibriumSet(EquilibriumKind.EMPTY, case="endpoint-regime",
                            aux=aux)
    return eq, diags


def _clamp_label(raw: float, clamped: float, cap: float, name: str) -> str:
    if clamped != raw:
        return "0" if clamped == 0.0 else "beta_tau_b"
    return name


def classify(scenario: Scenario, belief: Belief, p: ModelParams):
    """Dispatch to the closed-form classifier for scenarios that have one.

    Returns (EquilibriumSet, Optional[SideInfoDiagnostics]). The
    trend-times-viewcount games have no closed-form classification; use
    the grid oracle for those.
    """
    if scenario is Scenario.LINEAR_FIXED_HORIZON:
        return classify_linear(belief, p), None
    if scenario is Scenario.TREND_VIEWCOUNT_LINEAR:
        sub = ModelParams(p.lambda_ps_g ** 2, p.lambda_ps_b ** 2,
                          p.lambda_pu ** 2, p.tau)
        return classify_linear(belief, sub), None
    if scenario is Scenario.EXPONENTIAL_FIXED_HORIZON:
        return classify_exponential(belief, p), None
    if scenario is Scenario.VARIABLE_HORIZON:
        return classify_variable_horizon(belief, p), None
    if scenario is Scenario.SIDE_INFORMATION:
        return classify_side_info(belief, p)
    raise UtilityError(
        f"no closed-form classification for {scenario.value}; "
        "use the grid oracle")


def make_report(scenario: Scenario, belief: Belief, p: ModelParams,
                eq: EquilibriumSet,
                diags: Optional[SideInfoDiagnostics] = None,
                oracle_checked: bool = False) -> dict:
    """Equilibrium report in the documented JSON shape."""
    params = {
        "lambda_ps_g": p.lambda_ps_g,
        "lambda_ps_b": p.lambda_ps_b,
        "lambda_pu": p.lambda_pu,
        "tau": p.tau,
    }
    if p.n_pool is not None:
        params["n_pool"] = p.n_pool
    if p.gamma_th is not None:
        params["gamma_th"] = p.gamma_th
    report = {
        "scenario": scenario.value,
        "params": params,
        "belief": {"pi_g": belief.pi_g, "pi_b": belief.pi_b},
        "kind": eq.kind.value,
        "points": [_json_num(v) for v in eq.points],
        "intervals": [[_json_num(lo), _json_num(hi)]
                      for lo, hi in eq.intervals],
        "case": eq.case,
        "aux": {k: _json_num(v) for k, v in eq.aux},
        "diagnostics": diags.as_dict() if diags is not None else None,
        "oracle_checked": bool(oracle_checked),
    }
    report["point_labels"] = list(eq.point_labels)
    report["interval_labels"] = [list(x) for x in eq.interval_labels]
    return report
