"""Joint optimization of the signal and the correlator.

With both waveforms free (under power budgets) the optimal weight
magnitudes live in the solution set of a stationary-level equation, and
the interference penalty E[C(lam W)] collapses to a restricted lower
convex envelope of p -> C(lam*sqrt(p)).  The resulting designs carry at
most two distinct magnitudes, with the signal proportional to the
correlator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import cgf as _cgf
from ._kernels import lower_hull
from ._optim import golden_max
from .cgf import DomainError, Gaussian, NoiseModel
from .exponents import JointAtoms, PowerBudget, md_exponent

_EDGE_SHRINK = 1.0 - 1e-12


@dataclass(frozen=True)
class StationaryLevels:
    """Roots of Cdot(lam*w) = kappa*w for w >= 0 (0 is always a root).

    ``continuum`` flags the Gaussian coincidence where the equation holds
    identically and every level is stationary.
    """

    slope_kappa: float
    roots: tuple
    continuum: bool = False


@dataclass(frozen=True)
class EnvelopeValue:
    """Restricted-envelope value at power p, realized by a two-point mixture."""

    value: float
    p0: float
    p1: float
    alpha: float


@dataclass(frozen=True)
class JointDesignResult:
    e_md: float
    lambda_star: float
    p_star: float
    level_a: float
    level_b: float
    mix_alpha: float
    curvature: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "curvature": self.curvature,
                "e_md": self.e_md,
                "lambda_star": self.lambda_star,
                "levels": {
                    "a": self.level_a,
                    "b": self.level_b,
                    "mix_alpha": self.mix_alpha,
                },
                "p_star": self.p_star,
            },
            sort_keys=True,
        )


def _sqrt_cgf(model: NoiseModel, lam: float, p):
    return _cgf.cgf_eval(model, lam * np.sqrt(p))


def classify_curvature(model: NoiseModel, lam: float, p_max: float) -> str:
    """Sign pattern of the curvature of p -> C(lam*sqrt(p)) on (0, p_max]."""
    if lam <= 0 or p_max <= 0:
        raise ValueError("lam and p_max must be > 0")
    edge = _cgf._pole(model)
    if lam * math.sqrt(p_max) >= edge:
        raise DomainError("lam*sqrt(p_max) reaches the CGF pole")
    p = np.linspace(0.0, p_max, 10_000)
    h = _sqrt_cgf(model, lam, p)
    d2 = h[:-2] + h[2:] - 2.0 * h[1:-1]
    has_pos = bool(np.any(d2 > 1e-10))
    has_neg = bool(np.any(d2 < -1e-10))
    if has_pos and has_neg:
        return "mixed"
    if has_neg:
        return "concave"
    return "convex"


def stationary_levels(model: NoiseModel, lam: float, kappa: float) -> StationaryLevels:
    """All non-negative roots of Cdot(lam*w) = kappa*w, by scan + bisection."""
    if lam <= 0 or kappa <= 0:
        raise ValueError("lam and kappa must be > 0")
    if isinstance(model, Gaussian):
        cont = abs(model.var_z * lam - kappa) <= 1e-12 * max(kappa, 1.0)
        return StationaryLevels(kappa, (0.0,), continuum=cont)

    edge = _cgf._pole(model)
    if edge < math.inf:
        w_max = edge * _EDGE_SHRINK / lam
    else:
        # Cdot is bounded by z0 for the bounded-support models, so every
        # positive root satisfies w <= z0/kappa
        w_max = 1.01 * model.z0 / kappa

    def d(w):
        return _cgf.cgf_deriv(model, lam * w) - kappa * w

    grid = np.linspace(w_max * 1e-9, w_max, 20_001)
    vals = d(grid)
    roots = [0.0]
    sign = np.sign(vals)
    crossings = np.flatnonzero(np.diff(sign) != 0)
    for j in crossings:
        a, b = grid[j], grid[j + 1]
        fa = d(a)
        for _ in range(100):
            m = 0.5 * (a + b)
            fm = d(m)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
        root = 0.5 * (a + b)
        if abs(d(root)) <= 1e-8 * (1.0 + kappa * root) and root > 1e-9 * w_max:
            roots.append(float(root))
    # drop near-duplicates from tangential grid hits
    dedup = [roots[0]]
    for r in roots[1:]:
        if r - dedup[-1] > 1e-7 * w_max:
            dedup.append(r)
    return StationaryLevels(kappa, tuple(dedup), continuum=False)


def _envelope_grid(model: NoiseModel, lam: float, p_hi: float):
    """Lower convex hull of (p, C(lam*sqrt(p))) on [0, p_hi].

    Mixed log+linear abscissae resolve both the relative structure near
    zero and the chord end at p_hi.
    """
    logs = p_hi * np.logspace(-12.0, 0.0, 6000)
    lins = np.linspace(0.0, p_hi, 4000)
    p = np.unique(np.concatenate([[0.0, p_hi], logs, lins]))
    h = _sqrt_cgf(model, lam, p)
    idx = lower_hull(p, h)
    return p[idx], h[idx]


def _p_hi(model: NoiseModel, lam: float, p_cap: float) -> float:
    edge = _cgf._pole(model)
    if edge == math.inf:
        return p_cap
    return min(p_cap, (edge * _EDGE_SHRINK / lam) ** 2)


def c_tilde(model: NoiseModel, lam: float, p: float, p_cap: float) -> EnvelopeValue:
    """Lower convex envelope of x -> C(lam*sqrt(x)) on [0, p_cap] at x = p,
    realized as the best two-point mixture of power levels."""
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if not 0.0 <= p <= p_cap:
        raise ValueError("need 0 <= p <= p_cap")
    edge = _cgf._pole(model)
    if lam * math.sqrt(p_cap) >= edge:
        raise DomainError("lam*sqrt(p_cap) reaches the CGF pole")
    if isinstance(model, Gaussian):
        return EnvelopeValue(0.5 * model.var_z * lam * lam * p, p, p, 0.0)

    hx, hy = _envelope_grid(model, lam, p_cap)
    j = int(np.searchsorted(hx, p, side="right"))
    j = min(max(j, 1), hx.size - 1)
    p0, p1 = float(hx[j - 1]), float(hx[j])
    y0, y1 = float(hy[j - 1]), float(hy[j])
    if p1 == p0:
        alpha = 0.0
        val = y0
    else:
        alpha = (p - p0) / (p1 - p0)
        val = (1.0 - alpha) * y0 + alpha * y1
    h_p = float(_sqrt_cgf(model, lam, p))
    if val >= h_p - 1e-9 * (1.0 + abs(h_p)):
        # the envelope touches the graph here: locally convex
        return EnvelopeValue(h_p, float(p), float(p), 0.0)
    return EnvelopeValue(float(val), p0, p1, float(alpha))


def _envelope_values(model, lam, p_query, p_cap):
    """Envelope values at an array of powers (single hull build)."""
    if isinstance(model, Gaussian):
        return 0.5 * model.var_z * lam * lam * p_query
    hx, hy = _envelope_grid(model, lam, p_cap)
    return np.interp(p_query, hx, hy)


def _joint_objective_grid(model, lams, p_grid, theta, p_s, var_n, p_cap):
    out = np.full((lams.size, p_grid.size), -np.inf)
    root_ps = np.sqrt(p_s * p_grid)
    for i, lam in enumerate(lams):
        hi = _p_hi(model, lam, p_cap)
        feas = p_grid <= hi
        if not np.any(feas):
            continue
        env = _envelope_values(model, lam, p_grid[feas], hi)
        out[i, feas] = (
            lam * (root_ps[feas] - theta)
            - env
            - 0.5 * lam * lam * var_n * p_grid[feas]
        )
    return out


def joint_md_exponent(
    model: NoiseModel,
    budget: PowerBudget,
    theta: float,
    p_cap: float | None = None,
) -> JointDesignResult:
    """Optimal MD exponent over jointly designed signal and correlator.

    Searches the (tilt, power) plane on a log grid with local refinement;
    the envelope support at the optimum gives the two weight magnitudes
    and their mixing weight.  ``p_cap`` bounds the power spike used by
    the concave regime (default 1e6 * p_w).
    """
    if budget.p_s is None:
        raise ValueError("budget.p_s is required for joint design")
    p_s, p_w, var_n = budget.p_s, budget.p_w, budget.var_n
    if p_cap is None:
        p_cap = 1e6 * p_w

    if theta > 0:
        lam_hi = 1.05 * p_s / (2.0 * var_n * theta)
    else:
        lam_hi = 2.0 * math.sqrt(p_s / (p_w * 1e-8)) / var_n
    lam_hi = max(lam_hi, 1e-6)
    lams = np.geomspace(lam_hi * 1e-8, lam_hi, 100)
    ps = np.geomspace(p_w * 1e-8, p_w, 100)

    vals = _joint_objective_grid(model, lams, ps, theta, p_s, var_n, p_cap)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[i, j])

    for _ in range(3):
        lam_lo = lams[max(i - 1, 0)]
        lam_hi2 = lams[min(i + 1, lams.size - 1)]
        p_lo = ps[max(j - 1, 0)]
        p_hi2 = ps[min(j + 1, ps.size - 1)]
        lams = np.geomspace(lam_lo, lam_hi2, 30)
        ps = np.unique(np.append(np.geomspace(p_lo, p_hi2, 30), min(p_hi2, p_w)))
        vals = _joint_objective_grid(model, lams, ps, theta, p_s, var_n, p_cap)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        best = max(best, float(vals[i, j]))

    lam_star, p_star = float(lams[i]), float(ps[j])

    # coordinate golden polish in the final refined window
    def f_lam(lam):
        hi = _p_hi(model, lam, p_cap)
        if p_star > hi:
            return -np.inf
        env = float(_envelope_values(model, lam, np.array([p_star]), hi)[0])
        return lam * (math.sqrt(p_s * p_star) - theta) - env - 0.5 * lam * lam * var_n * p_star

    lam_star, v1, _ = golden_max(
        f_lam, lams[max(i - 1, 0)], lams[min(i + 1, lams.size - 1)], rel_tol=1e-11
    )

    def f_p(p):
        hi = _p_hi(model, lam_star, p_cap)
        if p > hi:
            return -np.inf
        env = float(_envelope_values(model, lam_star, np.array([p]), hi)[0])
        return lam_star * (math.sqrt(p_s * p) - theta) - env - 0.5 * lam_star ** 2 * var_n * p

    p_star, v2, _ = golden_max(
        f_p, ps[max(j - 1, 0)], min(ps[min(j + 1, ps.size - 1)], p_w), rel_tol=1e-11
    )
    best = max(best, v1, v2)

    if best <= 0.0:
        root = math.sqrt(p_w)
        return JointDesignResult(0.0, 0.0, p_w, root, root, 1.0, _safe_curvature(model, 1.0, p_w))

    env = c_tilde(model, lam_star, p_star, _p_hi(model, lam_star, p_cap))
    return JointDesignResult(
        e_md=float(best),
        lambda_star=float(lam_star),
        p_star=float(p_star),
        level_a=math.sqrt(env.p0),
        level_b=math.sqrt(env.p1) if env.p1 > 0 else math.sqrt(max(env.p0, p_star)),
        mix_alpha=float(env.alpha),
        curvature=_safe_curvature(model, lam_star, _p_hi(model, lam_star, p_cap)),
    )


def _safe_curvature(model, lam, p_max):
    try:
        return classify_curvature(model, lam, p_max * (1.0 - 1e-9))
    except (DomainError, ValueError):
        return "mixed"


def result_atoms(result: JointDesignResult, budget: PowerBudget) -> JointAtoms:
    """Materialize a joint design as weight/signal atoms with S proportional to W."""
    if budget.p_s is None:
        raise ValueError("budget.p_s is required")
    ratio = math.sqrt(budget.p_s / result.p_star) if result.p_star > 0 else 0.0
    a, b, al = result.level_a, result.level_b, result.mix_alpha
    if a == b or al in (0.0, 1.0):
        w = np.array([b if al >= 0.5 else a])
        p = np.array([1.0])
    else:
        w = np.array([a, b])
        p = np.array([1.0 - al, al])
    return JointAtoms(w, ratio * w, p)


def two_level_direct(model: NoiseModel, budget: PowerBudget, theta: float) -> JointDesignResult:
    """Direct maximization over two weight magnitudes (a, b), their mixing
    weight, and the tilt, with the signal proportional to the correlator.

    Serves as an independent oracle for joint_md_exponent: no envelope is
    involved, only the exact two-atom MD objective under the constraint
    (1-alpha) a^2 + alpha b^2 = p_w.
    """
    if budget.p_s is None:
        raise ValueError("budget.p_s is required for joint design")
    p_w, p_s = budget.p_w, budget.p_s
    root_pw = math.sqrt(p_w)
    ratio = math.sqrt(p_s / p_w)

    def value(a, b):
        if b <= a:
            a2 = min(a, root_pw * (1.0 - 1e-12))
            b2 = max(b, root_pw * (1.0 + 1e-12))
        else:
            a2, b2 = a, b
        denom = b2 * b2 - a2 * a2
        alpha = (p_w - a2 * a2) / denom if denom > 0 else 1.0
        alpha = min(max(alpha, 0.0), 1.0)
        atoms = JointAtoms([a2, b2], [ratio * a2, ratio * b2], [1.0 - alpha, alpha])
        return md_exponent(atoms, theta, budget, model), alpha

    a_grid = np.linspace(0.0, root_pw, 41)
    b_grid = np.geomspace(root_pw, 40.0 * root_pw, 61)
    best_val, best = -math.inf, None
    # single-level candidate
    single = JointAtoms([root_pw], [ratio * root_pw], [1.0])
    res = md_exponent(single, theta, budget, model)
    best_val, best = res.value, (root_pw, root_pw, 1.0, res)
    for a in a_grid:
        for b in b_grid:
            if b <= a:
                continue
            res, alpha = value(a, b)
            if res.value > best_val:
                best_val, best = res.value, (a, b, alpha, res)

    a_star, b_star, alpha_star, res = best
    span_a = a_grid[1] - a_grid[0]
    for _ in range(3):
        a_star, _, _ = golden_max(
            lambda a: value(a, b_star)[0].value,
            max(a_star - span_a, 0.0),
            min(a_star + span_a, root_pw),
            rel_tol=1e-10,
            max_iter=60,
        )
        b_lo = max(b_star / 1.6, root_pw)
        b_hi_ = b_star * 1.6
        b_star, _, _ = golden_max(
            lambda b: value(a_star, b)[0].value, b_lo, b_hi_, rel_tol=1e-10, max_iter=60
        )
        span_a *= 0.25
    res, alpha_star = value(a_star, b_star)
    if res.value <= 0.0:
        return JointDesignResult(
            0.0, 0.0, p_w, root_pw, root_pw, 1.0, _safe_curvature(model, 1.0, p_w)
        )
    # collapse numerically-equal levels to the single-level description
    if alpha_star >= 1.0 - 1e-9 or b_star - a_star < 1e-9 * root_pw:
        a_star = b_star = root_pw
        alpha_star = 1.0
        res = md_exponent(single, theta, budget, model)
    lam_ref = res.lambda_star if res.lambda_star > 0 else 1.0
    return JointDesignResult(
        e_md=float(res.value),
        lambda_star=float(res.lambda_star),
        p_star=p_w,
        level_a=float(a_star),
        level_b=float(b_star),
        mix_alpha=float(alpha_star),
        curvature=_safe_curvature(model, lam_ref, p_w),
    )
