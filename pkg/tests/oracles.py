"""Independent oracles shared by the test modules.

Everything here computes expectations directly (enumeration, Gaussian
tail integrals, quadrature over the noise density, or fresh Monte Carlo)
without touching the transform-domain code paths under test.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import log_ndtr, ndtr, ndtri

import corrdet as cd


def expect_over_z(model, fn):
    """E[fn(Z)] by enumeration or quadrature against the model density."""
    if isinstance(model, cd.BinarySymmetric):
        return 0.5 * fn(model.z0) + 0.5 * fn(-model.z0)
    if isinstance(model, cd.Gaussian):
        s = math.sqrt(model.var_z)
        return quad(
            lambda z: math.exp(-z * z / (2 * model.var_z))
            / math.sqrt(2 * math.pi * model.var_z)
            * fn(z),
            -10 * s,
            10 * s,
            limit=300,
        )[0]
    if isinstance(model, cd.Uniform):
        return quad(lambda z: fn(z) / (2 * model.z0), -model.z0, model.z0, limit=300)[0]
    if isinstance(model, cd.Laplacian):
        q = model.q
        return quad(
            lambda z: 0.5 * q * math.exp(-q * abs(z)) * fn(z), -80 / q, 80 / q, limit=500
        )[0]
    if isinstance(model, cd.MixtureBinaryLaplace):
        bi = 0.5 * fn(model.z0) + 0.5 * fn(-model.z0)
        q = model.q
        la = quad(
            lambda z: 0.5 * q * math.exp(-q * abs(z)) * fn(z), -80 / q, 80 / q, limit=500
        )[0]
        return model.delta * bi + (1 - model.delta) * la
    raise TypeError(model)


def c_alpha_energy_direct(model, v, alpha, lam, var_n):
    """ln E exp(-v X - alpha lam X^2) - var_n v^2/2 with X = Z + N.

    The inner Gaussian integral over N is a complete-the-square closed
    form; the outer expectation over Z is direct.
    """
    c = alpha * lam

    def inner(z):
        a_coef = 1.0 / (2 * var_n) + c
        b_coef = z / var_n - v
        d_coef = z * z / (2 * var_n)
        return (1.0 / math.sqrt(1 + 2 * c * var_n)) * math.exp(
            b_coef * b_coef / (4 * a_coef) - d_coef
        )

    return math.log(expect_over_z(model, inner)) - 0.5 * var_n * v * v


def c_alpha_abs_direct(model, w, s, alpha, lam, var_n):
    """ln E exp(-lam w X - alpha lam |s+X|) - var_n (lam w)^2/2, X = Z + N.

    The |.| splits the inner integral over N into two Gaussian tails.
    """
    sig = math.sqrt(var_n)
    a = alpha * lam
    v = lam * w

    def inner(z):
        c = s + z

        def tail_hi(t, b):  # E[e^{tN} 1{N > b}]
            return math.exp(0.5 * t * t * var_n + log_ndtr((t * var_n - b) / sig))

        def tail_lo(t, b):  # E[e^{tN} 1{N < b}]
            return math.exp(0.5 * t * t * var_n + log_ndtr((b - t * var_n) / sig))

        hi = math.exp(-v * z - a * c) * tail_hi(-(v + a), -c)
        lo = math.exp(-v * z + a * c) * tail_lo(-(v - a), -c)
        return hi + lo

    return math.log(expect_over_z(model, inner)) - 0.5 * var_n * v * v


def md_probability_exhaustive_binary(model, w, s, theta, var_n):
    """Exact miss probability for binary interference at small n:
    enumerate all sign patterns and fold the Gaussian part into a tail."""
    w = np.asarray(w, float)
    s = np.asarray(s, float)
    n = w.size
    norm = float(np.linalg.norm(w)) * math.sqrt(var_n)
    total = 0.0
    for mask in range(2 ** n):
        z = np.where([(mask >> t) & 1 for t in range(n)], model.z0, -model.z0)
        mean = float(np.dot(w, s + z))
        total += float(ndtr((theta * n - mean) / norm))
    return total / 2 ** n


def energy_detector_mc_slope(model, w_pat, s_pat, alpha, theta, var_n, lam, n_values, trials, seed):
    """Tilted Monte Carlo slope for the correlation+energy statistic with
    Gaussian interference: X = Z+N is sampled from the quadratic-tilted
    Gaussian in closed form, so the estimator is exact and independent of
    the transform-domain implementation."""
    assert isinstance(model, cd.Gaussian)
    s2 = model.var_z + var_n
    rng = np.random.default_rng(seed)
    rows = []
    for n in n_values:
        reps = -(-n // len(w_pat))
        w = np.tile(w_pat, reps)[:n]
        s = np.tile(s_pat, reps)[:n]
        u = w + 2 * alpha * s
        shrink = 1.0 + 2 * alpha * lam * s2
        var_t = s2 / shrink
        mean_t = -lam * u * var_t
        # per-index log normalizer ln E exp(-lam(u X + alpha X^2))
        log_g = -0.5 * math.log(shrink) + lam * lam * u * u * s2 / (2 * shrink)
        x = rng.normal(mean_t, math.sqrt(var_t), size=(trials, n))
        stat = (w * (s + x) + alpha * (s + x) ** 2).sum(axis=1)
        logw = lam * (x @ u) + alpha * lam * (x * x).sum(axis=1) + log_g.sum()
        vals = np.where(stat < theta * n, np.exp(logw), 0.0)
        prob = vals.mean()
        rel = vals.std(ddof=1) / math.sqrt(trials) / prob if prob > 0 else math.inf
        rows.append({"n": n, "prob_estimate": prob, "rel_stderr": rel})
    return cd.estimate_slope(rows)


def abs_detector_mc_slope(model, w_pat, s_pat, alpha, theta, var_n, lam, n_values, trials, seed):
    """Tilted Monte Carlo slope for the correlation+|.| statistic with
    Gaussian interference, via a two-piece truncated-Gaussian tilt."""
    assert isinstance(model, cd.Gaussian)
    s2 = model.var_z + var_n
    sig = math.sqrt(s2)
    a = alpha * lam
    rng = np.random.default_rng(seed)
    rows = []
    for n in n_values:
        reps = -(-n // len(w_pat))
        w = np.tile(w_pat, reps)[:n]
        s = np.tile(s_pat, reps)[:n]
        v = lam * w
        # piece '+': x > -s with linear tilt -(v+a); piece '-': x < -s, -(v-a)
        m_hi = -(v + a) * s2
        m_lo = -(v - a) * s2
        log_mass_hi = -a * s + 0.5 * (v + a) ** 2 * s2 + log_ndtr((m_hi + s) / sig)
        log_mass_lo = a * s + 0.5 * (v - a) ** 2 * s2 + log_ndtr(-(m_lo + s) / sig)
        log_g = np.logaddexp(log_mass_hi, log_mass_lo)
        p_hi = np.exp(log_mass_hi - log_g)
        u1 = rng.uniform(size=(trials, n))
        u2 = rng.uniform(size=(trials, n))
        take_hi = u1 < p_hi
        lo_edge_hi = ndtr((-s - m_hi) / sig)
        hi_edge_lo = ndtr((-s - m_lo) / sig)
        x_hi = m_hi + sig * ndtri(lo_edge_hi + u2 * (1 - lo_edge_hi))
        x_lo = m_lo + sig * ndtri(u2 * hi_edge_lo)
        x = np.where(take_hi, x_hi, x_lo)
        stat = (w * (s + x) + alpha * np.abs(s + x)).sum(axis=1)
        logw = (v * x + a * np.abs(s + x) + log_g).sum(axis=1)
        vals = np.where(stat < theta * n, np.exp(logw), 0.0)
        prob = vals.mean()
        rel = vals.std(ddof=1) / math.sqrt(trials) / prob if prob > 0 else math.inf
        rows.append({"n": n, "prob_estimate": prob, "rel_stderr": rel})
    return cd.estimate_slope(rows)
