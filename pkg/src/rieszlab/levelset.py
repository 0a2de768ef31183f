"""Level sets of kernel transforms of point masses.

Exact interval solvers for the one dimensional kernel, a closed form for a
single mass in any dimension, and a covering-ball Monte Carlo estimator for
everything else. All estimators report the volume of {|T nu| > lambda}.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import kernels, measures
from .errors import DomainError, ToleranceError
from .rng import (
    LEVELSET,
    LEVELSET_RETRY,
    check_seed,
    combine_mean_se,
    generator,
    run_chunked,
    uniform_ball,
)

MIN_SAMPLES = 1000
_POLE_TRIES = 64
_BRACKET_TRIES = 200


@dataclass(frozen=True)
class LevelSetEstimate:
    """Volume of {|T nu| > threshold}; exact methods report zero error."""

    value: float
    standard_error: float
    samples: int
    method: str
    threshold: float


@dataclass(frozen=True)
class FunctionalEstimate:
    """threshold * volume / total variation, errors propagated linearly."""

    value: float
    standard_error: float
    samples: int
    method: str
    threshold: float


def _check_threshold(lam):
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise DomainError("threshold must be a positive finite number")
    return lam


def _sorted_line_measure(nu):
    if nu.n != 1:
        raise DomainError("exact interval solver requires dimension 1")
    c = nu.centers[:, 0]
    order = np.argsort(c, kind="stable")
    c = c[order]
    a = nu.masses[order]
    if np.any(np.diff(c) == 0.0):
        raise DomainError(
            "duplicate centers; apply merge_duplicate_centers first"
        )
    return a, c


def _line_transform(a, c, x):
    return float(np.sum(a / (x - c)) / math.pi)


def _plus_roots_vieta(a, c, lam):
    """Right endpoints of {T nu > lam}, one per pole, via the companion matrix.

    The endpoints are the roots of pi lam prod(x - c_k) = sum_k a_k
    prod_{j != k}(x - c_j); centering and scaling the poles first keeps the
    polynomial well conditioned.
    """
    mu = float(np.mean(c))
    s = float(np.max(np.abs(c - mu)))
    if s == 0.0:
        s = 1.0
    cs = (c - mu) / s
    coeffs = math.pi * lam * s * np.poly(cs)
    for k in range(len(cs)):
        coeffs[1:] -= a[k] * np.poly(np.delete(cs, k))
    roots = np.roots(coeffs)
    spread = max(1.0, float(np.max(np.abs(roots.real))))
    if roots.size and float(np.max(np.abs(roots.imag))) > 1e-7 * spread:
        raise ToleranceError("interval endpoints lost accuracy to rounding")
    return np.sort(roots.real) * s + mu


def _plus_roots_bisection(a, c, lam):
    """Same endpoints, one bracketed root per gap between consecutive poles."""

    def f(x):
        return _line_transform(a, c, x) - lam

    tv = float(np.sum(a))
    roots = []
    for k in range(len(c)):
        left = c[k]
        if k + 1 < len(c):
            # the transform falls to -inf at the next pole
            off = (c[k + 1] - left) / 4.0
            hi = c[k + 1] - off
            for _ in range(_BRACKET_TRIES):
                if f(hi) < 0.0:
                    break
                off /= 2.0
                hi = c[k + 1] - off
            else:
                raise ToleranceError("could not bracket an interval endpoint")
        else:
            # beyond the last pole T nu <= tv / (pi (x - c_max))
            hi = left + tv / (math.pi * lam)
            for _ in range(_BRACKET_TRIES):
                if f(hi) < 0.0:
                    break
                hi = left + 2.0 * (hi - left)
            else:
                raise ToleranceError("could not bracket an interval endpoint")
        off = (hi - left) / 2.0
        lo = left + off
        for _ in range(_BRACKET_TRIES):
            if f(lo) > 0.0:
                break
            off /= 2.0
            lo = left + off
        else:
            raise ToleranceError("could not bracket an interval endpoint")
        roots.append(brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16))
    return np.asarray(roots)


_PLUS_SOLVERS = {"vieta": _plus_roots_vieta, "bisection": _plus_roots_bisection}


def hilbert_levelset_sides(nu, lam, method="vieta"):
    """Intervals of {T nu > lam} and {T nu < -lam} on the line.

    Each positive-side interval opens at a pole; each negative-side interval
    closes at one (the reflection x -> -x swaps the sides).
    """
    lam = _check_threshold(lam)
    if method not in _PLUS_SOLVERS:
        raise DomainError("method must be 'vieta' or 'bisection'")
    solve = _PLUS_SOLVERS[method]
    a, c = _sorted_line_measure(nu)
    rp = solve(a, c, lam)
    rm = solve(a[::-1], -c[::-1], lam)
    plus = [(float(c[k]), float(rp[k])) for k in range(len(c))]
    minus = [(-float(rm[k]), float(c[::-1][k])) for k in range(len(c))][::-1]
    return plus, minus


def hilbert_levelset_exact(nu, lam, method="vieta"):
    """Exact volume of {|T nu| > lam} for the one dimensional kernel."""
    plus, minus = hilbert_levelset_sides(nu, lam, method)
    total = math.fsum(r - l for l, r in plus) + math.fsum(r - l for l, r in minus)
    return LevelSetEstimate(total, 0.0, 0, method, lam)


@lru_cache(maxsize=None)
def unit_levelset_constant(n):
    """Volume of {|K| > 1} for a unit coordinate-kernel mass in dimension n.

    Equals 2 / (pi n): in polar coordinates the radial integral of r^(n-1)
    up to |Omega(theta)|^(1/n) is |Omega(theta)| / n, so the volume is the
    sphere L^1 norm over n. The closed form is only served once the
    quadrature oracle confirms it for this n.
    """
    quad = kernels.sphere_l1_quadrature(kernels.riesz(n, 1))
    if abs(quad - 2.0 / math.pi) > 1e-8:
        raise ToleranceError(
            "sphere quadrature disagrees with the closed form constant",
            partial=quad / n,
        )
    return 2.0 / (math.pi * n)


def unit_levelset_volume(spec):
    """(volume of {|K| > 1} at unit mass, whether it is a closed form)."""
    if spec.kind in (kernels.RIESZ, kernels.HILBERT):
        return unit_levelset_constant(spec.n), True
    return kernels.sphere_l1_quadrature(spec) / spec.n, False


def single_mass_levelset_exact(spec, nu, lam):
    """|{|a K(x - c)| > lam}| = (a / lam) |{|K| > 1}| by -n homogeneity."""
    lam = _check_threshold(lam)
    if spec.n != nu.n:
        raise DomainError("kernel and measure dimensions differ")
    if nu.count != 1:
        raise DomainError("closed form requires a single mass; use mc_levelset")
    vol, _ = unit_levelset_volume(spec)
    value = float(nu.masses[0]) / lam * vol
    return LevelSetEstimate(value, 0.0, 0, "single-mass", lam)


def covering_radii(spec, nu, lam):
    """Ball radii rho_k with rho_k^n = N sup|Omega| a_k / lam.

    Outside the union of B(c_k, rho_k) the triangle inequality gives
    |T nu| <= sum_k a_k sup|Omega| / rho_k^n = lam, so the open level set
    is contained in the union.
    """
    lam = _check_threshold(lam)
    sup = kernels.omega_sup(spec)
    return (nu.count * sup * nu.masses / lam) ** (1.0 / spec.n)


def mc_levelset(spec, nu, lam, samples, seed, threads=1):
    """Monte Carlo volume of {|T nu| > lam}.

    Points are drawn inside the covering union of balls, ball k chosen with
    probability proportional to its volume, and each sample weighted by the
    union volume over its cover count. The estimate is unbiased and is byte
    identical across thread counts for a fixed seed.
    """
    lam = _check_threshold(lam)
    if spec.n != nu.n:
        raise DomainError("kernel and measure dimensions differ")
    if samples < MIN_SAMPLES:
        raise DomainError("need at least %d samples" % MIN_SAMPLES)
    check_seed(seed)

    n = spec.n
    rho = covering_radii(spec, nu, lam)
    vball = kernels.ball_volume(n)
    vols = vball * rho**n
    vtot = float(np.sum(vols))
    pick = np.cumsum(vols) / vtot
    centers = nu.centers
    masses = nu.masses
    count = nu.count

    def draw(gen, size):
        idx = np.searchsorted(pick, gen.random(size), side="right")
        idx = np.minimum(idx, count - 1)
        return centers[idx] + rho[idx, None] * uniform_ball(gen, size, n)

    def body(gen, size, chunk_index):
        pts = draw(gen, size)
        diffs = pts[:, None, :] - centers[None, :, :]
        dist = np.linalg.norm(diffs, axis=2)
        # a draw can land on a pole only with vanishing probability; redraw
        # those rows from the retry stream so the estimate stays unbiased
        for tries in range(_POLE_TRIES):
            rows = np.flatnonzero(np.min(dist, axis=1) <= measures.POLE_RADIUS)
            if rows.size == 0:
                break
            retry = generator(seed, LEVELSET_RETRY, unit=chunk_index, chunk=tries)
            pts[rows] = draw(retry, rows.size)
            diffs[rows] = pts[rows, None, :] - centers[None, :, :]
            dist[rows] = np.linalg.norm(diffs[rows], axis=2)
        else:
            raise ToleranceError("could not draw sample points off the poles")
        cover = np.maximum(np.sum(dist <= rho[None, :], axis=1), 1)
        vals = kernels.kernel_values(spec, diffs.reshape(-1, n)).reshape(size, count)
        hit = np.abs(vals @ masses) > lam
        w = np.where(hit, vtot / cover, 0.0)
        return float(np.sum(w)), float(np.dot(w, w)), size

    partials = run_chunked(samples, body, seed, LEVELSET, threads=threads)
    mean, se, m = combine_mean_se(partials)
    return LevelSetEstimate(mean, se, m, "mc", lam)


def levelset_measure(
    spec, nu, lam, method="auto", samples=None, seed=None, threads=1
):
    """Volume of {|T nu| > lam}, routed to the best available estimator.

    auto prefers the exact interval solver in dimension 1, then the
    single-mass closed form, then Monte Carlo. Exact paths merge duplicate
    centers first; the Monte Carlo path takes the measure as given.
    """
    if spec.n != nu.n:
        raise DomainError("kernel and measure dimensions differ")
    one_dim_exact = spec.n == 1 and spec.kind in (kernels.RIESZ, kernels.HILBERT)
    if method == "auto":
        if one_dim_exact:
            method = "vieta"
        elif measures.merge_duplicate_centers(nu).count == 1:
            method = "single-mass"
        else:
            method = "mc"
    if method in ("vieta", "bisection"):
        if not one_dim_exact:
            raise DomainError("interval solver applies to the n = 1 kernel only")
        return hilbert_levelset_exact(
            measures.merge_duplicate_centers(nu), lam, method
        )
    if method == "single-mass":
        return single_mass_levelset_exact(
            spec, measures.merge_duplicate_centers(nu), lam
        )
    if method == "mc":
        if samples is None or seed is None:
            raise DomainError("mc method requires samples and seed")
        return mc_levelset(spec, nu, lam, samples, seed, threads)
    raise DomainError("unknown method %r" % (method,))


def weaktype_functional(
    spec, nu, lam, method="auto", samples=None, seed=None, threads=1
):
    """threshold * |{|T nu| > threshold}| / ||nu||.

    For the one dimensional kernel this is 2/pi for every positive measure
    and every threshold; in general it is bounded by a constant of order
    1/sqrt(n) times the kernel's sphere norm.
    """
    est = levelset_measure(
        spec, nu, lam, method=method, samples=samples, seed=seed, threads=threads
    )
    scale = est.threshold / measures.total_variation(nu)
    return FunctionalEstimate(
        est.value * scale,
        est.standard_error * scale,
        est.samples,
        est.method,
        est.threshold,
    )
