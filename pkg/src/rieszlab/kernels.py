"""Homogeneous singular-integral kernels K(x) = omega(x/|x|) / |x|^n.

Three families: the Riesz kernels with profile x_j/|x|, the second-order
kernels with profiles x_i x_j/|x|^2 (i != j) and x_j^2/|x|^2 - 1/n, and the
Hilbert kernel (the n = 1 Riesz kernel, kept as its own kind).  Closed forms
cover the normalization, the sphere L^1 norm (exact for Riesz/Hilbert, an
upper bound for second order), the profile gradient, and the dimensional
constant; Monte Carlo checkers cover the zero sphere mean and the integral
Lipschitz condition; a deterministic 1-D quadrature path serves as the
independent oracle for sphere integrals.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import rng
from .errors import DomainError, ToleranceError

RIESZ = "riesz"
SECOND_ORDER = "riesz2"
HILBERT = "hilbert"

_KINDS = (RIESZ, SECOND_ORDER, HILBERT)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel identity: dimension, family, component indices (1-based)."""

    n: int
    kind: str
    i: int = 1
    j: int = 1

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise DomainError("dimension n must be a positive integer")
        if self.kind not in _KINDS:
            raise DomainError("unknown kernel kind %r" % (self.kind,))
        if self.kind == HILBERT and self.n != 1:
            raise DomainError("the Hilbert kernel is defined only for n = 1")
        if self.kind == SECOND_ORDER and self.n < 2:
            # at n = 1 the only second-order profile is identically zero
            raise DomainError("second-order kernels require n >= 2")
        for idx in (self.i, self.j):
            if not isinstance(idx, int) or not 1 <= idx <= self.n:
                raise DomainError("component indices must lie in 1..n")

    @property
    def diagonal(self):
        return self.kind == SECOND_ORDER and self.i == self.j


def riesz(n, j=1):
    return KernelSpec(n, RIESZ, j, j)


def hilbert():
    return KernelSpec(1, HILBERT, 1, 1)


def second_order(n, i, j):
    return KernelSpec(n, SECOND_ORDER, i, j)


def normalization(spec):
    """Constant multiplying the raw profile; computed in log space."""
    n = spec.n
    if spec.kind == SECOND_ORDER:
        return math.exp(math.lgamma(n / 2 + 1) - (n / 2) * math.log(math.pi))
    return math.exp(math.lgamma((n + 1) / 2) - ((n + 1) / 2) * math.log(math.pi))


def profile(spec, x):
    """Raw 0-homogeneous profile (no normalization). x: array (..., n)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if spec.kind in (RIESZ, HILBERT):
        return x[..., spec.j - 1] / np.sqrt(r2)
    if spec.i != spec.j:
        return x[..., spec.i - 1] * x[..., spec.j - 1] / r2
    return x[..., spec.j - 1] ** 2 / r2 - 1.0 / spec.n


def omega(spec, x):
    """Normalized profile Omega = normalization * profile."""
    return normalization(spec) * profile(spec, x)


def kernel_values(spec, x):
    """K at a batch of points, no pole checking (callers mask poles)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    return omega(spec, x) * r2 ** (-spec.n / 2)


def eval_kernel(spec, x):
    """K at one point; the origin is outside the domain."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise DomainError("point must have shape (n,)")
    if not np.all(np.isfinite(x)):
        raise DomainError("point must be finite")
    if np.dot(x, x) == 0.0:
        raise DomainError("kernel undefined at the origin")
    return float(kernel_values(spec, x))


def profile_gradient(spec, x):
    """Gradient of the raw profile. x: array (..., n) of nonzero points."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    n = spec.n
    grad = np.zeros_like(x)
    if spec.kind in (RIESZ, HILBERT):
        j = spec.j - 1
        r = np.sqrt(r2)
        grad += -x[..., j:j + 1] * x / (r2 * r)
        grad[..., j] += 1.0 / r[..., 0]
        return grad
    i, j = spec.i - 1, spec.j - 1
    if i != j:
        grad += -2.0 * (x[..., i:i + 1] * x[..., j:j + 1]) * x / (r2 * r2)
        grad[..., i] += x[..., j] / r2[..., 0]
        grad[..., j] += x[..., i] / r2[..., 0]
        return grad
    grad += -2.0 * x[..., j:j + 1] ** 2 * x / (r2 * r2)
    grad[..., j] += 2.0 * x[..., j] / r2[..., 0]
    return grad


def eval_omega_gradient(spec, x):
    """Closed-form gradient of the raw profile at one nonzero point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise DomainError("point must have shape (n,)")
    if np.dot(x, x) == 0.0:
        raise DomainError("gradient undefined at the origin")
    return profile_gradient(spec, x)


def profile_gradient_sup(spec):
    """sup over x != 0 of |x| * |grad profile(x)|: 1, sqrt(5), or 2."""
    if spec.kind in (RIESZ, HILBERT):
        return 1.0
    return 2.0 if spec.diagonal else math.sqrt(5.0)


def omega_sup(spec):
    """sup of |Omega| on the unit sphere, closed form."""
    c = normalization(spec)
    if spec.kind in (RIESZ, HILBERT):
        return c
    if spec.diagonal:
        return c * (1.0 - 1.0 / spec.n)
    return c / 2.0


def sphere_surface_area(n):
    """|S^{n-1}|; counting measure (total mass 2) when n = 1."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return math.exp(math.log(2.0) + (n / 2) * math.log(math.pi) - math.lgamma(n / 2))


def ball_volume(n):
    if n < 1:
        raise DomainError("n must be >= 1")
    return math.exp((n / 2) * math.log(math.pi) - math.lgamma(n / 2 + 1))


def dimensional_constant(n):
    """|B(0,1)| times the Riesz normalization; decays like n^{-1/2}."""
    if not isinstance(n, int) or n < 1:
        raise DomainError("n must be a positive integer")
    return math.exp(
        math.log(2.0)
        + math.lgamma((n + 1) / 2)
        - math.lgamma(n / 2)
        - 0.5 * math.log(math.pi)
    ) / n


@dataclass(frozen=True)
class SphereNorm:
    """Closed-form sphere L^1 value; exact=False marks an upper bound."""

    value: float
    exact: bool


def sphere_l1_norm(spec):
    if spec.kind in (RIESZ, HILBERT):
        return SphereNorm(2.0 / math.pi, True)
    # second order: the sharp closed form is not asserted, only the bound
    return SphereNorm(2.0 if spec.diagonal else 1.0, False)


@dataclass(frozen=True)
class SphereIntegralEstimate:
    value: float
    standard_error: float
    samples: int


def _sphere_mc(spec, func, samples, seed, stream, threads=1):
    if samples < 1000:
        raise DomainError("sphere MC requires samples >= 1000")
    area = sphere_surface_area(spec.n)

    def chunk(gen, m, _c):
        theta = rng.uniform_sphere(gen, m, spec.n)
        vals = func(theta)
        return float(np.sum(vals)), float(np.sum(vals * vals)), m

    mean, se, m = rng.combine_mean_se(
        rng.run_chunked(samples, chunk, seed, stream, threads=threads)
    )
    return SphereIntegralEstimate(mean * area, se * area, m)


def sphere_l1_norm_mc(spec, samples, seed, threads=1):
    return _sphere_mc(
        spec, lambda t: np.abs(omega(spec, t)), samples, seed, rng.SPHERE_NORM, threads
    )


def sphere_mean_zero_check(spec, samples, seed, threads=1):
    """MC estimate of the sphere mean of Omega; should sit within 3 SE of 0."""
    return _sphere_mc(
        spec, lambda t: omega(spec, t), samples, seed, rng.SPHERE_MEAN, threads
    )


def lipschitz_condition_ratio(spec, xi, delta, samples, seed, threads=1):
    """MC estimate of int |Omega(theta - xi delta) - Omega(theta)| dsigma
    over (n * delta * int |Omega| dsigma).

    xi must be a unit vector and delta must lie in (0, 1/n): at delta = 1/n
    the displaced argument may reach the origin where the profile blows up.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (spec.n,):
        raise DomainError("xi must have shape (n,)")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise DomainError("xi must be a unit vector")
    if not 0.0 < delta < 1.0 / spec.n:
        raise DomainError("delta must lie in the open interval (0, 1/n)")
    if samples < 1000:
        raise DomainError("sphere MC requires samples >= 1000")

    area = sphere_surface_area(spec.n)
    closed = sphere_l1_norm(spec)

    def chunk(gen, m, _c):
        theta = rng.uniform_sphere(gen, m, spec.n)
        num = np.abs(omega(spec, theta - delta * xi) - omega(spec, theta))
        den = np.abs(omega(spec, theta))
        return (
            float(np.sum(num)),
            float(np.sum(num * num)),
            m,
            float(np.sum(den)),
        )

    parts = rng.run_chunked(samples, chunk, seed, rng.LIPSCHITZ, threads=threads)
    num_mean, _, _ = rng.combine_mean_se([(p[0], p[1], p[2]) for p in parts])
    numerator = num_mean * area
    if closed.exact:
        denominator = closed.value
    else:
        # same draw, so the ratio uses common random numbers
        denominator = math.fsum(p[3] for p in parts) / samples * area
    return numerator / (spec.n * delta * denominator)


# ---------------------------------------------------------------------------
# Deterministic quadrature oracle for sphere integrals.
#
# Integrands depending on one coordinate reduce over S^{n-1} to
#   |S^{n-2}| * int_0^pi f(cos phi) sin^{n-2} phi dphi        (n >= 2),
# and those depending on two coordinates reduce to a polar integral over the
# unit disk with weight (1 - rho^2)^{(n-4)/2}, smoothed by rho = sin psi.
# ---------------------------------------------------------------------------


def _slice_integral(n, f, kinks=()):
    """Reduce int_{S^{n-1}} f(theta_1) dsigma to one angular quadrature.

    kinks: values of theta_1 where f has a derivative jump, passed through as
    quadrature breakpoints so the error estimate stays honest.
    """
    if n == 1:
        return f(1.0) + f(-1.0)
    points = sorted(math.acos(t) for t in kinks if -1.0 < t < 1.0)
    val, err = integrate.quad(
        lambda p: f(math.cos(p)) * math.sin(p) ** (n - 2),
        0.0,
        math.pi,
        points=points or None,
        limit=200,
    )
    if err > 1e-9 * max(1.0, abs(val)):
        raise ToleranceError("sphere slice quadrature did not converge", val)
    return sphere_surface_area(n - 1) * val


def abs_coordinate_sphere_integral(n):
    """int_{S^{n-1}} |theta_1| dsigma by quadrature (the V_n oracle)."""
    return _slice_integral(n, abs, kinks=(0.0,))


def sphere_l1_quadrature(spec):
    """Deterministic sphere L^1 norm of Omega (true value, not a bound)."""
    n = spec.n
    c = normalization(spec)
    if spec.kind in (RIESZ, HILBERT):
        return c * abs_coordinate_sphere_integral(n)
    if spec.diagonal:
        root = 1.0 / math.sqrt(n)
        return c * _slice_integral(
            n, lambda t: abs(t * t - 1.0 / n), kinks=(-root, root)
        )
    if n == 2:
        val, _ = integrate.quad(
            lambda a: abs(math.cos(a) * math.sin(a)), 0.0, 2.0 * math.pi, limit=200
        )
        return c * val
    # two-coordinate reduction; angular |cos sin| integral equals 2
    radial, err = integrate.quad(
        lambda psi: math.sin(psi) ** 3 * math.cos(psi) ** (n - 3), 0.0, math.pi / 2
    )
    if err > 1e-10 * max(1.0, radial):
        raise ToleranceError("sphere quadrature did not converge", radial)
    return c * sphere_surface_area(n - 2) * 2.0 * radial
