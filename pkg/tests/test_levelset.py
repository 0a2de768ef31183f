import math

import numpy as np
import pytest

from rieszlab import kernels as K
from rieszlab import levelset as L
from rieszlab import measures as M
from rieszlab.errors import DomainError


def line_measure(gen, count):
    return M.PointMassMeasure(
        n=1,
        masses=gen.uniform(0.2, 3.0, size=count),
        centers=np.sort(gen.normal(size=count))[:, None] * 4.0,
    )


def test_two_pole_frozen_interval_solution():
    # unit poles at -1, 1 at threshold 1: endpoints solve pi x^2 - 2x - pi = 0
    nu = M.PointMassMeasure(
        n=1, masses=np.array([1.0, 1.0]), centers=np.array([[-1.0], [1.0]])
    )
    root = (1.0 + math.sqrt(1.0 + math.pi**2)) / math.pi
    plus, minus = L.hilbert_levelset_sides(nu, 1.0)
    assert plus[1] == pytest.approx((1.0, root), rel=1e-12)
    assert minus[0] == pytest.approx((-root, -1.0), rel=1e-12)
    est = L.hilbert_levelset_exact(nu, 1.0)
    assert est.value == pytest.approx(4.0 / math.pi, rel=1e-12)
    assert est.standard_error == 0.0 and est.samples == 0


@pytest.mark.parametrize("method,tol", [("vieta", 1e-10), ("bisection", 1e-8)])
def test_line_functional_constant(method, tol):
    # lambda |{|T nu| > lambda}| / ||nu|| = 2/pi for every positive measure
    gen = np.random.default_rng(17)
    for count in (1, 2, 3, 5, 8):
        nu = line_measure(gen, count)
        for lam in (0.5, 1.0, 2.0):
            est = L.hilbert_levelset_exact(nu, lam, method)
            got = lam * est.value / M.total_variation(nu)
            assert got == pytest.approx(2.0 / math.pi, rel=tol)


def test_interval_methods_agree():
    gen = np.random.default_rng(23)
    for count in (2, 4, 7):
        nu = line_measure(gen, count)
        pv, mv = L.hilbert_levelset_sides(nu, 0.8, "vieta")
        pb, mb = L.hilbert_levelset_sides(nu, 0.8, "bisection")
        assert np.allclose(pv, pb, rtol=1e-8, atol=1e-10)
        assert np.allclose(mv, mb, rtol=1e-8, atol=1e-10)


def test_sides_structure():
    gen = np.random.default_rng(29)
    nu = line_measure(gen, 5)
    lam = 1.3
    plus, minus = L.hilbert_levelset_sides(nu, lam)
    cs = np.sort(nu.centers[:, 0])
    a = nu.masses[np.argsort(nu.centers[:, 0])]
    # positive intervals open at the poles, negative ones close at them
    assert np.allclose([l for l, _ in plus], cs)
    assert np.allclose([r for _, r in minus], cs[::-1][::-1])
    for _, r in plus:
        val = float(np.sum(a / (r - cs)) / math.pi)
        assert val == pytest.approx(lam, rel=1e-9)
    for l, _ in minus:
        val = float(np.sum(a / (l - cs)) / math.pi)
        assert val == pytest.approx(-lam, rel=1e-9)
    tv = M.total_variation(nu)
    assert math.fsum(r - l for l, r in plus) == pytest.approx(
        tv / (math.pi * lam), rel=1e-10
    )
    assert math.fsum(r - l for l, r in minus) == pytest.approx(
        tv / (math.pi * lam), rel=1e-10
    )


def test_exact_solver_rejects_duplicates_and_bad_threshold():
    nu = M.PointMassMeasure(
        n=1, masses=np.array([1.0, 2.0]), centers=np.array([[0.5], [0.5]])
    )
    with pytest.raises(DomainError):
        L.hilbert_levelset_exact(nu, 1.0)
    ok = M.PointMassMeasure(n=1, masses=np.array([1.0]), centers=np.array([[0.0]]))
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(DomainError):
            L.hilbert_levelset_exact(ok, bad)


def test_unit_levelset_constant_scaling():
    for n in range(1, 12):
        assert L.unit_levelset_constant(n) * n == pytest.approx(
            2.0 / math.pi, rel=1e-12
        )
        assert L.unit_levelset_constant(n) <= K.dimensional_constant(n) + 1e-15
    assert L.unit_levelset_constant(1) == pytest.approx(
        K.dimensional_constant(1), rel=1e-12
    )


def test_single_mass_closed_form():
    nu = M.PointMassMeasure(
        n=3, masses=np.array([2.0]), centers=np.array([[0.5, -1.0, 2.0]])
    )
    est = L.single_mass_levelset_exact(K.riesz(3, 2), nu, 0.7)
    assert est.value == pytest.approx(2.0 / 0.7 * 2.0 / (3.0 * math.pi), rel=1e-12)
    assert est.method == "single-mass"
    two = M.PointMassMeasure(
        n=3, masses=np.array([1.0, 1.0]), centers=np.array([[0.0] * 3, [1.0] * 3])
    )
    with pytest.raises(DomainError):
        L.single_mass_levelset_exact(K.riesz(3, 2), two, 1.0)


def test_covering_balls_contain_level_set():
    gen = np.random.default_rng(37)
    for n in (1, 2, 3):
        spec = K.hilbert() if n == 1 else K.riesz(n, 1)
        nu = M.PointMassMeasure(
            n=n,
            masses=gen.uniform(0.2, 2.0, size=3),
            centers=gen.normal(size=(3, n)),
        )
        lam = 0.9
        rho = L.covering_radii(spec, nu, lam)
        pts = gen.normal(size=(500, n)) * 5.0
        dist = np.linalg.norm(pts[:, None, :] - nu.centers[None, :, :], axis=2)
        outside = np.all(dist > rho[None, :], axis=1) & np.all(dist > 1e-9, axis=1)
        vals = np.abs(M.transform_many(spec, nu, pts[outside]))
        assert np.all(vals <= lam * (1.0 + 1e-12))


def test_mc_matches_exact_within_three_se():
    nu = M.PointMassMeasure(
        n=1, masses=np.array([1.0, 1.0]), centers=np.array([[-1.0], [1.0]])
    )
    exact = L.hilbert_levelset_exact(nu, 1.0).value
    est = L.mc_levelset(K.hilbert(), nu, 1.0, 100000, seed=42)
    assert abs(est.value - exact) <= 3.0 * est.standard_error
    assert est.samples == 100000 and est.method == "mc"

    for n in (2, 3):
        one = M.PointMassMeasure(
            n=n, masses=np.array([1.5]), centers=np.array([[0.25] * n])
        )
        spec = K.riesz(n, 1)
        exact = L.single_mass_levelset_exact(spec, one, 0.8).value
        est = L.mc_levelset(spec, one, 0.8, 100000, seed=43)
        assert abs(est.value - exact) <= 3.0 * est.standard_error

    spec = K.second_order(2, 1, 2)
    one = M.PointMassMeasure(n=2, masses=np.array([1.0]), centers=np.zeros((1, 2)))
    exact = L.single_mass_levelset_exact(spec, one, 1.0).value
    est = L.mc_levelset(spec, one, 1.0, 100000, seed=44)
    assert abs(est.value - exact) <= 3.0 * est.standard_error


def test_mc_determinism_and_thread_independence():
    nu = M.PointMassMeasure(
        n=2,
        masses=np.array([1.0, 0.5]),
        centers=np.array([[0.0, 0.0], [1.0, 0.0]]),
    )
    spec = K.riesz(2, 1)
    a = L.mc_levelset(spec, nu, 1.0, 50000, seed=9)
    b = L.mc_levelset(spec, nu, 1.0, 50000, seed=9)
    c = L.mc_levelset(spec, nu, 1.0, 50000, seed=9, threads=4)
    assert (a.value, a.standard_error) == (b.value, b.standard_error)
    assert (a.value, a.standard_error) == (c.value, c.standard_error)
    d = L.mc_levelset(spec, nu, 1.0, 50000, seed=10)
    assert d.value != a.value


def test_mc_standard_error_scaling():
    nu = M.PointMassMeasure(
        n=1, masses=np.array([1.0, 1.0]), centers=np.array([[-1.0], [1.0]])
    )
    small = L.mc_levelset(K.hilbert(), nu, 1.0, 50000, seed=5)
    big = L.mc_levelset(K.hilbert(), nu, 1.0, 200000, seed=5)
    ratio = big.standard_error / small.standard_error
    assert 0.4 <= ratio <= 0.6


def test_mc_validation():
    nu = M.PointMassMeasure(n=1, masses=np.array([1.0]), centers=np.array([[0.0]]))
    with pytest.raises(DomainError):
        L.mc_levelset(K.hilbert(), nu, 1.0, 100, seed=1)
    with pytest.raises(DomainError):
        L.mc_levelset(K.hilbert(), nu, 1.0, 5000, seed=-3)
    with pytest.raises(DomainError):
        L.mc_levelset(K.riesz(2, 1), nu, 1.0, 5000, seed=1)


def test_levelset_monotone_in_threshold():
    gen = np.random.default_rng(53)
    nu = line_measure(gen, 4)
    vals = [L.hilbert_levelset_exact(nu, lam).value for lam in (0.25, 0.5, 1.0, 2.0)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_router_and_functional():
    # line kernel routes to the interval solver even with duplicate centers
    dup = M.PointMassMeasure(
        n=1,
        masses=np.array([1.0, 1.0, 0.5]),
        centers=np.array([[0.0], [0.0], [2.0]]),
    )
    est = L.weaktype_functional(K.hilbert(), dup, 0.7)
    assert est.method == "vieta"
    assert est.value == pytest.approx(2.0 / math.pi, rel=1e-10)

    one = M.PointMassMeasure(n=4, masses=np.array([3.0]), centers=np.zeros((1, 4)))
    est = L.weaktype_functional(K.riesz(4, 1), one, 2.0)
    assert est.method == "single-mass"
    assert est.value == pytest.approx(L.unit_levelset_constant(4), rel=1e-12)

    two = M.PointMassMeasure(
        n=2, masses=np.array([1.0, 1.0]), centers=np.array([[0.0, 0.0], [3.0, 0.0]])
    )
    with pytest.raises(DomainError):
        L.weaktype_functional(K.riesz(2, 1), two, 1.0)  # needs samples and seed
    est = L.weaktype_functional(K.riesz(2, 1), two, 1.0, samples=20000, seed=3)
    assert est.method == "mc"
    assert est.standard_error > 0.0


def test_exact_values_translation_and_scale_invariant():
    gen = np.random.default_rng(61)
    nu = line_measure(gen, 3)
    lam = 0.9
    base = L.hilbert_levelset_exact(nu, lam).value
    shifted = M.PointMassMeasure(n=1, masses=nu.masses, centers=nu.centers + 17.0)
    assert L.hilbert_levelset_exact(shifted, lam).value == pytest.approx(
        base, rel=1e-10
    )
    # dilating space by s rescales both the level and the volume
    s = 2.5
    wide = M.PointMassMeasure(n=1, masses=nu.masses, centers=nu.centers * s)
    assert L.hilbert_levelset_exact(wide, lam / s).value == pytest.approx(
        base * s, rel=1e-10
    )
