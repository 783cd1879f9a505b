import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsmlab.farfield import FarFieldMatrix, FarFieldSVD, svd
from lsmlab.geometry import SamplingGrid, build_direction_grid
from lsmlab.sampling import (
    IndicatorField,
    RhsVector,
    SamplingError,
    density_experiment,
    indicator_ck,
    indicator_kirsch,
    locate_minima,
    minima_displacement,
    rhs_vector,
    sweep,
    tikhonov_solve,
)

FIG_GRID = SamplingGrid.square(4.0, 0.1)


def random_matrix(seed, n=6):
    r = np.random.default_rng(seed)
    return r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))


def brute_force_indicators(A, f):
    """||g||^2 from dense solves of F g = f and (F*F)^(1/4) g = f."""
    g_ck = np.linalg.solve(A, f)
    w, Q = np.linalg.eigh(A.conj().T @ A)
    root = (Q * w**0.25) @ Q.conj().T
    g_k = np.linalg.solve(root, f)
    return np.vdot(g_ck, g_ck).real, np.vdot(g_k, g_k).real


def test_rhs_at_origin():
    f = rhs_vector((0.0, 0.0), 1.0, build_direction_grid(60))
    np.testing.assert_allclose(f.entries, np.exp(1j * np.pi / 4) / math.sqrt(8 * np.pi), rtol=1e-15)


@pytest.mark.parametrize("z, k", [((2.0, 0.0), 1.0), ((-1.3, 3.7), 2.5), ((10.0, -4.0), 0.3)])
def test_rhs_modulus(z, k):
    f = rhs_vector(z, k, build_direction_grid(60))
    np.testing.assert_allclose(np.abs(f.entries), 1 / math.sqrt(8 * np.pi * k), rtol=1e-14)


def test_rhs_direct_substitution():
    f = rhs_vector((2.0, 0.0), 1.0, build_direction_grid(60))
    assert f.entries[0] == pytest.approx(np.exp(1j * np.pi / 4) / math.sqrt(8 * np.pi) * np.exp(-2j), abs=1e-15)


def identity_svd(n):
    return svd(FarFieldMatrix(np.eye(n), build_direction_grid(n), 1.0))


@pytest.mark.parametrize("k", [1.0, 2.0])
def test_identity_operator(k):
    n = 8
    f = rhs_vector((0.4, -1.0), k, build_direction_grid(n))
    expected = n / (8 * np.pi * k)
    assert indicator_ck(identity_svd(n), f).value == pytest.approx(expected, rel=1e-14)
    assert indicator_kirsch(identity_svd(n), f).value == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("c", [0.5, 3.0, 1e4])
def test_scaling_laws(fig1_svd, grid60, c):
    # F -> cF maps s_n -> c s_n with the same singular vectors
    f = rhs_vector((0.5, 1.0), 1.0, grid60)
    scaled = FarFieldSVD(fig1_svd.u, c * fig1_svd.s, fig1_svd.v)
    assert indicator_ck(scaled, f).value == pytest.approx(indicator_ck(fig1_svd, f).value / c**2, rel=1e-12)
    assert indicator_kirsch(scaled, f).value == pytest.approx(
        indicator_kirsch(fig1_svd, f).value / c, rel=1e-12
    )


@pytest.mark.parametrize("c", [0.25, 2.0, 1024.0])
def test_scaling_laws_through_matrix(fig1_matrix, fig1_svd, grid60, c):
    # power-of-two factors keep the computed SVD exactly equivariant
    f = rhs_vector((0.5, 1.0), 1.0, grid60)
    scaled = svd(fig1_matrix.with_entries(c * fig1_matrix.entries))
    assert indicator_ck(scaled, f).value == pytest.approx(indicator_ck(fig1_svd, f).value / c**2, rel=1e-12)
    assert indicator_kirsch(scaled, f).value == pytest.approx(
        indicator_kirsch(fig1_svd, f).value / c, rel=1e-12
    )


def test_fig1_ck_smaller_inside(fig1_svd, grid60):
    inside = indicator_ck(fig1_svd, rhs_vector((-2.0, 0.0), 1.0, grid60)).value
    outside = indicator_ck(fig1_svd, rhs_vector((3.9, 3.9), 1.0, grid60)).value
    assert inside < outside


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_svd_formulas_match_dense_solves(seed, zx, zy):
    A = random_matrix(seed)
    grid = build_direction_grid(6)
    F = FarFieldMatrix(A, grid, 1.0)
    f = rhs_vector((zx, zy), 1.0, grid)
    ck, kir = brute_force_indicators(A, f.entries)
    dec = svd(F)
    assert indicator_ck(dec, f).value == pytest.approx(ck, rel=1e-10)
    assert indicator_kirsch(dec, f).value == pytest.approx(kir, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_phase_convention_independence(seed):
    A = random_matrix(seed)
    grid = build_direction_grid(6)
    dec = svd(FarFieldMatrix(A, grid, 1.0))
    phases = np.exp(2j * np.pi * np.random.default_rng(seed).random(6))
    turned = FarFieldSVD(dec.u * phases, dec.s, dec.v * phases)
    f = rhs_vector((0.7, -0.2), 1.0, grid)
    assert indicator_ck(turned, f).value == pytest.approx(indicator_ck(dec, f).value, rel=1e-14)
    assert indicator_kirsch(turned, f).value == pytest.approx(indicator_kirsch(dec, f).value, rel=1e-14)


def test_clamping_and_cutoff():
    grid = build_direction_grid(4)
    dec = FarFieldSVD(np.eye(4), np.array([1.0, 0.5, 1e-200, 0.0]), np.eye(4))
    f = RhsVector((0.0, 0.0), np.ones(4, dtype=complex), 1.0)
    res = indicator_ck(dec, f)
    assert res.clamped == 2
    assert res.value == pytest.approx(2 * 1e280 + 1 + 4, rel=1e-12)
    assert indicator_kirsch(dec, f).clamped == 2
    with pytest.raises(SamplingError, match="zero singular value"):
        indicator_ck(dec, f, clamp=False)
    cut = indicator_ck(dec, f, cutoff=0.4)
    assert cut.value == pytest.approx(5.0) and cut.clamped == 0
    assert rhs_vector((0, 0), 1.0, grid).entries.size == 4


def test_dimension_mismatch(fig1_svd):
    with pytest.raises(SamplingError):
        indicator_ck(fig1_svd, rhs_vector((0, 0), 1.0, build_direction_grid(8)))


def test_sweep_shape(fig1_svd, grid60):
    field = sweep(fig1_svd, FIG_GRID, 1.0, grid60)
    assert field.values_ck.size == 6561 and field.values_k.size == 6561
    assert np.all(np.isfinite(field.values_ck)) and np.all(np.isfinite(field.values_k))


def test_sweep_matches_pointwise(fig1_svd, grid60):
    grid = SamplingGrid(-1.0, 1.0, 0.5, 1.5, 0.5)
    field = sweep(fig1_svd, grid, 1.0, grid60)
    # batched and single-column products round differently; the unregularized
    # sums amplify that to ~1e-9 in the log values
    for (z, vck, vk) in zip(grid.points(), field.values_ck.ravel(), field.values_k.ravel()):
        f = rhs_vector(z, 1.0, grid60)
        assert vck == pytest.approx(0.5 * math.log10(indicator_ck(fig1_svd, f).value), abs=1e-8)
        assert vk == pytest.approx(0.5 * math.log10(indicator_kirsch(fig1_svd, f).value), abs=1e-8)


@pytest.mark.xfail(
    strict=True,
    reason="without a spectral cutoff the sums amplify the O(1e-15) asymmetry of the "
    "computed matrix by ~1/s_min^2, so z / -z agree only to ~1e-2",
)
def test_sweep_point_symmetry(fig1_svd, grid60):
    field = sweep(fig1_svd, FIG_GRID, 1.0, grid60)
    assert np.abs(field.values_k - field.values_k[::-1, ::-1]).max() <= 1e-10
    assert np.abs(field.values_ck - field.values_ck[::-1, ::-1]).max() <= 1e-10


def test_sweep_point_symmetry_with_cutoff(fig1_svd, grid60):
    # with the noise-level singular values dropped the symmetry is restored
    field = sweep(fig1_svd, FIG_GRID, 1.0, grid60, cutoff=1e-10)
    assert np.abs(field.values_k - field.values_k[::-1, ::-1]).max() <= 1e-7
    assert np.abs(field.values_ck - field.values_ck[::-1, ::-1]).max() <= 1e-7


def test_fig1_kirsch_minima_near_centers(fig1_svd, grid60):
    rep = locate_minima(sweep(fig1_svd, FIG_GRID, 1.0, grid60), "kirsch")
    (p0, _), (p1, _) = rep.minima[:2]
    left, right = sorted([p0, p1])
    assert math.dist(left, (-2.0, 0.0)) <= 1.0
    assert math.dist(right, (2.0, 0.0)) <= 1.0


def test_fig2_minima_separated(fig2_svd, grid60):
    rep = locate_minima(sweep(fig2_svd, FIG_GRID, 1.0, grid60), "kirsch")
    xs = [p[0] for p, _ in rep.minima]
    assert len(xs) >= 2 and max(xs) - min(xs) >= 1.0


@pytest.mark.parametrize("c", [0.125, 4.0, 2.0**20])
def test_scaling_shifts_field_and_keeps_argmin(fig1_matrix, fig1_svd, grid60, c):
    grid = SamplingGrid.square(4.0, 0.2)
    base = sweep(fig1_svd, grid, 1.0, grid60)
    scaled = sweep(svd(fig1_matrix.with_entries(c * fig1_matrix.entries)), grid, 1.0, grid60)
    np.testing.assert_allclose(scaled.values_ck - base.values_ck, -math.log10(c), atol=1e-12)
    np.testing.assert_allclose(scaled.values_k - base.values_k, -0.5 * math.log10(c), atol=1e-12)
    for v in ("ck", "kirsch"):
        assert np.argmin(scaled.values(v)) == np.argmin(base.values(v))
        assert locate_minima(scaled, v).minima[0][0] == locate_minima(base, v).minima[0][0]


def make_field(values):
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    grid = SamplingGrid(0.0, nx - 1.0, 0.0, ny - 1.0, 1.0)
    return IndicatorField(grid, values, values)


def test_minima_constant_field():
    rep = locate_minima(make_field(np.ones((5, 6))), "ck")
    assert rep.minima == [] and math.isnan(rep.contrast)


def test_minima_single_pit():
    v = np.ones((5, 6))
    v[2, 3] = 0.0
    rep = locate_minima(make_field(v), "kirsch")
    assert rep.minima == [((3.0, 2.0), 0.0)]
    assert rep.contrast == pytest.approx(1.0)


def test_minima_sorted_and_plateau_excluded():
    v = np.full((6, 8), 5.0)
    v[1, 1], v[4, 5] = 2.0, 1.0
    v[2, 4] = v[2, 5] = 3.0  # flat two-node pit is not strict
    rep = locate_minima(make_field(v), "ck")
    assert [p for p, _ in rep.minima] == [(5.0, 4.0), (1.0, 1.0)]


def test_minima_displacement():
    a = locate_minima(make_field(_pits([(1, 1), (4, 5)])), "ck")
    b = locate_minima(make_field(_pits([(1, 2), (4, 5)])), "ck")
    assert minima_displacement(a, b) == pytest.approx(1.0)


def _pits(nodes):
    v = np.full((6, 8), 5.0)
    for n, (i, j) in enumerate(nodes):
        v[i, j] = float(n)
    return v


def test_tikhonov_two_by_two():
    c = 0.3
    s = np.array([1.0, 1e-6])
    dec = FarFieldSVD(np.eye(2), s, np.eye(2))
    f = RhsVector((0.0, 0.0), np.array([1.0, 1.0]) / math.sqrt(2) * c, 1.0)
    for eps in (1e-2, 1e-8, 1e-12, 1e-14):
        res = tikhonov_solve(dec, f, eps)
        fn = c / math.sqrt(2)
        g = [si / (si**2 + eps) * fn for si in s]
        np.testing.assert_allclose(res.g, g, rtol=1e-14)
        r = math.sqrt(sum((eps / (si**2 + eps) * fn) ** 2 for si in s))
        assert res.residual == pytest.approx(r, rel=1e-14)
        assert res.norm == pytest.approx(math.hypot(*g), rel=1e-14)


def test_tikhonov_large_eps_limit(fig1_svd, grid60):
    f = rhs_vector((1.0, 1.0), 1.0, grid60)
    fn = np.linalg.norm(f.entries)
    s1 = fig1_svd.s[0]
    res = tikhonov_solve(fig1_svd, f, 1e12 * s1**2)
    assert res.norm <= 1e-9 * fn / s1
    assert 0.999 * fn <= res.residual <= fn


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-14, 1e-1))
def test_tikhonov_matches_stacked_least_squares(seed, eps):
    A = random_matrix(seed)
    grid = build_direction_grid(6)
    f = rhs_vector((0.3, 0.1), 1.0, grid)
    res = tikhonov_solve(svd(FarFieldMatrix(A, grid, 1.0)), f, eps)
    stacked = np.vstack([A, math.sqrt(eps) * np.eye(6)])
    rhs = np.concatenate([f.entries, np.zeros(6)])
    g = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
    np.testing.assert_allclose(res.g, g, rtol=1e-6, atol=1e-12)
    assert res.residual == pytest.approx(np.linalg.norm(A @ g - f.entries), rel=1e-6, abs=1e-13)


def test_tikhonov_rejects_nonpositive(fig1_svd, grid60):
    f = rhs_vector((0, 0), 1.0, grid60)
    for eps in (0.0, -1.0):
        with pytest.raises(SamplingError):
            tikhonov_solve(fig1_svd, f, eps)


@pytest.mark.parametrize("z", [(3.0, 3.0), (-2.0, 0.0), (0.0, 0.0)])
def test_density_sweep_monotone(fig1_svd, grid60, z):
    eps = [10.0**-p for p in np.arange(1, 20, 0.5)]
    sw = density_experiment(fig1_svd, z, 1.0, grid60, eps)
    res = [r.residual for r in sw.records]
    nrm = [r.norm for r in sw.records]
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert all(b >= a for a, b in zip(nrm, nrm[1:]))


def test_density_outside_norm_grows(fig1_svd, grid60):
    sw = density_experiment(fig1_svd, (3.0, 3.0), 1.0, grid60)
    assert [r.eps for r in sw.records] == [10.0**-p for p in range(2, 13)]
    assert sw.records[-1].norm / sw.records[0].norm >= 1e3
    assert sw.records[-1].residual < 0.1 * sw.records[0].residual


def _norm_at_residual(sweep_result, tol):
    for r in sweep_result.records:
        if r.residual <= tol * sweep_result.rhs_norm:
            return r.norm
    return math.inf


def test_density_matched_residual(fig1_svd, grid60):
    eps = [10.0**-p for p in range(2, 27)]
    inside = density_experiment(fig1_svd, (-2.0, 0.0), 1.0, grid60, eps)
    outside = density_experiment(fig1_svd, (3.0, 3.0), 1.0, grid60, eps)
    n_in = _norm_at_residual(inside, 1e-4)
    n_out = _norm_at_residual(outside, 1e-4)
    assert math.isfinite(n_out)
    assert n_in < n_out


def test_density_rejects_bad_eps(fig1_svd, grid60):
    for eps in ([1e-3, 1e-2], [1e-2, 1e-2], [], [1e-2, -1.0]):
        with pytest.raises(SamplingError):
            density_experiment(fig1_svd, (0, 0), 1.0, grid60, eps)
