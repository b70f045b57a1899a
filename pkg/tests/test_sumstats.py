import numpy as np
import pytest

from intensity.surface import IntensitySurface
from pattern.core import PointPattern
from pattern.geometry import RectWindow, border_distance
from stats.jfunction import f_inhom, fgj_inhom, g_inhom, j_cross_inhom, j_inhom
from stats.kfunction import k_cross_inhom, k_inhom
from stats.summary import GridPoints, RGrid, StatKind, SummaryFunction, l_function
from synth.poisson import sample_inhom_poisson
from synth.thomas import sample_thomas
from utils.errors import InsufficientPointsError, NumericError

W10 = RectWindow(0.0, 0.0, 10.0, 10.0)
WS = RectWindow(0.0, 0.0, 10.0, 8.0)


# direct enumeration oracles


def brute_k(xy_a, lam_a, xy_b, lam_b, w, r, same):
    out = np.zeros(len(r))
    for i in range(len(xy_a)):
        for j in range(len(xy_b)):
            if same and i == j:
                continue
            dx, dy = xy_a[i] - xy_b[j]
            d = np.hypot(dx, dy)
            weight = w.area() / ((w.width - abs(dx)) * (w.height - abs(dy)))
            term = weight / (lam_a[i] * lam_b[j]) / w.area()
            out += np.where(r >= d, term, 0.0)
    return out


def brute_tail(centres, others, lam_others, w, r, same):
    lam_bar = min(lam_others) if len(lam_others) else 1.0
    tail = np.full(len(r), np.nan)
    border = border_distance(w, centres)
    for k, rk in enumerate(r):
        keep = [c for c in range(len(centres)) if border[c] >= rk]
        if not keep:
            continue
        total = 0.0
        for c in keep:
            prod = 1.0
            if rk > 0:
                for j in range(len(others)):
                    if same and j == c:
                        continue
                    if np.hypot(*(centres[c] - others[j])) <= rk:
                        prod *= 1.0 - lam_bar / lam_others[j]
            total += prod
        tail[k] = total / len(keep)
    return tail


def brute_ratio(g_tail, f_tail, tau=0.05):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(np.isfinite(g_tail) & np.isfinite(f_tail) & (f_tail > tau), g_tail / f_tail, np.nan)


def _random_case(rng, n):
    xy = rng.random((n, 2)) * WS.sides
    lam = rng.uniform(0.05, 0.5, size=n)
    return PointPattern(xy, WS), lam


def test_estimators_match_direct_enumeration():
    rng = np.random.default_rng(12)
    r = RGrid.linspace(3.9, 40)
    grid = GridPoints.from_window(WS, 0.5)
    for _ in range(50):
        p, lam = _random_case(rng, int(rng.integers(2, 9)))
        q, lam_q = _random_case(rng, int(rng.integers(1, 9)))

        k = k_inhom(p, lam, r)
        np.testing.assert_allclose(k.value, brute_k(p.xy, lam, p.xy, lam, WS, r.r_values, True), rtol=1e-12)

        fgj = fgj_inhom(p, lam, grid, r)
        g_tail = brute_tail(p.xy, p.xy, lam, WS, r.r_values, True)
        f_tail = brute_tail(grid.xy, p.xy, lam, WS, r.r_values, False)
        np.testing.assert_allclose(fgj.G.value, 1.0 - g_tail, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(fgj.F.value, 1.0 - f_tail, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(fgj.J.value, brute_ratio(g_tail, f_tail), rtol=1e-12, atol=1e-12)

        kc = k_cross_inhom(p, q, lam, lam_q, r)
        np.testing.assert_allclose(kc.value, brute_k(p.xy, lam, q.xy, lam_q, WS, r.r_values, False), rtol=1e-12)

        jc = j_cross_inhom(p, q, lam_q, grid, r)
        g12 = brute_tail(p.xy, q.xy, lam_q, WS, r.r_values, False)
        f2 = brute_tail(grid.xy, q.xy, lam_q, WS, r.r_values, False)
        np.testing.assert_allclose(jc.value, brute_ratio(g12, f2), rtol=1e-12, atol=1e-12)


def test_k_two_points_by_hand():
    p = PointPattern([[4.0, 5.0], [6.0, 5.0]], W10)
    r = RGrid.linspace(4.0, 5)
    k = k_inhom(p, IntensitySurface.constant(W10, 0.02), r)
    assert k.value.tolist() == pytest.approx([0.0, 0.0, 62.5, 62.5, 62.5])


def test_k_cross_by_hand_and_symmetry():
    p1 = PointPattern([[4.0, 5.0]], W10)
    p2 = PointPattern([[6.0, 5.0]], W10)
    r = RGrid.linspace(4.0, 5)
    lam = IntensitySurface.constant(W10, 0.01)
    k = k_cross_inhom(p1, p2, lam, lam, r)
    assert k.value[2:] == pytest.approx([125.0] * 3)
    assert np.all(k.value[:2] == 0.0)
    rng = np.random.default_rng(8)
    a, la = _random_case(rng, 30)
    b, lb = _random_case(rng, 25)
    r = RGrid.linspace(3.9, 64)
    assert np.array_equal(k_cross_inhom(a, b, la, lb, r).value, k_cross_inhom(b, a, lb, la, r).value)


def test_k_small_patterns():
    r = RGrid.linspace(4.0, 5)
    assert np.all(k_inhom(PointPattern([[5.0, 5.0]], W10), 0.01, r).value == 0.0)
    with pytest.raises(InsufficientPointsError, match="insufficient points"):
        k_inhom(PointPattern.empty(W10), 0.01, r)
    with pytest.raises(InsufficientPointsError):
        k_cross_inhom(PointPattern.empty(W10), PointPattern([[1.0, 1.0]], W10), 0.01, 0.01, r)


def test_k_no_pairs_in_range_is_zero():
    p1 = PointPattern([[1.0, 1.0]], W10)
    p2 = PointPattern([[9.0, 9.0]], W10)
    k = k_cross_inhom(p1, p2, 0.01, 0.01, RGrid.linspace(4.0, 9))
    assert np.all(k.value == 0.0)


def test_constant_intensity_gives_classical_k():
    rng = np.random.default_rng(9)
    p = PointPattern(rng.random((60, 2)) * WS.sides, WS)
    r = RGrid.linspace(3.9, 30)
    lam_hat = p.n / WS.area()
    scalar = k_inhom(p, lam_hat, r)
    arr = k_inhom(p, np.full(p.n, lam_hat), r)
    assert np.array_equal(scalar.value, arr.value)
    assert np.all(np.diff(scalar.value) >= 0)
    assert scalar.value[0] == 0.0


def test_scaling_intensity():
    rng = np.random.default_rng(10)
    p, lam = _random_case(rng, 40)
    q, lam_q = _random_case(rng, 30)
    r = RGrid.linspace(3.9, 30)
    grid = GridPoints.from_window(WS, 0.5)
    np.testing.assert_allclose(k_inhom(p, 2 * lam, r).value, k_inhom(p, lam, r).value / 4, rtol=1e-12)
    np.testing.assert_allclose(
        k_cross_inhom(p, q, 2 * lam, 2 * lam_q, r).value, k_cross_inhom(p, q, lam, lam_q, r).value / 4, rtol=1e-12,
    )
    j1 = j_inhom(p, lam, grid, r).value
    j2 = j_inhom(p, 2 * lam, grid, r).value
    assert np.array_equal(np.isnan(j1), np.isnan(j2))
    assert np.array_equal(j1[~np.isnan(j1)], j2[~np.isnan(j2)])


def test_g_two_points_constant_intensity():
    p = PointPattern([[4.0, 5.0], [6.0, 5.0]], W10)
    r = RGrid.linspace(4.0, 5)
    g = g_inhom(p, 0.02, r)
    assert g.value.tolist() == [0.0, 0.0, 1.0, 1.0, 1.0]


def test_f_empty_pattern_and_single_point():
    r = RGrid.linspace(4.0, 9)
    grid = GridPoints.from_window(W10, 0.5)
    f = f_inhom(PointPattern.empty(W10), 0.01, grid, r)
    assert np.all(f.value == 0.0)

    point = np.array([3.0, 6.0])
    f = f_inhom(PointPattern([point], W10), 0.01, grid, r)
    border = border_distance(W10, grid.xy)
    dist = np.hypot(*(grid.xy - point).T)
    for k, rk in enumerate(r.r_values):
        eligible = border >= rk
        expected = np.count_nonzero(eligible & (dist <= rk)) / np.count_nonzero(eligible) if rk > 0 else 0.0
        assert f.value[k] == pytest.approx(expected, abs=1e-14)


def test_j_at_zero_and_far_apart_points():
    p = PointPattern([[2.0, 2.0], [8.0, 8.0], [2.0, 8.0]], W10)
    r = RGrid.linspace(3.0, 13)
    fgj = fgj_inhom(p, 0.03, GridPoints.from_window(W10, 0.25), r)
    assert fgj.J.value[0] == 1.0
    assert fgj.F.value[0] == 0.0 and fgj.G.value[0] == 0.0
    assert np.all(fgj.G.value[fgj.G.defined] == 0.0)
    defined = fgj.J.defined
    assert np.all(fgj.J.value[defined] >= 1.0)
    jc = j_cross_inhom(p, PointPattern([[5.0, 5.0]], W10), 0.03, GridPoints.from_window(W10, 0.25), r)
    assert jc.value[0] == 1.0


def test_summary_function_frame_and_l():
    r = RGrid.linspace(2.0, 3)
    k = SummaryFunction(StatKind.K, r, np.pi * r.r_values ** 2)
    assert np.allclose(l_function(k), r.r_values)
    assert list(k.to_frame().columns) == ["r", "value", "reference"]
    j = SummaryFunction(StatKind.J, r, [1.0, 0.9, np.nan])
    frame = j.to_frame()
    assert frame["defined"].tolist() == [True, True, False]
    assert frame["reference"].tolist() == [1.0, 1.0, 1.0]


def test_rgrid_validation():
    with pytest.raises(NumericError):
        RGrid([0.5, 1.0])
    with pytest.raises(NumericError):
        RGrid([0.0, 1.0, 1.0])
    with pytest.raises(NumericError):
        k_inhom(PointPattern([[1.0, 1.0], [2.0, 2.0]], W10), 0.1, RGrid.linspace(5.0, 10))


def test_grid_points_inside_window():
    grid = GridPoints.from_window(WS, 0.7)
    assert WS.contains(grid.xy).all()
    assert len(grid) == 14 * 11


def _linear_surface(w: RectWindow, nx=200, ny=100):
    xs = w.x_min + (np.arange(nx) + 0.5) * w.width / nx
    values = np.repeat((0.02 * (1 + xs / 100))[:, None], ny, axis=1)
    return IntensitySurface(w, values)


@pytest.mark.slow
def test_poisson_k_and_j_calibration():
    w = RectWindow(0.0, 0.0, 100.0, 50.0)
    lam = _linear_surface(w)
    r = RGrid.linspace(5.0, 11)
    grid = GridPoints.for_surface(lam)
    ks, js = [], []
    for k in range(400):
        p = sample_inhom_poisson(lam, 1000 + k)
        ks.append(k_inhom(p, lam, r).value)
        js.append(fgj_inhom(p, lam, grid, r).J.value)
    mean_k = np.mean(ks, axis=0)
    for rk in (1.0, 2.0, 5.0):
        idx = int(np.argmin(np.abs(r.r_values - rk)))
        assert mean_k[idx] == pytest.approx(np.pi * rk ** 2, rel=0.05)
    js = np.array(js)
    assert np.all(js[:, 0] == 1.0)
    mean_j = np.nanmean(js, axis=0)
    assert np.all((mean_j > 0.95) & (mean_j < 1.05))


def test_thomas_j_below_one():
    w = RectWindow(0.0, 0.0, 100.0, 50.0)
    r = RGrid.linspace(5.0, 11)
    below = 0
    for k in range(20):
        p = sample_thomas(0.002, 10.0, 1.0, w, 50 + k)
        lam_hat = p.n / w.area()
        j = j_inhom(p, lam_hat, GridPoints.from_window(w, 1.0), r)
        below += bool(j.value[1] < 1.0)
    assert below >= 19


@pytest.mark.slow
def test_poisson_cross_j_calibration():
    w = RectWindow(0.0, 0.0, 100.0, 50.0)
    lam = _linear_surface(w)
    r = RGrid.linspace(5.0, 11)
    grid = GridPoints.for_surface(lam)
    js = []
    for k in range(300):
        p1 = sample_inhom_poisson(lam, 3000 + 2 * k)
        p2 = sample_inhom_poisson(lam, 3001 + 2 * k)
        js.append(j_cross_inhom(p1, p2, lam, grid, r).value)
    mean_j = np.nanmean(np.array(js), axis=0)
    assert np.all((mean_j >= 0.95) & (mean_j <= 1.05))


def test_cross_j_below_one_for_planted_partners():
    w = RectWindow(0.0, 0.0, 100.0, 50.0)
    rng = np.random.default_rng(17)
    xy = 1.0 + rng.random((80, 2)) * [97.0, 47.0]
    p1 = PointPattern(xy, w)
    p2 = PointPattern(xy + 0.2, w)
    r = RGrid.linspace(5.0, 11)
    j = j_cross_inhom(p1, p2, p2.n / w.area(), GridPoints.from_window(w, 0.5), r)
    assert j.value[1] < 0.1
    assert np.nanmax(j.value[1:]) < 1.0
