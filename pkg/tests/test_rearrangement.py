import numpy as np
import pytest

from gpe2.grid import Grid
from gpe2.rearrangement import rearrangement_check, schwarz_symmetrize

from conftest import random_smooth


@pytest.fixture(scope="module")
def g():
    return Grid(2, 8.0, 64)


def shifted(g, a):
    return np.exp(-((g.coords[0] - a[0]) ** 2 + (g.coords[1] - a[1]) ** 2))


def test_radial_field_is_fixed(g):
    f = np.exp(-g.r2)
    fs = schwarz_symmetrize(g, f)
    assert np.array_equal(np.sort(fs.ravel()), np.sort(f.ravel()))
    assert np.max(np.abs(fs - f)) < 1e-15 or np.array_equal(
        np.sort(fs[g.r2 == 2.0]), np.sort(f[g.r2 == 2.0])
    )
    gaps = rearrangement_check(g, f, f)
    assert all(abs(v) < 1e-10 for v in gaps.values())


def test_translated_gaussian_recenters(g):
    f = shifted(g, (1.5, -0.75))
    fs = schwarz_symmetrize(g, f)
    assert np.array_equal(np.sort(fs.ravel()), np.sort(f.ravel()))
    assert fs[32, 32] == f.max()


def test_swap_is_undone(g):
    f = np.exp(-g.r2)
    h = f.copy()
    h[32, 32], h[10, 10] = h[10, 10], h[32, 32]
    assert np.array_equal(schwarz_symmetrize(g, h), schwarz_symmetrize(g, f))


def test_strict_gaps_for_misaligned_input(g):
    gaps = rearrangement_check(g, shifted(g, (2.0, 1.0)), np.exp(-g.r2))
    assert gaps["riesz_gap"] > 0
    assert gaps["moment_gap"] > 0


def test_rejects_negative_or_complex(g):
    with pytest.raises(ValueError):
        schwarz_symmetrize(g, -np.exp(-g.r2))
    with pytest.raises(ValueError):
        schwarz_symmetrize(g, np.exp(-g.r2) + 0j)


def test_random_fields_satisfy_the_suite():
    g = Grid(2, 8.0, 256)
    rng = np.random.default_rng(11)
    for _ in range(100):
        f = np.abs(random_smooth(g, rng))
        h = np.abs(random_smooth(g, rng))
        gaps = rearrangement_check(g, f, h)
        assert np.array_equal(np.sort(f.ravel()), np.sort(schwarz_symmetrize(g, f).ravel()))
        assert abs(gaps["mass_gap"]) < 1e-10 and abs(gaps["quartic_gap"]) < 1e-10
        for k in ("riesz_gap", "riesz_sq_gap", "moment_gap"):
            assert gaps[k] >= -1e-10
        assert gaps["polya_gap"] >= -0.05 * g.grad_norm_sq(f)


def test_polya_defect_shrinks_under_refinement():
    worst = []
    for m in (32, 64, 128):
        g = Grid(2, 8.0, m)
        rng = np.random.default_rng(4)
        rel = []
        for _ in range(20):
            f = np.abs(random_smooth(g, rng))
            gaps = rearrangement_check(g, f, f)
            rel.append(gaps["polya_gap"] / g.grad_norm_sq(f))
        worst.append(min(rel))
    assert worst[0] < worst[1] < worst[2]
