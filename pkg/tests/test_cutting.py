import math

import numpy as np
from envelope_dnn.cutting import (C_SAMPLE, build_approx_level, build_cutting, choose_level,
                                  sample_size, terrain_height, validate_cutting)


def _planes(n, seed):
    P = np.random.default_rng(seed).random((n, 2))
    return -2 * P[:, 0], -2 * P[:, 1], (P ** 2).sum(1)


def test_sample_size_formula():
    assert sample_size(2 ** 20, 2 ** 14, 0.5, 4) == 20480
    assert sample_size(1024, 64, 0.5, 4) == 1024
    for n in (10, 100, 1000):
        assert sample_size(n, n, 0.5) <= n


def test_choose_level_sampled_range():
    n, k = 2 ** 20, 2 ** 14
    lam = C_SAMPLE / 0.25 * math.log2(n)
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = choose_level(n, k, 0.5, rng)
        assert math.ceil(7 * lam / 6) <= t <= math.floor(5 * lam / 4)


def test_choose_level_clamped_range():
    rng = np.random.default_rng(0)
    ts = {choose_level(1024, 8, 0.5, rng) for _ in range(200)}
    assert min(ts) >= 8 and max(ts) <= 16


def test_choose_level_seeded():
    a = [choose_level(1024, 8, 0.5, np.random.default_rng(5)) for _ in range(3)]
    assert len(set(a)) == 1


def test_one_plane_terrain_is_the_plane():
    A, B, C = np.array([0.3]), np.array([-0.2]), np.array([1.0])
    terrain, _ = build_approx_level(A, B, C, 1, (0, 0, 1, 1), rng=np.random.default_rng(0))
    xs, ys = np.random.default_rng(1).random((2, 50))
    assert np.allclose(terrain_height(terrain, A, B, C, xs, ys), A[0] * xs + B[0] * ys + C[0])


def test_terrain_sandwich_n512_k32():
    A, B, C = _planes(512, 0)
    rng = np.random.default_rng(1)
    terrain, attempts = build_approx_level(A, B, C, 32, (0, 0, 1, 1), rng=rng)
    assert attempts <= 16
    xs, ys = np.random.default_rng(2).random((2, 1000))
    z = terrain_height(terrain, A, B, C, xs, ys)
    for x, y, zz in zip(xs[:200], ys[:200], z[:200]):
        lvl = int(np.sum(A * x + B * y + C < zz - 1e-9))
        assert 32 <= lvl <= 48


def test_cutting_sizes_and_conflicts_n512_k32():
    A, B, C = _planes(512, 3)
    cut = build_cutting(A, B, C, 32, (0, 0, 1, 1), rng=np.random.default_rng(4))
    sizes = cut.list_sizes()
    assert sizes.min() >= 32 and sizes.max() <= 64
    rep = validate_cutting(cut, A, B, C, rng=np.random.default_rng(5))
    assert rep["ok"] and rep["uncovered"] == 0 and rep["overlaps"] == 0
    rng = np.random.default_rng(6)
    for p in rng.choice(cut.n_prisms, size=100, replace=False):
        lst = set(cut.conflict_list(p).tolist())
        # planes below the ceiling anywhere over the prism must be listed
        x, y = _interior_point(cut, p)
        ceil = cut.ceiling(p, x, y, A, B, C)
        assert set(np.nonzero(A * x + B * y + C < ceil - 1e-9)[0].tolist()) <= lst


def _interior_point(cut, p):
    xa, xb, la, lb, ha, hb = cut.traps[p]
    return (xa + xb) / 2, (la + lb + ha + hb) / 4


def test_planes_below_terrain_everywhere_are_in_every_list():
    A, B, C = _planes(300, 7)
    A = np.append(A, 0.0)
    B = np.append(B, 0.0)
    C = np.append(C, -10.0)
    cut = build_cutting(A, B, C, 16, (0, 0, 1, 1), rng=np.random.default_rng(8))
    for p in range(cut.n_prisms):
        assert len(A) - 1 in set(cut.conflict_list(p).tolist())


def test_sampled_regime_large_k():
    A, B, C = _planes(1024, 9)
    cut = build_cutting(A, B, C, 128, (0, 0, 1, 1), rng=np.random.default_rng(10), c=2.0)
    assert not cut.terrain.clamped
    rep = validate_cutting(cut, A, B, C, rng=np.random.default_rng(11))
    assert rep["ok"]
