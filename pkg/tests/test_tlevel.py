import numpy as np

from envelope_dnn.tlevel import extract_t_level, trapezoidate


def _planes(n, seed):
    P = np.random.default_rng(seed).random((n, 2))
    return -2 * P[:, 0], -2 * P[:, 1], (P ** 2).sum(1)


def test_faces_have_exactly_t_planes_below():
    A, B, C = _planes(80, 0)
    t = 5
    lv = extract_t_level(A, B, C, t, (0, 0, 1, 1))
    assert not lv.overflow
    for f in range(lv.n_faces):
        cx, cy = lv.face_vertices(f).mean(axis=0)
        vals = A * cx + B * cy + C
        g = lv.face_plane[f]
        below = np.nonzero(vals < vals[g] - 1e-12)[0]
        assert sorted(below.tolist()) == sorted(lv.below(f).tolist())


def test_faces_tile_the_box():
    A, B, C = _planes(60, 1)
    lv = extract_t_level(A, B, C, 3, (0, 0, 1, 1))
    face, traps = trapezoidate(lv)
    area = np.sum((traps[:, 1] - traps[:, 0]) * ((traps[:, 4] + traps[:, 5]) - (traps[:, 2] + traps[:, 3])) / 2)
    assert abs(area - 1.0) < 1e-9
    rng = np.random.default_rng(2)
    for x, y in rng.random((300, 2)):
        vals = A * x + B * y + C
        g = int(np.argsort(vals, kind="stable")[3])
        inside = (traps[:, 0] <= x) & (x <= traps[:, 1])
        s = (x - traps[:, 0]) / np.where(inside, traps[:, 1] - traps[:, 0], 1)
        lo = traps[:, 2] + s * (traps[:, 3] - traps[:, 2])
        hi = traps[:, 4] + s * (traps[:, 5] - traps[:, 4])
        hits = np.nonzero(inside & (lo <= y) & (y <= hi))[0]
        assert len(hits) >= 1
        assert lv.face_plane[face[hits[0]]] == g


def test_level_zero_is_the_envelope():
    A, B, C = _planes(40, 3)
    lv = extract_t_level(A, B, C, 0, (0, 0, 1, 1))
    # one face per site with a Voronoi cell meeting the box
    assert len(set(lv.face_plane.tolist())) == lv.n_faces
