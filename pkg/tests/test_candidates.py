import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from suction_affordance import candidates as cand
from suction_affordance import scenesim as sim


def fake_obs(depth, rgb=None):
    depth = np.asarray(depth, dtype=np.float32)
    if rgb is None:
        rgb = np.zeros(depth.shape + (3,), dtype=np.float32)
    return sim.Observation(depth, rgb, 0.0015, 0.5 / 300, 0.5, 0.15)


# ------------------------------------------------------------ brute-force selector oracle

SYM = [
    [1, 3, 5, 3, 1],
    [3, 5, 8, 5, 3],
    [5, 8, 10, 8, 5],
    [3, 5, 8, 5, 3],
    [1, 3, 5, 3, 1],
]
LIT = [row[:] for row in SYM]
LIT[4] = [1, 5, 8, 3, 1]


def brute_select(cells, kernel, shape=(17, 17)):
    """Pure-python selector: best integer score over the positive cells."""
    cells = sorted(cells)
    best, best_score = None, None
    for i, j in cells:
        score = 0
        for a, b in cells:
            u, v = i - a + 2, j - b + 2
            if 0 <= u < 5 and 0 <= v < 5:
                score += kernel[u][v]
        if best_score is None or score > best_score:
            best, best_score = (i, j), score
    return best, best_score


def brute_conv(m, kernel):
    h, w = m.shape
    out = np.zeros((h, w), dtype=np.int64)
    for i in range(h):
        for j in range(w):
            for u in range(5):
                for v in range(5):
                    a, b = i + 2 - u, j + 2 - v
                    if 0 <= a < h and 0 <= b < w:
                        out[i, j] += kernel[u][v] * int(m[a, b])
    return out


# ------------------------------------------------------------ regions


def test_default_regions():
    regions = cand.region_candidates(200, 300)
    assert len(regions) == 12
    assert sorted({r.top for r in regions}) == [0, 50, 100]
    assert sorted({r.left for r in regions}) == [0, 67, 133, 200]
    assert regions[0].top_left == (0, 0) and regions[-1].top_left == (100, 200)
    assert [r.top_left for r in regions] == sorted(r.top_left for r in regions)


def test_degenerate_raster_gives_coincident_windows():
    regions = cand.region_candidates(100, 100)
    assert len(regions) == 12
    assert all(r.top_left == (0, 0) for r in regions)


@pytest.mark.parametrize("shape", [(99, 300), (200, 99)])
def test_small_raster_rejected(shape):
    with pytest.raises(ValueError):
        cand.region_candidates(*shape)


@settings(max_examples=50, deadline=None)
@given(st.integers(100, 400), st.integers(100, 600))
def test_grid_points_inside_raster(h, w):
    for region in cand.region_candidates(h, w):
        px = cand.point_pixels(region)
        assert px.shape == (289, 2)
        assert (px[:, 0] > 0).all() and (px[:, 0] < h - 1).all()
        assert (px[:, 1] > 0).all() and (px[:, 1] < w - 1).all()


def test_point_grid_offsets():
    grid = cand.point_grid(cand.RegionCandidate(0, 0))
    assert len(grid) == 289
    assert grid[0].pixel == (2, 2) and grid[0].grid_index == (0, 0)
    assert grid[-1].pixel == (98, 98)
    assert grid[8 * 17 + 8].pixel == (50, 50)
    r = cand.RegionCandidate(50, 133)
    assert [p.pixel for p in cand.point_grid(r)] == [tuple(p) for p in cand.point_pixels(r).tolist()]
    assert cand.grid_pixel(r, (3, 4)) == (50 + 20, 133 + 26)


# ------------------------------------------------------------ patches


def test_constant_patch_on_floor():
    obs = fake_obs(np.full((200, 300), 0.5))
    p = cand.extract_patch(obs, (100, 150))
    assert p.depth.shape == (32, 32) and p.rgb.shape == (32, 32, 3)
    assert np.all(p.depth == np.float32(0.5))


def test_patch_centering_and_edge_replication():
    depth = np.arange(200 * 300, dtype=np.float32).reshape(200, 300)
    obs = fake_obs(depth)
    p = cand.extract_patch(obs, (40, 60))
    assert p.depth[16, 16] == depth[40, 60]
    np.testing.assert_array_equal(p.depth, depth[24:56, 44:76])
    corner = cand.extract_patch(obs, (0, 0)).depth
    assert corner[16, 16] == depth[0, 0]
    # rows/cols above and left of the raster repeat the first row/col
    assert np.all(corner[:16, 16:] == corner[16, 16:])
    assert np.all(corner[16:, :16] == corner[16:, 16:17])
    assert np.all(corner[:17, :17] == depth[0, 0])


def test_patch_out_of_bounds():
    with pytest.raises(IndexError):
        cand.extract_patch(fake_obs(np.zeros((200, 300))), (200, 0))


def test_plateau_edge_step():
    h = 0.04
    depth = np.full((200, 300), 0.5, dtype=np.float32)
    depth[:, 150:] = 0.5 - h
    p = cand.extract_patch(fake_obs(depth), (100, 148))
    step = np.abs(np.diff(p.depth.astype(np.float64), axis=1)).max()
    assert step == pytest.approx(h, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(26, 150), st.integers(26, 230), st.integers(-10, 10), st.integers(-10, 10))
def test_patch_translation_consistent(r, c, dr, dc):
    rng = np.random.default_rng(r * 1000 + c)
    base = rng.random((200, 300)).astype(np.float32)
    shifted = np.roll(base, (dr, dc), axis=(0, 1))
    a = cand.extract_patch(fake_obs(base), (r, c)).depth
    b = cand.extract_patch(fake_obs(shifted), (r + dr, c + dc)).depth
    np.testing.assert_array_equal(a, b)


def test_extract_patches_matches_single():
    rng = np.random.default_rng(1)
    obs = fake_obs(rng.random((200, 300)), rng.random((200, 300, 3)).astype(np.float32))
    pixels = np.array([[0, 0], [199, 299], [57, 140], [3, 298]])
    rgb, depth = cand.extract_patches(obs, pixels)
    for k, px in enumerate(pixels):
        p = cand.extract_patch(obs, tuple(px))
        np.testing.assert_array_equal(depth[k], p.depth)
        np.testing.assert_array_equal(rgb[k], p.rgb)


# ------------------------------------------------------------ downsampling


def test_downsample_constant_and_mean():
    region = cand.RegionCandidate(50, 67)
    obs = fake_obs(np.full((200, 300), 0.42), np.full((200, 300, 3), 0.3, dtype=np.float32))
    rgb, depth = cand.downsample_region(obs, region)
    assert rgb.shape == (32, 32, 3) and depth.shape == (32, 32)
    np.testing.assert_allclose(depth, 0.42, atol=1e-6)
    np.testing.assert_allclose(rgb, 0.3, atol=1e-6)

    rng = np.random.default_rng(2)
    src = rng.random((200, 300)).astype(np.float32)
    _, depth = cand.downsample_region(fake_obs(src), region)
    assert depth.mean() == pytest.approx(src[50:150, 67:167].mean(), abs=1e-6)


def test_downsample_half_black_half_white():
    img = np.zeros((200, 300), dtype=np.float32)
    img[:, 150:] = 1.0
    rgb = np.repeat(img[..., None], 3, axis=2)
    rgb_ds, depth_ds = cand.downsample_region(fake_obs(img, rgb), cand.RegionCandidate(0, 100))
    assert depth_ds.mean() == pytest.approx(0.5, abs=1e-6)
    assert rgb_ds.mean() == pytest.approx(0.5, abs=1e-6)
    # the seam falls at 50/100*32 = 16 exactly
    assert np.all(depth_ds[:, :16] == 0) and np.allclose(depth_ds[:, 16:], 1)


def test_pool_matrix_rows_sum_to_one():
    m = cand._pool_matrix(100, 32)
    np.testing.assert_allclose(m.sum(axis=1), 1.0)
    np.testing.assert_allclose(m.sum(axis=0), 32 / 100)


# ------------------------------------------------------------ kernel E and selection


def test_kernel_shape():
    k = cand.kernel_e()
    assert k[2, 2] == 1.0 == k.max()
    np.testing.assert_array_equal(k, k[::-1])
    np.testing.assert_array_equal(k, k[:, ::-1])
    lit = cand.kernel_e("literal")
    np.testing.assert_allclose(lit[4], [0.1, 0.5, 0.8, 0.3, 0.1])
    with pytest.raises(ValueError):
        cand.kernel_e("other")


def test_select_examples():
    m = np.zeros((17, 17), dtype=np.uint8)
    assert cand.select_point(m) is None
    m[8, 8] = 1
    assert cand.select_point(m) == (8, 8)
    assert cand.convolve_kernel_e(m)[8, 8] == 1.0
    m[:] = 0
    m[4:7, 4:7] = 1
    assert cand.select_point(m) == (5, 5)
    assert cand.convolve_kernel_e(m)[5, 5] == pytest.approx(6.2)
    ones = np.ones((17, 17), dtype=np.uint8)
    assert cand.select_point(ones) == (2, 2)
    assert cand.convolve_kernel_e(ones)[2, 2] == pytest.approx(11.0)


@pytest.mark.parametrize("variant,kernel", [("symmetric", SYM), ("literal", LIT)])
def test_convolution_matches_brute_force(variant, kernel):
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = (rng.random((17, 17)) < 0.4).astype(np.uint8)
        np.testing.assert_array_equal(cand.convolve_kernel_e(m, variant) * 10, brute_conv(m, kernel))


@pytest.mark.parametrize("variant,kernel", [("symmetric", SYM), ("literal", LIT)])
def test_select_exhaustive_two_cells(variant, kernel):
    cells = [(i, j) for i in range(17) for j in range(17)]
    m = np.zeros((17, 17), dtype=np.uint8)
    for a in cells:
        m[a] = 1
        assert cand.select_point(m, variant) == brute_select([a], kernel)[0]
        m[a] = 0
    # pairs that can interact are the informative ones; far pairs are checked on a sample
    for a, b in itertools.combinations(cells, 2):
        near = abs(a[0] - b[0]) <= 2 and abs(a[1] - b[1]) <= 2
        if not near and (a[0] * 17 + a[1] + b[0] * 17 + b[1]) % 7:
            continue
        m[a] = m[b] = 1
        assert cand.select_point(m, variant) == brute_select([a, b], kernel)[0]
        m[a] = m[b] = 0


@settings(max_examples=100, deadline=None)
@given(arrays(np.uint8, (17, 17), elements=st.integers(0, 1)), st.sampled_from(["symmetric", "literal"]))
def test_select_random_maps(m, variant):
    kernel = SYM if variant == "symmetric" else LIT
    cells = list(zip(*np.nonzero(m)))
    expected = brute_select([(int(i), int(j)) for i, j in cells], kernel)[0] if cells else None
    got = cand.select_point(m, variant)
    assert got == expected
    if got is not None:
        assert m[got] == 1


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, (17, 17), elements=st.integers(0, 1)), st.integers(1, 3))
def test_select_rotation_equivariant(m, k):
    if not m.any():
        return
    conv = cand.convolve_kernel_e(m)
    best = np.where(m == 1, conv, -np.inf).max()
    rotated_choice = cand.select_point(np.rot90(m, k))
    # map the rotated index back into the original frame
    marker = np.zeros((17, 17), dtype=bool)
    marker[rotated_choice] = True
    back = np.rot90(marker, -k)
    i, j = np.argwhere(back)[0]
    assert m[i, j] == 1 and conv[i, j] == best
