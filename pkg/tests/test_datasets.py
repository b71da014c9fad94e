import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suction_affordance import candidates as cand
from suction_affordance import datasets as ds
from suction_affordance import nn
from suction_affordance import scenesim as sim


def random_points(n, seed=0, step_every=3):
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        depth = np.full((32, 32), 0.45, dtype=np.float32) + rng.normal(0, 1e-4, (32, 32)).astype(np.float32)
        if step_every and i % step_every == 0:
            depth[:, 20:] -= 0.03
        rgb = rng.random((32, 32, 3)).astype(np.float32)
        samples.append(ds.PointSample(rgb, depth, int(rng.integers(0, 2)), i, (int(rng.integers(200)), int(rng.integers(300)))))
    return ds.PointDataset.from_samples(samples, [seed])


def random_regions(n, seed=0):
    rng = np.random.default_rng(seed)
    return ds.RegionDataset(
        rng.random((n, 32, 32, 3)).astype(np.float32),
        rng.random((n, 32, 32)).astype(np.float32),
        (rng.integers(0, 290, n) / 289).astype(np.float32),
        np.arange(n, dtype=np.int64),
        rng.integers(0, 200, (n, 2)).astype(np.int32),
        [seed],
    )


def scene_obs(seed=3):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sim.render(sim.generate_scene(sim.SceneConfig(seed=seed)))


# ------------------------------------------------------------ relabel


def test_relabel_examples():
    flat = np.full((32, 32), 0.45, dtype=np.float32)
    step = flat.copy()
    step[:, 16:] -= 0.03
    samples = [
        ds.PointSample(np.zeros((32, 32, 3)), flat, 1),
        ds.PointSample(np.zeros((32, 32, 3)), step, 1),
        ds.PointSample(np.zeros((32, 32, 3)), step, 0),
    ]
    out = ds.relabel_high_gradient(ds.PointDataset.from_samples(samples))
    assert out.label.tolist() == [1, 0, 0]
    assert [out[i].relabeled for i in range(3)] == [False, True, True]
    assert out.pick_index.tolist() == [0, 0, 0]


def test_relabel_threshold_boundary():
    d = np.full((32, 32), 0.45)
    d[:, 16:] -= 0.0015
    sample = ds.PointSample(np.zeros((32, 32, 3)), d.astype(np.float32), 1)
    assert ds.relabel_high_gradient(ds.PointDataset.from_samples([sample])).label[0] == 1
    assert ds.relabel_high_gradient(ds.PointDataset.from_samples([sample]), 0.001).label[0] == 0
    with pytest.raises(ValueError):
        ds.relabel_high_gradient(ds.PointDataset.empty(), 0.0)


def test_max_depth_step_analytic():
    d = np.zeros((32, 32))
    d[10:, :] = 0.03
    assert ds.max_depth_step(d) == pytest.approx(0.03)
    assert ds.max_depth_step(np.stack([d, d.T])).tolist() == pytest.approx([0.03, 0.03])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10_000), st.floats(0.0005, 0.05))
def test_relabel_properties(n, seed, thr):
    data = random_points(n, seed)
    once = ds.relabel_high_gradient(data, thr)
    twice = ds.relabel_high_gradient(once, thr)
    assert np.all(once.label <= data.label)
    assert np.array_equal(once.label, twice.label) and np.array_equal(once.flags, twice.flags)
    assert np.array_equal(once.rgb, data.rgb) and np.array_equal(once.pick_index, data.pick_index)


# ------------------------------------------------------------ rotations


def test_rotation_identity_and_flip():
    rng = np.random.default_rng(0)
    s = ds.PointSample(rng.random((32, 32, 3)).astype(np.float32), rng.random((32, 32)).astype(np.float32), 1)
    rot = ds.augment_rotations(s)
    assert len(rot) == 16 and all(r.label == 1 for r in rot)
    np.testing.assert_array_equal(rot[0].rgb, s.rgb)
    np.testing.assert_array_equal(rot[0].depth, s.depth)
    np.testing.assert_allclose(rot[8].depth, s.depth[::-1, ::-1], atol=1e-6)
    np.testing.assert_allclose(rot[8].rgb, s.rgb[::-1, ::-1], atol=1e-6)


def _bilinear_rotate(img, k):
    """Direct bilinear rotation about the crop center, independent of the tables."""
    t = 2 * np.pi * k / 16
    c = 15.5
    out = np.zeros_like(img, dtype=np.float64)
    for r in range(32):
        for col in range(32):
            y, x = r - c, col - c
            sr = np.cos(t) * y + np.sin(t) * x + c
            sc = -np.sin(t) * y + np.cos(t) * x + c
            r0, c0 = int(np.floor(sr)), int(np.floor(sc))
            fr, fc = sr - r0, sc - c0
            acc = 0.0
            for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc), (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
                acc += w * img[min(max(r0 + dr, 0), 31), min(max(c0 + dc, 0), 31)]
            out[r, col] = acc
    return out


def test_bilinear_direction_consistent_with_quarter_turns():
    rng = np.random.default_rng(1)
    img = rng.random((32, 32))
    # a 90 degree bilinear rotation is exact and must agree with rot90
    np.testing.assert_allclose(_bilinear_rotate(img, 4), np.rot90(img, 1), atol=1e-12)
    for k in (1, 3, 6, 13):
        np.testing.assert_allclose(ds.rotate_images(img[None].astype(np.float32), k)[0], _bilinear_rotate(img, k), atol=1e-5)


def test_rotation_composition_is_close():
    # smooth image: two 22.5 degree steps land near one 45 degree step
    yy, xx = np.mgrid[0:32, 0:32]
    img = np.sin(xx / 6.0) + np.cos(yy / 7.0)
    once = ds.rotate_images(img[None], 2)[0]
    twice = ds.rotate_images(ds.rotate_images(img[None], 1), 1)[0]
    inner = slice(8, 24)
    assert np.abs(once[inner, inner] - twice[inner, inner]).max() < 0.05


def test_rotation_stays_within_depth_range_on_scene_crops():
    # bilinear samples are convex combinations of source pixels
    obs = scene_obs(4)
    rgb, depth = cand.extract_patches(obs, cand.point_pixels(cand.RegionCandidate(50, 67))[::17])
    for d in depth:
        for k in range(16):
            r = ds.rotate_images(d[None], k)[0]
            assert r.min() >= d.min() - 1e-6 and r.max() <= d.max() + 1e-6


def test_expand_rotations_and_grouped_split():
    data = random_points(10, 1)
    big, groups = ds.expand_rotations(data)
    assert len(big) == 160
    assert np.array_equal(np.bincount(groups), np.full(10, 16))
    tr, va = ds.split(big, 0.7, seed=3, groups=groups)
    assert len(tr) == 7 * 16 and len(va) == 3 * 16
    assert set(tr.pick_index.tolist()).isdisjoint(va.pick_index.tolist())


def test_rotation_cycler_visits_every_rotation():
    cyc = ds.RotationCycler(5, seed=0)
    seen = {i: set() for i in range(5)}
    idx = np.arange(5)
    for epoch in range(16):
        ks = (epoch + cyc.offsets[idx]) % 16
        for i, k in zip(idx, ks):
            seen[i].add(int(k))
    assert all(len(v) == 16 for v in seen.values())


def test_rotation_cycler_transform():
    data = random_points(4, 2)
    ts = ds.point_tensors(data, 0.5, 0.15)
    cyc = ds.RotationCycler(4, seed=1)
    out = cyc(3, np.arange(4), ts)
    for i in range(4):
        k = (3 + cyc.offsets[i]) % 16
        np.testing.assert_array_equal(out.rgb[i], ds.rotate_images(ts.rgb[i : i + 1], k)[0])
    assert np.array_equal(out.target, ts.target)


# ------------------------------------------------------------ region labels


def const_classifier(positive: bool):
    p = nn.zero_params(nn.SGPA)
    p.tensors["head.b"][:] = [0.0, 1.0] if positive else [1.0, 0.0]
    return p


def test_region_label_constant_classifiers():
    obs = scene_obs()
    region = cand.region_candidates(200, 300)[5]
    assert ds.make_region_label(const_classifier(False), obs, region) == 0.0
    assert ds.make_region_label(const_classifier(True), obs, region) == 1.0


def test_region_label_counts_exactly():
    obs = scene_obs()
    region = cand.region_candidates(200, 300)[6]
    params = nn.init_params(nn.SGPA, 4)
    # brute force: classify the crops one by one
    count = 0
    for px in cand.point_pixels(region):
        p = cand.extract_patch(obs, tuple(px))
        rgb, d3 = nn.prepare_inputs(p.rgb[None], p.depth[None], obs.floor_depth, obs.box_depth)
        logits = nn.forward(params, rgb, d3)[0]
        count += int(logits[1] > logits[0])
    assert ds.make_region_label(params, obs, region) == count / 289
    assert ds.positive_count(params, obs, region) == count
    assert 100 / 289 == pytest.approx(0.34602, abs=1e-5)


def test_build_region_dataset():
    obs = [scene_obs(1), scene_obs(2)]
    out = ds.build_region_dataset(const_classifier(True), obs, [7, 9], [5])
    assert len(out) == 24
    assert out.pick_index.tolist() == [7] * 12 + [9] * 12
    assert np.all(out.score == 1.0)
    assert out.region[:12].tolist() == [list(r.top_left) for r in cand.region_candidates(200, 300)]
    assert len(ds.build_region_dataset(const_classifier(True), [], [], [])) == 0


# ------------------------------------------------------------ splits and balancing


def test_split_sizes():
    assert ds.split_sizes(10) == (7, 3)
    assert ds.split_sizes(3) == (3, 0)
    assert ds.split_sizes(100, 0.7) == (70, 30)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000))
def test_split_is_partition(n, seed):
    data = random_points(n, seed, step_every=0)
    tr, va = ds.split(data, 0.7, seed)
    ids = sorted(tr.pick_index.tolist() + va.pick_index.tolist())
    assert ids == list(range(n))
    assert len(tr) == ds.split_sizes(n)[0]
    tr2, _ = ds.split(data, 0.7, seed)
    assert np.array_equal(tr.pick_index, tr2.pick_index)


def test_split_needs_two():
    with pytest.raises(ValueError):
        ds.split(random_points(1), 0.7, 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=80), st.integers(0, 100))
def test_balance_indices(labels, seed):
    labels = np.array(labels)
    idx = ds.balance_indices(labels, seed)
    assert set(range(len(labels))) <= set(idx.tolist())
    pos, neg = int(labels.sum()), int(len(labels) - labels.sum())
    if pos and neg:
        bal = labels[idx]
        assert bal.sum() == len(bal) - bal.sum() == max(pos, neg)
        counts = np.bincount(idx, minlength=len(labels))
        minority = np.flatnonzero(labels == (1 if pos < neg else 0))
        assert counts[minority].max() - counts[minority].min() <= 1
    else:
        assert np.array_equal(idx, np.arange(len(labels)))


# ------------------------------------------------------------ persistence


def test_point_roundtrip(tmp_path):
    data = ds.relabel_high_gradient(random_points(25, 3))
    ds.save(data, tmp_path / "pts")
    back = ds.load(tmp_path / "pts")
    assert isinstance(back, ds.PointDataset)
    for f in ("rgb", "depth", "label", "flags", "pick_index", "pixel"):
        assert getattr(back, f).tobytes() == getattr(data, f).tobytes()
    assert back.source_seeds == [3]
    assert back.manifest() == data.manifest()


def test_region_roundtrip(tmp_path):
    data = random_regions(13, 4)
    ds.save(data, tmp_path / "reg")
    back = ds.load(tmp_path / "reg")
    for f in ("rgb", "depth", "score", "pick_index", "region"):
        assert getattr(back, f).tobytes() == getattr(data, f).tobytes()


@pytest.mark.parametrize("empty", [ds.PointDataset.empty(), ds.RegionDataset.empty()])
def test_empty_roundtrip(tmp_path, empty):
    ds.save(empty, tmp_path / "e")
    back = ds.load(tmp_path / "e")
    assert len(back) == 0 and type(back) is type(empty)


def test_point_record_layout(tmp_path):
    data = random_points(2, 5)
    ds.save(data, tmp_path / "p")
    raw = (tmp_path / "p" / "samples.bin").read_bytes()
    assert len(raw) == 2 * ds.POINT_RECORD.itemsize
    assert ds.POINT_RECORD.itemsize == 4 * 3 * 32 * 32 + 4 * 32 * 32 + 1 + 1 + 8 + 8
    first_rgb = np.frombuffer(raw[: 4 * 1024], dtype="<f4").reshape(32, 32)
    np.testing.assert_array_equal(first_rgb, data.rgb[0, :, :, 0])
    off = 4 * 4 * 1024
    assert raw[off] == data.label[0]
    assert int.from_bytes(raw[off + 2 : off + 10], "little") == 0


def test_load_errors(tmp_path):
    data = random_points(5, 6)
    d = tmp_path / "x"
    ds.save(data, d)
    payload = (d / "samples.bin").read_bytes()

    (d / "samples.bin").write_bytes(payload[:-10])
    with pytest.raises(ds.TruncatedPayloadError):
        ds.load(d)

    (d / "samples.bin").write_bytes(payload + payload[: ds.POINT_RECORD.itemsize])
    with pytest.raises(ds.ManifestMismatchError):
        ds.load(d)

    (d / "samples.bin").write_bytes(payload)
    manifest = json.loads((d / "manifest.json").read_text())
    manifest["positives"] += 1
    (d / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ds.ManifestMismatchError):
        ds.load(d)

    (d / "manifest.json").write_text("{not json")
    with pytest.raises(ds.CorruptHeaderError):
        ds.load(d)
    (d / "manifest.json").write_text(json.dumps({"kind": "point"}))
    with pytest.raises(ds.CorruptHeaderError):
        ds.load(d)
    with pytest.raises(ds.CorruptHeaderError):
        ds.load(tmp_path / "missing")
    assert issubclass(ds.TruncatedPayloadError, ds.DatasetError)


def test_sample_accessors():
    data = random_points(3, 7)
    s = data[1]
    assert s.pick_index == 1 and s.depth.shape == (32, 32)
    assert len(ds.concat_points(data, data)) == 6
