"""Grasp sample storage and the dataset processing rules.

Point samples hold a 32x32 rgb + depth crop around an attempted suction
point and the 0/1 sensor outcome. Region samples hold a downsampled
100x100 window and the fraction of its grid points the point classifier
accepts.

On disk a dataset is a directory with ``manifest.json`` and ``samples.bin``
(fixed-size little-endian records, see ``POINT_RECORD``/``REGION_RECORD``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import candidates as cand
from . import nn
from .io_util import atomic_write_bytes, atomic_write_text

N_ROTATIONS = 16
FLAG_RELABELED = 1
DEFAULT_GRAD_THRESHOLD = 0.002  # meters per pixel step
FORMAT_NAME = "suction-affordance-dataset"
FORMAT_VERSION = 1

POINT_RECORD = np.dtype(
    [
        ("rgb", "<f4", (3, 32, 32)),
        ("depth", "<f4", (32, 32)),
        ("label", "u1"),
        ("flags", "u1"),
        ("pick_index", "<i8"),
        ("pixel", "<i4", (2,)),
    ]
)
REGION_RECORD = np.dtype(
    [
        ("rgb", "<f4", (3, 32, 32)),
        ("depth", "<f4", (32, 32)),
        ("score", "<f4"),
        ("pick_index", "<i8"),
        ("region", "<i4", (2,)),
    ]
)


class DatasetError(Exception):
    pass


class CorruptHeaderError(DatasetError):
    """manifest.json is unreadable or not a dataset manifest."""


class TruncatedPayloadError(DatasetError):
    """samples.bin holds fewer bytes than the manifest promises."""


class ManifestMismatchError(DatasetError):
    """Manifest counts disagree with the stored records."""


@dataclass
class PointSample:
    rgb: np.ndarray
    depth: np.ndarray
    label: int
    pick_index: int = 0
    pixel: tuple[int, int] = (0, 0)
    relabeled: bool = False


@dataclass
class PointDataset:
    rgb: np.ndarray
    depth: np.ndarray
    label: np.ndarray
    flags: np.ndarray
    pick_index: np.ndarray
    pixel: np.ndarray
    source_seeds: list[int] = field(default_factory=list)

    kind = "point"

    @classmethod
    def empty(cls) -> "PointDataset":
        return cls(
            np.zeros((0, 32, 32, 3), np.float32),
            np.zeros((0, 32, 32), np.float32),
            np.zeros(0, np.uint8),
            np.zeros(0, np.uint8),
            np.zeros(0, np.int64),
            np.zeros((0, 2), np.int32),
        )

    @classmethod
    def from_samples(cls, samples, source_seeds=()) -> "PointDataset":
        samples = list(samples)
        if not samples:
            ds = cls.empty()
            ds.source_seeds = list(source_seeds)
            return ds
        return cls(
            np.stack([s.rgb for s in samples]).astype(np.float32),
            np.stack([s.depth for s in samples]).astype(np.float32),
            np.array([s.label for s in samples], np.uint8),
            np.array([FLAG_RELABELED if s.relabeled else 0 for s in samples], np.uint8),
            np.array([s.pick_index for s in samples], np.int64),
            np.array([s.pixel for s in samples], np.int32).reshape(-1, 2),
            list(source_seeds),
        )

    def __len__(self) -> int:
        return len(self.label)

    def __getitem__(self, i) -> PointSample:
        return PointSample(
            self.rgb[i],
            self.depth[i],
            int(self.label[i]),
            int(self.pick_index[i]),
            tuple(int(v) for v in self.pixel[i]),
            bool(self.flags[i] & FLAG_RELABELED),
        )

    def select(self, idx) -> "PointDataset":
        return PointDataset(
            self.rgb[idx],
            self.depth[idx],
            self.label[idx],
            self.flags[idx],
            self.pick_index[idx],
            self.pixel[idx],
            list(self.source_seeds),
        )

    def manifest(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "count": len(self),
            "record_size": POINT_RECORD.itemsize,
            "positives": int(self.label.sum()),
            "negatives": int(len(self) - self.label.sum()),
            "relabeled": int((self.flags & FLAG_RELABELED).astype(bool).sum()),
            "source_seeds": [int(s) for s in self.source_seeds],
        }

    def to_records(self) -> np.ndarray:
        rec = np.zeros(len(self), dtype=POINT_RECORD)
        rec["rgb"] = np.moveaxis(self.rgb, -1, 1)
        rec["depth"] = self.depth
        rec["label"] = self.label
        rec["flags"] = self.flags
        rec["pick_index"] = self.pick_index
        rec["pixel"] = self.pixel
        return rec

    @classmethod
    def from_records(cls, rec: np.ndarray, source_seeds=()) -> "PointDataset":
        return cls(
            np.ascontiguousarray(np.moveaxis(rec["rgb"], 1, -1)).astype(np.float32),
            rec["depth"].astype(np.float32),
            rec["label"].astype(np.uint8),
            rec["flags"].astype(np.uint8),
            rec["pick_index"].astype(np.int64),
            rec["pixel"].astype(np.int32),
            list(source_seeds),
        )

    def check_labels(self) -> None:
        if np.any(self.label > 1):
            raise ManifestMismatchError("point labels must be 0 or 1")


@dataclass
class RegionDataset:
    rgb: np.ndarray
    depth: np.ndarray
    score: np.ndarray
    pick_index: np.ndarray
    region: np.ndarray
    source_seeds: list[int] = field(default_factory=list)

    kind = "region"

    @classmethod
    def empty(cls) -> "RegionDataset":
        return cls(
            np.zeros((0, 32, 32, 3), np.float32),
            np.zeros((0, 32, 32), np.float32),
            np.zeros(0, np.float32),
            np.zeros(0, np.int64),
            np.zeros((0, 2), np.int32),
        )

    def __len__(self) -> int:
        return len(self.score)

    def select(self, idx) -> "RegionDataset":
        return RegionDataset(
            self.rgb[idx], self.depth[idx], self.score[idx], self.pick_index[idx], self.region[idx],
            list(self.source_seeds),
        )

    def manifest(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "count": len(self),
            "record_size": REGION_RECORD.itemsize,
            "mean_score": float(self.score.mean()) if len(self) else 0.0,
            "source_seeds": [int(s) for s in self.source_seeds],
        }

    def to_records(self) -> np.ndarray:
        rec = np.zeros(len(self), dtype=REGION_RECORD)
        rec["rgb"] = np.moveaxis(self.rgb, -1, 1)
        rec["depth"] = self.depth
        rec["score"] = self.score
        rec["pick_index"] = self.pick_index
        rec["region"] = self.region
        return rec

    @classmethod
    def from_records(cls, rec: np.ndarray, source_seeds=()) -> "RegionDataset":
        return cls(
            np.ascontiguousarray(np.moveaxis(rec["rgb"], 1, -1)).astype(np.float32),
            rec["depth"].astype(np.float32),
            rec["score"].astype(np.float32),
            rec["pick_index"].astype(np.int64),
            rec["region"].astype(np.int32),
            list(source_seeds),
        )

    def check_labels(self) -> None:
        if np.any((self.score < 0) | (self.score > 1)):
            raise ManifestMismatchError("region scores must lie in [0, 1]")


def concat_points(a: PointDataset, b: PointDataset) -> PointDataset:
    return PointDataset(
        np.concatenate([a.rgb, b.rgb]),
        np.concatenate([a.depth, b.depth]),
        np.concatenate([a.label, b.label]),
        np.concatenate([a.flags, b.flags]),
        np.concatenate([a.pick_index, b.pick_index]),
        np.concatenate([a.pixel, b.pixel]),
        sorted(set(a.source_seeds) | set(b.source_seeds)),
    )


# ---------------------------------------------------------------- processing rules


def max_depth_step(depth: np.ndarray) -> np.ndarray:
    """Largest absolute depth change between 4-neighbours, per patch.

    Accepts one (32, 32) patch or a stack (N, 32, 32).
    """
    d = np.asarray(depth, dtype=np.float64)
    dr = np.abs(np.diff(d, axis=-2)).max(axis=(-2, -1))
    dc = np.abs(np.diff(d, axis=-1)).max(axis=(-2, -1))
    return np.maximum(dr, dc)


def relabel_high_gradient(ds: PointDataset, g_thr: float = DEFAULT_GRAD_THRESHOLD) -> PointDataset:
    """Force samples whose depth crop has a step above ``g_thr`` to label 0."""
    if g_thr <= 0:
        raise ValueError("g_thr must be positive")
    steep = max_depth_step(ds.depth) > g_thr if len(ds) else np.zeros(0, bool)
    out = ds.select(slice(None))
    out.label = np.where(steep, 0, ds.label).astype(np.uint8)
    out.flags = np.where(steep, ds.flags | FLAG_RELABELED, ds.flags).astype(np.uint8)
    return out


def _rotation_maps():
    """Per-rotation bilinear sampling tables about the crop's geometric center."""
    c = (cand.PATCH - 1) / 2.0
    rr, cc = np.meshgrid(np.arange(cand.PATCH), np.arange(cand.PATCH), indexing="ij")
    maps = []
    for k in range(N_ROTATIONS):
        if k % 4 == 0:
            maps.append(None)  # multiples of 90 degrees use exact rot90
            continue
        t = 2 * math.pi * k / N_ROTATIONS
        ct, st = math.cos(t), math.sin(t)
        # inverse map: output pixel -> source location
        y = rr - c
        x = cc - c
        sr = ct * y + st * x + c
        sc = -st * y + ct * x + c
        r0 = np.floor(sr).astype(np.int64)
        c0 = np.floor(sc).astype(np.int64)
        fr = sr - r0
        fc = sc - c0
        idx = []
        for dr, dc, wgt in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc), (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
            ri = np.clip(r0 + dr, 0, cand.PATCH - 1)
            ci = np.clip(c0 + dc, 0, cand.PATCH - 1)
            idx.append((ri, ci, wgt.astype(np.float32)))
        maps.append(idx)
    return maps


_ROT_MAPS = _rotation_maps()


def rotate_images(images: np.ndarray, k: int) -> np.ndarray:
    """Rotate (N, 32, 32[, C]) crops by k * 22.5 degrees counter-clockwise.

    Bilinear sampling; locations outside the crop take the nearest edge value.
    """
    k %= N_ROTATIONS
    if k % 4 == 0:
        return np.rot90(images, k // 4, axes=(1, 2)).copy()
    out = None
    extra = (None,) * (images.ndim - 3)
    for ri, ci, w in _ROT_MAPS[k]:
        term = images[:, ri, ci] * w[(slice(None), slice(None), *extra)]
        out = term if out is None else out + term
    return out.astype(images.dtype)


def rotate_images_per_sample(images: np.ndarray, ks: np.ndarray) -> np.ndarray:
    out = np.empty_like(images)
    for k in np.unique(ks):
        sel = ks == k
        out[sel] = rotate_images(images[sel], int(k))
    return out


def augment_rotations(s: PointSample) -> list[PointSample]:
    """The 16 rotated copies of one sample (k = 0 is the sample itself)."""
    out = []
    for k in range(N_ROTATIONS):
        rgb = rotate_images(s.rgb[None], k)[0]
        depth = rotate_images(s.depth[None], k)[0]
        out.append(PointSample(rgb, depth, s.label, s.pick_index, s.pixel, s.relabeled))
    return out


def expand_rotations(ds: PointDataset) -> tuple[PointDataset, np.ndarray]:
    """Every sample in all 16 rotations, plus the source index of each row."""
    parts = []
    groups = []
    for k in range(N_ROTATIONS):
        part = ds.select(slice(None))
        part.rgb = rotate_images(ds.rgb, k)
        part.depth = rotate_images(ds.depth, k)
        parts.append(part)
        groups.append(np.arange(len(ds)))
    out = parts[0]
    for p in parts[1:]:
        out = concat_points(out, p)
    return out, np.concatenate(groups)


def make_region_label(sgpa_params: nn.ModelParams, obs, region: cand.RegionCandidate) -> float:
    """Fraction of the region's 289 grid points the classifier calls positive."""
    return positive_count(sgpa_params, obs, region) / (cand.GRID_N * cand.GRID_N)


def positive_count(sgpa_params: nn.ModelParams, obs, region: cand.RegionCandidate) -> int:
    return int(binary_map(sgpa_params, obs, region).sum())


def binary_map(sgpa_params: nn.ModelParams, obs, region: cand.RegionCandidate) -> np.ndarray:
    """17x17 map of point-classifier decisions over the region's grid."""
    rgb, depth = cand.extract_patches(obs, cand.point_pixels(region))
    x_rgb, x_d = nn.prepare_inputs(rgb, depth, obs.floor_depth, obs.box_depth)
    labels = nn.predict_labels(sgpa_params, x_rgb, x_d)
    return labels.reshape(cand.GRID_N, cand.GRID_N)


def build_region_dataset(sgpa_params, observations, pick_indices=None, source_seeds=()) -> RegionDataset:
    """Label every window of every observation with the current classifier."""
    rgbs, depths, scores, picks, offsets = [], [], [], [], []
    for t, obs in enumerate(observations):
        for region in cand.region_candidates(*obs.depth.shape):
            rgb, depth = cand.downsample_region(obs, region)
            rgbs.append(rgb)
            depths.append(depth)
            scores.append(make_region_label(sgpa_params, obs, region))
            picks.append(pick_indices[t] if pick_indices is not None else t)
            offsets.append(region.top_left)
    if not scores:
        ds = RegionDataset.empty()
        ds.source_seeds = list(source_seeds)
        return ds
    return RegionDataset(
        np.stack(rgbs),
        np.stack(depths),
        np.array(scores, np.float32),
        np.array(picks, np.int64),
        np.array(offsets, np.int32),
        list(source_seeds),
    )


def split_sizes(n: int, ratio: float = 0.7) -> tuple[int, int]:
    n_train = math.ceil(Fraction(str(ratio)) * n)
    return n_train, n - n_train


def split_indices(n_groups: int, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n_groups)
    n_train, _ = split_sizes(n_groups, ratio)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def split(ds, ratio: float = 0.7, seed: int = 0, groups: np.ndarray | None = None):
    """Shuffled train/validation partition.

    With ``groups`` (e.g. the source index of rotated copies) whole groups
    go to one side, and the ratio applies to the number of groups.
    """
    if len(ds) < 2:
        raise ValueError("need at least two samples to split")
    if groups is None:
        tr, va = split_indices(len(ds), ratio, seed)
        return ds.select(tr), ds.select(va)
    uniq = np.unique(groups)
    tr_g, va_g = split_indices(len(uniq), ratio, seed)
    in_train = np.isin(groups, uniq[tr_g])
    return ds.select(np.flatnonzero(in_train)), ds.select(np.flatnonzero(~in_train))


def balance_indices(labels, seed: int) -> np.ndarray:
    """Indices that oversample the minority class up to the majority count.

    Every original index appears at least once; extra minority copies are
    drawn round-robin in a seeded order so duplication is as even as
    possible. Returned sorted.
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels != 1)
    if len(pos) == 0 or len(neg) == 0:
        return np.arange(len(labels))
    small, large = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    order = np.random.default_rng(seed).permutation(small)
    extra = np.resize(order, len(large) - len(small))
    return np.sort(np.concatenate([np.arange(len(labels)), extra]))


# ---------------------------------------------------------------- model tensors


def point_tensors(ds: PointDataset, floor_depth: float, box_depth: float) -> nn.TensorSet:
    rgb, d3 = nn.prepare_inputs(ds.rgb, ds.depth, floor_depth, box_depth)
    return nn.TensorSet(rgb, d3, ds.label.astype(np.int64))


def region_tensors(ds: RegionDataset, floor_depth: float, box_depth: float) -> nn.TensorSet:
    rgb, d3 = nn.prepare_inputs(ds.rgb, ds.depth, floor_depth, box_depth)
    return nn.TensorSet(rgb, d3, ds.score.astype(np.float32))


class RotationCycler:
    """Serves each stored sample at one of its 16 rotations per epoch.

    Sample i appears at rotation (epoch + offset_i) mod 16, so every block of
    16 consecutive epochs visits each rotation of each sample exactly once.
    """

    def __init__(self, n: int, seed: int):
        self.offsets = np.random.default_rng(seed).integers(0, N_ROTATIONS, size=n)

    def __call__(self, epoch: int, idx: np.ndarray, batch: nn.TensorSet) -> nn.TensorSet:
        ks = (epoch + self.offsets[idx]) % N_ROTATIONS
        return nn.TensorSet(
            rotate_images_per_sample(batch.rgb, ks),
            rotate_images_per_sample(batch.depth3, ks),
            batch.target,
        )


# ---------------------------------------------------------------- persistence


def save(ds, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(path / "samples.bin", ds.to_records().tobytes())
    atomic_write_text(path / "manifest.json", json.dumps(ds.manifest(), indent=2, sort_keys=True))


def load(path):
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
        kind = manifest["kind"]
        count = int(manifest["count"])
        record_size = int(manifest["record_size"])
        if manifest.get("format") != FORMAT_NAME or kind not in ("point", "region") or count < 0:
            raise ValueError("not a dataset manifest")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CorruptHeaderError(f"{path / 'manifest.json'}: {exc}") from exc
    cls, dtype = (PointDataset, POINT_RECORD) if kind == "point" else (RegionDataset, REGION_RECORD)
    if record_size != dtype.itemsize:
        raise CorruptHeaderError(f"record size {record_size} != {dtype.itemsize}")
    payload = (path / "samples.bin").read_bytes()
    need = count * dtype.itemsize
    if len(payload) < need:
        raise TruncatedPayloadError(f"{len(payload)} bytes, manifest needs {need}")
    if len(payload) != need:
        raise ManifestMismatchError(
            f"samples.bin holds {len(payload) / dtype.itemsize:g} records, manifest says {count}"
        )
    rec = np.frombuffer(payload, dtype=dtype)
    ds = cls.from_records(rec, manifest.get("source_seeds", []))
    ds.check_labels()
    if kind == "point" and "positives" in manifest and int(manifest["positives"]) != int(ds.label.sum()):
        raise ManifestMismatchError("manifest positive count disagrees with labels")
    return ds
