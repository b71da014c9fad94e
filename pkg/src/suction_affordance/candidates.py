"""Detection geometry: region windows, point grids, crops and point selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REGION_SIZE = 100
GRID_N = 17
GRID_STEP = 6
GRID_OFFSET = 2
PATCH = 32
PATCH_CENTER = 16
REGION_ROWS = 3
REGION_COLS = 4
DOWNSAMPLED = 32

# weights x10 so the convolution runs in exact integer arithmetic
KERNEL_E_SYMMETRIC_X10 = np.array(
    [
        [1, 3, 5, 3, 1],
        [3, 5, 8, 5, 3],
        [5, 8, 10, 8, 5],
        [3, 5, 8, 5, 3],
        [1, 3, 5, 3, 1],
    ],
    dtype=np.int64,
)
KERNEL_E_LITERAL_X10 = KERNEL_E_SYMMETRIC_X10.copy()
KERNEL_E_LITERAL_X10[4] = [1, 5, 8, 3, 1]

KERNEL_VARIANTS = ("symmetric", "literal")


def kernel_e(variant: str = "symmetric") -> np.ndarray:
    """The 5x5 centering kernel as floats."""
    return _kernel_x10(variant) / 10.0


def _kernel_x10(variant: str) -> np.ndarray:
    if variant == "symmetric":
        return KERNEL_E_SYMMETRIC_X10
    if variant == "literal":
        return KERNEL_E_LITERAL_X10
    raise ValueError(f"unknown kernel variant {variant!r}")


@dataclass(frozen=True)
class RegionCandidate:
    top: int
    left: int
    size: int = REGION_SIZE

    @property
    def top_left(self) -> tuple[int, int]:
        return self.top, self.left


@dataclass(frozen=True)
class PointCandidate:
    grid_index: tuple[int, int]
    pixel: tuple[int, int]


@dataclass(frozen=True)
class Patch:
    rgb: np.ndarray  # (32, 32, 3)
    depth: np.ndarray  # (32, 32)


def region_candidates(raster_h: int, raster_w: int) -> list[RegionCandidate]:
    """Twelve 100x100 windows on a 3x4 grid spanning the raster, row-major."""
    if raster_h < REGION_SIZE or raster_w < REGION_SIZE:
        raise ValueError(f"raster {raster_h}x{raster_w} is smaller than a {REGION_SIZE}px window")
    rows = [round(k * (raster_h - REGION_SIZE) / (REGION_ROWS - 1)) for k in range(REGION_ROWS)]
    cols = [round(k * (raster_w - REGION_SIZE) / (REGION_COLS - 1)) for k in range(REGION_COLS)]
    return [RegionCandidate(r, c) for r in rows for c in cols]


def grid_offsets() -> np.ndarray:
    return GRID_OFFSET + GRID_STEP * np.arange(GRID_N)


def point_grid(region: RegionCandidate) -> list[PointCandidate]:
    offs = grid_offsets()
    return [
        PointCandidate((i, j), (region.top + int(offs[i]), region.left + int(offs[j])))
        for i in range(GRID_N)
        for j in range(GRID_N)
    ]


def point_pixels(region: RegionCandidate) -> np.ndarray:
    """(289, 2) absolute pixels of the grid, row-major."""
    offs = grid_offsets()
    ii, jj = np.meshgrid(offs, offs, indexing="ij")
    return np.stack([ii.ravel() + region.top, jj.ravel() + region.left], axis=1)


def grid_pixel(region: RegionCandidate, grid_index) -> tuple[int, int]:
    i, j = grid_index
    return region.top + GRID_OFFSET + GRID_STEP * i, region.left + GRID_OFFSET + GRID_STEP * j


def _crop_indices(center: int, limit: int) -> np.ndarray:
    # edge replication == clamping the source index
    return np.clip(np.arange(center - PATCH_CENTER, center - PATCH_CENTER + PATCH), 0, limit - 1)


def extract_patch(obs, pixel) -> Patch:
    """32x32 crop with ``pixel`` at index (16, 16); edge-replicated outside."""
    r, c = pixel
    h, w = obs.depth.shape
    if not (0 <= r < h and 0 <= c < w):
        raise IndexError(f"pixel {pixel} outside {h}x{w} raster")
    ri = _crop_indices(r, h)
    ci = _crop_indices(c, w)
    return Patch(obs.rgb[np.ix_(ri, ci)], obs.depth[np.ix_(ri, ci)])


def extract_patches(obs, pixels) -> tuple[np.ndarray, np.ndarray]:
    """Stacked crops for many pixels: rgb (N, 32, 32, 3) and depth (N, 32, 32)."""
    pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    h, w = obs.depth.shape
    base = np.arange(PATCH) - PATCH_CENTER
    ri = np.clip(pixels[:, 0:1] + base, 0, h - 1)
    ci = np.clip(pixels[:, 1:2] + base, 0, w - 1)
    rgb = obs.rgb[ri[:, :, None], ci[:, None, :]]
    depth = obs.depth[ri[:, :, None], ci[:, None, :]]
    return rgb, depth


def _pool_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Area-weighted average pooling from n_in cells to n_out bins."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    m = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = edges[i], edges[i + 1]
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                m[i, j] = overlap
    return m / (n_in / n_out)


_POOL = _pool_matrix(REGION_SIZE, DOWNSAMPLED)


def downsample_region(obs, region: RegionCandidate) -> tuple[np.ndarray, np.ndarray]:
    """Average-pool a 100x100 window to 32x32: rgb (32, 32, 3), depth (32, 32)."""
    rs = slice(region.top, region.top + region.size)
    cs = slice(region.left, region.left + region.size)
    if region.size != REGION_SIZE:
        pool = _pool_matrix(region.size, DOWNSAMPLED)
    else:
        pool = _POOL
    depth = pool @ obs.depth[rs, cs].astype(np.float64) @ pool.T
    win = obs.rgb[rs, cs].astype(np.float64)
    rgb = np.stack([pool @ win[:, :, ch] @ pool.T for ch in range(win.shape[2])], axis=2)
    return rgb.astype(np.float32), depth.astype(np.float32)


def convolve_kernel_e(binary_map: np.ndarray, variant: str = "symmetric") -> np.ndarray:
    """Zero-padded 'same' convolution of a 17x17 map with kernel E."""
    m = np.asarray(binary_map).astype(np.int64)
    k = _kernel_x10(variant)
    h, w = m.shape
    padded = np.zeros((h + 4, w + 4), dtype=np.int64)
    padded[2:-2, 2:-2] = m
    out = np.zeros((h, w), dtype=np.int64)
    # true convolution: flipped kernel slides over the map
    kf = k[::-1, ::-1]
    for a in range(5):
        for b in range(5):
            out += kf[a, b] * padded[a : a + h, b : b + w]
    return out / 10.0


def select_point(binary_map, variant: str = "symmetric"):
    """Grid index of the most centered positive cell, or None if none.

    Only cells marked 1 are eligible; ties go to the first in row-major order.
    """
    m = np.asarray(binary_map)
    if not m.any():
        return None
    conv = convolve_kernel_e(m, variant)
    masked = np.where(m.astype(bool), conv, -np.inf)
    flat = int(np.argmax(masked))
    return divmod(flat, m.shape[1])
