"""Synthetic bin of parametric objects seen by an overhead depth camera.

The world is a heightfield over the box floor. Objects are analytic
primitives; each rests on the highest point under its footprint at the time
it is placed, which is how dense piles form without a physics engine.
Rendering is orthographic: depth = floor_depth - height.

A geometric seal check stands in for the vacuum sensor. A pick at a pixel
succeeds when the pixel shows an object, the pad disk around it is planar
to within ``eps_seal`` and every surface normal in the disk is within
``theta_max`` of vertical.
"""

from __future__ import annotations

import json
import logging
import math
import struct
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from .io_util import atomic_write_bytes

log = logging.getLogger(__name__)

FLAT_BOX = "flat_box"
TILTED_BOX = "tilted_box"
LYING_CYLINDER = "lying_cylinder"
SPHERE = "sphere"
RAMP = "ramp"
ARCHETYPES = (FLAT_BOX, TILTED_BOX, LYING_CYLINDER, SPHERE, RAMP)

FLOOR_ALBEDO = (0.42, 0.40, 0.38)
RAMP_BASE_THICKNESS = 0.01
MIN_TILTED_HEIGHT = 0.01
PLACEMENT_RETRIES = 30
REARRANGE_EVERY = 50


@dataclass(frozen=True)
class ObjectKind:
    """A size preset of one archetype.

    ``dims`` is (length, width, height) for boxes, (length, width) for the
    ramp, (radius, length) for the cylinder and (radius,) for the sphere,
    all in meters. ``tilt_deg`` bounds the sampled tilt for tilted shapes.
    """

    name: str
    archetype: str
    dims: tuple[float, ...]
    tilt_deg: tuple[float, float] = (0.0, 0.0)


KINDS: dict[str, ObjectKind] = {
    k.name: k
    for k in (
        ObjectKind("flat_box/small", FLAT_BOX, (0.090, 0.070, 0.040)),
        ObjectKind("flat_box/large", FLAT_BOX, (0.140, 0.100, 0.060)),
        ObjectKind("tilted_box/small", TILTED_BOX, (0.100, 0.075, 0.050), (5.0, 25.0)),
        ObjectKind("tilted_box/large", TILTED_BOX, (0.140, 0.100, 0.060), (5.0, 25.0)),
        ObjectKind("lying_cylinder/small", LYING_CYLINDER, (0.040, 0.120)),
        ObjectKind("lying_cylinder/large", LYING_CYLINDER, (0.050, 0.160)),
        ObjectKind("sphere/small", SPHERE, (0.050,)),
        ObjectKind("sphere/large", SPHERE, (0.060,)),
        ObjectKind("ramp/small", RAMP, (0.100, 0.080), (15.0, 40.0)),
        ObjectKind("ramp/large", RAMP, (0.140, 0.100), (15.0, 40.0)),
        # held out of training: new size presets of the same archetypes
        ObjectKind("flat_box/novel", FLAT_BOX, (0.115, 0.085, 0.050)),
        ObjectKind("tilted_box/novel", TILTED_BOX, (0.120, 0.085, 0.055), (5.0, 25.0)),
        ObjectKind("lying_cylinder/novel", LYING_CYLINDER, (0.045, 0.140)),
        ObjectKind("sphere/novel", SPHERE, (0.055,)),
        ObjectKind("ramp/novel", RAMP, (0.120, 0.090), (15.0, 40.0)),
    )
}
KNOWN_KINDS = tuple(k for k in KINDS if not k.endswith("/novel"))
UNSEEN_KINDS = tuple(k for k in KINDS if k.endswith("/novel"))


class PickCause(str, Enum):
    SEAL_OK = "SealOk"
    NOT_ON_OBJECT = "NotOnObject"
    SURFACE_TOO_STEEP = "SurfaceTooSteep"
    SEAL_LEAK = "SealLeak"
    NOISE_FAIL = "NoiseFail"


class ObjectAbsentError(KeyError):
    """The object a pick refers to is no longer in the scene."""


@dataclass(frozen=True)
class SceneConfig:
    raster_h: int = 200
    raster_w: int = 300
    pitch_y: float = 0.0015
    pitch_x: float = 0.5 / 300
    box_depth: float = 0.15
    camera_height: float = 0.5
    num_objects: int = 10
    archetype_set: tuple[str, ...] = KNOWN_KINDS
    seed: int = 0
    size_jitter: float = 0.05

    def __post_init__(self):
        if self.raster_h <= 0 or self.raster_w <= 0:
            raise ValueError("raster must be non-empty")
        if self.num_objects < 0:
            raise ValueError("num_objects must be >= 0")
        if self.camera_height < 2 * self.box_depth:
            raise ValueError("camera must sit above the tallest allowed stack")
        unknown = [k for k in self.archetype_set if k not in KINDS]
        if unknown:
            raise ValueError(f"unknown object kinds {unknown}")
        if self.num_objects and not self.archetype_set:
            raise ValueError("archetype_set is empty")

    @property
    def floor_depth(self) -> float:
        return self.camera_height

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["archetype_set"] = list(self.archetype_set)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        if "archetype_set" in d:
            d["archetype_set"] = tuple(d["archetype_set"])
        return cls(**d)


@dataclass(frozen=True)
class OracleParams:
    pad_radius_px: int = 7
    theta_max_deg: float = 30.0
    eps_seal: float = 0.002
    p_noise: float = 0.0


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    kind: str
    archetype: str
    dims: tuple[float, ...]
    row: float
    col: float
    yaw: float
    tilt: float
    albedo: tuple[float, float, float]

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["dims"] = list(self.dims)
        d["albedo"] = list(self.albedo)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectInstance":
        d = dict(d)
        d["dims"] = tuple(d["dims"])
        d["albedo"] = tuple(d["albedo"])
        return cls(**d)


@dataclass(frozen=True)
class PickOutcome:
    success: bool
    cause: PickCause
    object_id: int | None = None


@dataclass(frozen=True)
class Observation:
    depth: np.ndarray
    rgb: np.ndarray
    pitch_y: float
    pitch_x: float
    floor_depth: float
    box_depth: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape


# ---------------------------------------------------------------- geometry


def _half_extents(obj_archetype: str, dims, yaw: float) -> tuple[float, float]:
    """Axis-aligned half extents (y, x) in meters of the rotated footprint."""
    if obj_archetype == SPHERE:
        return dims[0], dims[0]
    if obj_archetype == LYING_CYLINDER:
        length, width = dims[1], 2 * dims[0]
    else:
        length, width = dims[0], dims[1]
    c, s = abs(math.cos(yaw)), abs(math.sin(yaw))
    hx = 0.5 * (length * c + width * s)
    hy = 0.5 * (length * s + width * c)
    return hy, hx


def object_local_height(obj: ObjectInstance, cfg: SceneConfig):
    """Height of ``obj`` above its resting base over its raster bounding box.

    Returns (row slice, col slice, mask, height) or None when the footprint
    misses the raster entirely.
    """
    hy, hx = _half_extents(obj.archetype, obj.dims, obj.yaw)
    r0 = max(int(math.floor(obj.row - hy / cfg.pitch_y)) - 1, 0)
    r1 = min(int(math.ceil(obj.row + hy / cfg.pitch_y)) + 2, cfg.raster_h)
    c0 = max(int(math.floor(obj.col - hx / cfg.pitch_x)) - 1, 0)
    c1 = min(int(math.ceil(obj.col + hx / cfg.pitch_x)) + 2, cfg.raster_w)
    if r0 >= r1 or c0 >= c1:
        return None
    rr, cc = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
    dy = (rr - obj.row) * cfg.pitch_y
    dx = (cc - obj.col) * cfg.pitch_x
    cy, sy = math.cos(obj.yaw), math.sin(obj.yaw)
    u = cy * dx + sy * dy
    v = -sy * dx + cy * dy
    a = obj.archetype
    if a == SPHERE:
        r = obj.dims[0]
        d2 = dx * dx + dy * dy
        mask = d2 < r * r
        h = r + np.sqrt(np.clip(r * r - d2, 0.0, None))
    elif a == LYING_CYLINDER:
        r, length = obj.dims
        mask = (np.abs(u) <= length / 2) & (np.abs(v) < r)
        h = r + np.sqrt(np.clip(r * r - v * v, 0.0, None))
    else:
        length, width = obj.dims[0], obj.dims[1]
        mask = (np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)
        if a == FLAT_BOX:
            h = np.full(u.shape, obj.dims[2])
        elif a == TILTED_BOX:
            h = obj.dims[2] + math.tan(obj.tilt) * u
        elif a == RAMP:
            h = RAMP_BASE_THICKNESS + (u + length / 2) * math.tan(obj.tilt)
        else:
            raise ValueError(f"unknown archetype {a!r}")
    return slice(r0, r1), slice(c0, c1), mask, np.where(mask, h, 0.0)


def _stack_onto(hf: np.ndarray, top: np.ndarray, obj: ObjectInstance, cfg: SceneConfig) -> bool:
    """Drop ``obj`` onto the pile in place; False if nothing was drawn."""
    local = object_local_height(obj, cfg)
    if local is None:
        return False
    rs, cs, mask, h = local
    if not mask.any():
        return False
    sub = hf[rs, cs]
    base = sub[mask].max()
    surf = base + h
    win = mask & (surf >= sub)
    sub[win] = surf[win]
    top[rs, cs][win] = obj.id
    return True


def compose_heightfield(cfg: SceneConfig, objects) -> tuple[np.ndarray, np.ndarray]:
    """Heightfield (meters above floor) and topmost-object id map (-1 = floor).

    Objects settle in list order, each onto the pile formed by its
    predecessors.
    """
    hf = np.zeros((cfg.raster_h, cfg.raster_w))
    top = np.full((cfg.raster_h, cfg.raster_w), -1, dtype=np.int64)
    for obj in objects:
        _stack_onto(hf, top, obj, cfg)
    return hf, top


def normal_map(depth: np.ndarray, pitch_y: float, pitch_x: float) -> np.ndarray:
    """Unit surface normals (H, W, 3) from a depth map, z pointing up.

    Central differences inside, one-sided differences on the raster border.
    """
    height = -np.asarray(depth, dtype=np.float64)
    axes = []
    if height.shape[0] > 1:
        axes.append(0)
    if height.shape[1] > 1:
        axes.append(1)
    dzdy = np.zeros_like(height)
    dzdx = np.zeros_like(height)
    if 0 in axes:
        dzdy = np.gradient(height, pitch_y, axis=0)
    if 1 in axes:
        dzdx = np.gradient(height, pitch_x, axis=1)
    n = np.stack([-dzdx, -dzdy, np.ones_like(height)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _axis_slope(line: np.ndarray, i: int, pitch: float) -> float:
    if line.size < 2:
        return 0.0
    if i == 0:
        return (line[1] - line[0]) / pitch
    if i == line.size - 1:
        return (line[-1] - line[-2]) / pitch
    return (line[i + 1] - line[i - 1]) / (2 * pitch)


def surface_normal(obs: Observation, pixel) -> np.ndarray:
    """Unit normal at one pixel, same differencing rule as :func:`normal_map`."""
    r, c = pixel
    h, w = obs.depth.shape
    if not (0 <= r < h and 0 <= c < w):
        raise IndexError(f"pixel {pixel} outside {h}x{w} raster")
    height = -obs.depth.astype(np.float64)
    dzdy = _axis_slope(height[:, c], r, obs.pitch_y)
    dzdx = _axis_slope(height[r, :], c, obs.pitch_x)
    n = np.array([-dzdx, -dzdy, 1.0])
    return n / np.linalg.norm(n)


# ---------------------------------------------------------------- scene


@dataclass(frozen=True)
class DepthScene:
    config: SceneConfig
    objects: tuple[ObjectInstance, ...] = ()
    pick_count_since_rearrange: int = 0
    rearrange_count: int = 0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("object ids must be unique")

    @cached_property
    def _composed(self):
        return compose_heightfield(self.config, self.objects)

    @property
    def heightfield(self) -> np.ndarray:
        return self._composed[0]

    @property
    def top_id(self) -> np.ndarray:
        return self._composed[1]

    @cached_property
    def depth(self) -> np.ndarray:
        """Camera depth as float32, exactly what an observation carries."""
        return (self.config.floor_depth - self.heightfield).astype(np.float32)

    @cached_property
    def normals(self) -> np.ndarray:
        return normal_map(self.depth, self.config.pitch_y, self.config.pitch_x)

    def object_ids(self) -> list[int]:
        return [o.id for o in self.objects]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "objects": [o.to_dict() for o in self.objects],
            "pick_count_since_rearrange": self.pick_count_since_rearrange,
            "rearrange_count": self.rearrange_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DepthScene":
        return cls(
            SceneConfig.from_dict(d["config"]),
            tuple(ObjectInstance.from_dict(o) for o in d["objects"]),
            d.get("pick_count_since_rearrange", 0),
            d.get("rearrange_count", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "DepthScene":
        return cls.from_dict(json.loads(text))


def _sample_pose(rng: np.random.Generator, kind: ObjectKind, dims, cfg: SceneConfig):
    yaw = float(rng.uniform(0.0, math.pi))
    lo, hi = kind.tilt_deg
    tilt = math.radians(float(rng.uniform(lo, hi))) if hi > 0 else 0.0
    if kind.archetype == TILTED_BOX:
        # keep the low end of the top above the floor
        max_tilt = math.atan((dims[2] - MIN_TILTED_HEIGHT) / (dims[0] / 2))
        tilt = min(tilt, max_tilt)
    if rng.random() < 0.5 and kind.archetype in (TILTED_BOX, RAMP):
        yaw += math.pi
    hy, hx = _half_extents(kind.archetype, dims, yaw)
    rmin, rmax = hy / cfg.pitch_y, cfg.raster_h - 1 - hy / cfg.pitch_y
    cmin, cmax = hx / cfg.pitch_x, cfg.raster_w - 1 - hx / cfg.pitch_x
    if rmin > rmax or cmin > cmax:
        return None
    row = float(rng.uniform(rmin, rmax))
    col = float(rng.uniform(cmin, cmax))
    return row, col, yaw, tilt


def _place(rng, cfg: SceneConfig, hf, top, make_obj):
    """Try poses until the object fits under the stacking cap.

    ``make_obj(pose)`` builds the instance. Returns the placed instance or
    None after the retry budget is spent.
    """
    cap = 2 * cfg.box_depth
    for _ in range(PLACEMENT_RETRIES):
        obj = make_obj(rng)
        if obj is None:
            continue
        local = object_local_height(obj, cfg)
        if local is None or not local[2].any():
            continue
        rs, cs, mask, h = local
        base = hf[rs, cs][mask].max()
        if base + h[mask].max() > cap:
            continue
        _stack_onto(hf, top, obj, cfg)
        return obj
    return None


def _instance_factory(kind: ObjectKind, dims, obj_id: int, albedo, cfg: SceneConfig):
    def make(rng):
        pose = _sample_pose(rng, kind, dims, cfg)
        if pose is None:
            return None
        row, col, yaw, tilt = pose
        return ObjectInstance(obj_id, kind.name, kind.archetype, dims, row, col, yaw, tilt, albedo)

    return make


def _scene_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def generate_scene(config: SceneConfig) -> DepthScene:
    """Scatter ``config.num_objects`` objects; equal seeds give equal scenes.

    Kinds are dealt from shuffled passes over ``config.archetype_set`` so a
    ten-object scene over ten kinds holds one of each.
    """
    rng = _scene_rng(config.seed, 0)
    hf = np.zeros((config.raster_h, config.raster_w))
    top = np.full(hf.shape, -1, dtype=np.int64)
    kinds: list[str] = []
    while len(kinds) < config.num_objects:
        kinds.extend(config.archetype_set[i] for i in rng.permutation(len(config.archetype_set)))
    objects = []
    notes = []
    for obj_id, name in enumerate(kinds[: config.num_objects]):
        kind = KINDS[name]
        jitter = 1.0 + config.size_jitter * rng.uniform(-1.0, 1.0, size=len(kind.dims))
        dims = tuple(float(d) for d in np.asarray(kind.dims) * jitter)
        albedo = tuple(float(a) for a in rng.uniform(0.35, 0.95, size=3))
        obj = _place(rng, config, hf, top, _instance_factory(kind, dims, obj_id, albedo, config))
        if obj is None:
            msg = f"could not place object {obj_id} ({name}); scene has one object fewer"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            log.warning(msg)
            notes.append(msg)
            continue
        objects.append(obj)
    return DepthScene(config, tuple(objects), 0, 0, tuple(notes))


def render(scene: DepthScene) -> Observation:
    cfg = scene.config
    depth = scene.depth.copy()
    albedo = np.empty(depth.shape + (3,))
    albedo[:] = FLOOR_ALBEDO
    top = scene.top_id
    for obj in scene.objects:
        albedo[top == obj.id] = obj.albedo
    # overhead light along +z: the Lambert term is the normal's z component
    shade = np.clip(scene.normals[..., 2], 0.0, 1.0)
    rgb = np.clip(albedo * shade[..., None], 0.0, 1.0).astype(np.float32)
    return Observation(depth, rgb, cfg.pitch_y, cfg.pitch_x, cfg.floor_depth, cfg.box_depth)


# ---------------------------------------------------------------- suction oracle


_DISK_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def pad_disk(radius: int) -> tuple[np.ndarray, np.ndarray]:
    if radius not in _DISK_CACHE:
        dr, dc = np.mgrid[-radius : radius + 1, -radius : radius + 1]
        inside = dr * dr + dc * dc <= radius * radius
        _DISK_CACHE[radius] = (dr[inside], dc[inside])
    return _DISK_CACHE[radius]


def seal_residual(scene: DepthScene, pixel, radius: int) -> float:
    """Largest deviation of the pad-disk surface from its least-squares plane."""
    rr, cc = _disk_pixels(scene.config, pixel, radius)
    z = scene.heightfield[rr, cc]
    cfg = scene.config
    a = np.column_stack([(cc - pixel[1]) * cfg.pitch_x, (rr - pixel[0]) * cfg.pitch_y, np.ones(len(z))])
    coef, *_ = np.linalg.lstsq(a, z, rcond=None)
    return float(np.abs(z - a @ coef).max())


def _disk_pixels(cfg: SceneConfig, pixel, radius: int):
    dr, dc = pad_disk(radius)
    rr = dr + pixel[0]
    cc = dc + pixel[1]
    ok = (rr >= 0) & (rr < cfg.raster_h) & (cc >= 0) & (cc < cfg.raster_w)
    return rr[ok], cc[ok]


def suction_oracle(
    scene: DepthScene,
    pixel,
    rng: np.random.Generator | None = None,
    params: OracleParams = OracleParams(),
) -> PickOutcome:
    """Adjudicate one suction attempt at ``pixel`` = (row, col).

    Checks run in order: object present, seal planarity, normal
    verticality, then the optional random failure.
    """
    r, c = int(pixel[0]), int(pixel[1])
    cfg = scene.config
    if not (0 <= r < cfg.raster_h and 0 <= c < cfg.raster_w):
        raise IndexError(f"pixel {pixel} outside raster")
    obj_id = int(scene.top_id[r, c])
    if obj_id < 0:
        return PickOutcome(False, PickCause.NOT_ON_OBJECT, None)
    if seal_residual(scene, (r, c), params.pad_radius_px) > params.eps_seal:
        return PickOutcome(False, PickCause.SEAL_LEAK, obj_id)
    rr, cc = _disk_pixels(cfg, (r, c), params.pad_radius_px)
    if scene.normals[rr, cc, 2].min() < math.cos(math.radians(params.theta_max_deg)):
        return PickOutcome(False, PickCause.SURFACE_TOO_STEEP, obj_id)
    if params.p_noise > 0:
        if rng is None:
            raise ValueError("an rng is required when p_noise > 0")
        if rng.random() < params.p_noise:
            return PickOutcome(False, PickCause.NOISE_FAIL, obj_id)
    return PickOutcome(True, PickCause.SEAL_OK, obj_id)


def apply_pick(scene: DepthScene, pixel, outcome: PickOutcome) -> DepthScene:
    """Remove the picked object on success; always advance the pick counter."""
    count = scene.pick_count_since_rearrange + 1
    if not outcome.success:
        return replace(scene, pick_count_since_rearrange=count)
    if outcome.object_id not in scene.object_ids():
        raise ObjectAbsentError(outcome.object_id)
    remaining = tuple(o for o in scene.objects if o.id != outcome.object_id)
    return replace(scene, objects=remaining, pick_count_since_rearrange=count)


def maybe_rearrange(scene: DepthScene, every: int = REARRANGE_EVERY) -> DepthScene:
    """Re-pose every remaining object once ``every`` picks have accumulated."""
    if scene.pick_count_since_rearrange < every:
        return scene
    cfg = scene.config
    rng = _scene_rng(cfg.seed, 1, scene.rearrange_count)
    hf = np.zeros((cfg.raster_h, cfg.raster_w))
    top = np.full(hf.shape, -1, dtype=np.int64)
    placed = []
    for obj in scene.objects:
        kind = KINDS[obj.kind]
        make = _instance_factory(kind, obj.dims, obj.id, obj.albedo, cfg)
        new = _place(rng, cfg, hf, top, make)
        if new is None:
            # keep the old pose rather than lose the object
            _stack_onto(hf, top, obj, cfg)
            new = obj
        placed.append(new)
    return replace(
        scene,
        objects=tuple(placed),
        pick_count_since_rearrange=0,
        rearrange_count=scene.rearrange_count + 1,
    )


# ---------------------------------------------------------------- files


OBS_MAGIC = b"SOB1"


def observation_to_bytes(obs: Observation) -> bytes:
    """Header JSON, then little-endian float32 depth and rgb planes, row-major."""
    h, w = obs.depth.shape
    header = {
        "height": h,
        "width": w,
        "pitch_y": obs.pitch_y,
        "pitch_x": obs.pitch_x,
        "floor_depth": obs.floor_depth,
        "box_depth": obs.box_depth,
        "dtype": "<f4",
        "planes": ["depth", "r", "g", "b"],
    }
    hb = json.dumps(header, sort_keys=True).encode()
    depth = np.ascontiguousarray(obs.depth, dtype="<f4").tobytes()
    rgb = np.ascontiguousarray(np.moveaxis(obs.rgb, -1, 0), dtype="<f4").tobytes()
    return OBS_MAGIC + struct.pack("<I", len(hb)) + hb + depth + rgb


def observation_from_bytes(data: bytes) -> Observation:
    if data[:4] != OBS_MAGIC:
        raise ValueError("not an observation file")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8 : 8 + hlen])
    h, w = header["height"], header["width"]
    payload = np.frombuffer(data[8 + hlen :], dtype="<f4")
    if payload.size != 4 * h * w:
        raise ValueError("observation payload has the wrong size")
    depth = payload[: h * w].reshape(h, w).astype(np.float32)
    rgb = np.moveaxis(payload[h * w :].reshape(3, h, w), 0, -1).astype(np.float32)
    return Observation(
        depth, rgb, header["pitch_y"], header["pitch_x"], header["floor_depth"], header["box_depth"]
    )


def save_observation(obs: Observation, path) -> None:
    atomic_write_bytes(path, observation_to_bytes(obs))


def load_observation(path) -> Observation:
    return observation_from_bytes(Path(path).read_bytes())


def save_scene(scene: DepthScene, path) -> None:
    atomic_write_bytes(path, scene.to_json().encode())


def load_scene(path) -> DepthScene:
    return DepthScene.from_json(Path(path).read_text())
