"""Self-supervised learning loop for the two-step suction detector.

Each pick is either greedy (region scorer picks a window, point classifier
maps its 17x17 grid, kernel E picks the point) or exploratory (uniform
window and grid point), with the greedy share growing with the pick count.
Every ``checkpoint_every`` picks the collected samples are processed, both
models retrained, and a batch of pure-greedy test picks is run on fresh
scenes that never feed back into training.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from decimal import Decimal, localcontext

import numpy as np

from . import candidates as cand
from . import datasets as ds
from . import nn
from . import scenesim as sim

log = logging.getLogger(__name__)

N_REGIONS = cand.REGION_ROWS * cand.REGION_COLS
N_POINTS = cand.GRID_N * cand.GRID_N

# stream tags for seed derivation
_LEARN_SCENE, _POLICY, _ORACLE, _TRAIN, _TEST, _SPLIT, _INIT, _FINAL, _OMISSION, _COMPARE = range(10)


def derive_seed(master: int, *tags: int) -> int:
    return int(np.random.SeedSequence([master, *tags]).generate_state(1, np.uint64)[0] >> 1)


def _rng(master: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, *tags]))


# ---------------------------------------------------------------- schedule

LITERAL = "literal"
INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class ScheduleParams:
    alpha_e: float = 0.05
    alpha_s: float = 0.8
    alpha_d: float = 2000.0
    form: str = INTERPOLATED

    def __post_init__(self):
        if not (0 <= self.alpha_e <= self.alpha_s <= 1):
            raise ValueError("need 0 <= alpha_e <= alpha_s <= 1")
        if self.alpha_d <= 0:
            raise ValueError("alpha_d must be positive")
        if self.form not in (LITERAL, INTERPOLATED):
            raise ValueError(f"unknown schedule form {self.form!r}")


def greedy_fraction(n: float, sp: ScheduleParams = ScheduleParams()) -> float:
    """Probability that pick ``n`` follows the current models.

    literal:       1 - (aE + (aS - aE)) * exp(-n / aD)
    interpolated:  1 - (aE + (aS - aE) * exp(-n / aD))
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    # decimal arithmetic keeps n=0 exact (1 - 0.8 is not 0.2 in binary)
    a_e, a_s = Decimal(repr(sp.alpha_e)), Decimal(repr(sp.alpha_s))
    decay = Decimal(math.exp(-n / sp.alpha_d)) if n else Decimal(1)
    with localcontext() as ctx:
        ctx.prec = 40
        if sp.form == LITERAL:
            p = 1 - (a_e + (a_s - a_e)) * decay
        else:
            p = 1 - (a_e + (a_s - a_e) * decay)
    return min(max(float(p), 0.0), 1.0)


# ---------------------------------------------------------------- config


@dataclass
class PipelineConfig:
    scene: sim.SceneConfig = field(default_factory=sim.SceneConfig)
    unseen_kinds: tuple[str, ...] = sim.UNSEEN_KINDS
    oracle: sim.OracleParams = field(default_factory=sim.OracleParams)
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    sgpa_train: nn.TrainConfig = field(default_factory=nn.TrainConfig.sgpa_default)
    fre_train: nn.TrainConfig = field(default_factory=nn.TrainConfig.fre_default)
    sgpa_warm_epochs: int = 20
    fre_warm_epochs: int = 60
    warm_start: bool = True
    max_picks: int = 1000
    stop_threshold: float = 0.90
    checkpoint_every: int = 100
    test_picks: int = 50
    final_test_picks: int = 150
    kernel_variant: str = "symmetric"
    grad_threshold: float = ds.DEFAULT_GRAD_THRESHOLD
    empty_threshold: float = 3 / N_POINTS
    rearrange_every: int = sim.REARRANGE_EVERY
    stuck_rearrange: int = 2
    fre_obs_window: int = 20
    train_ratio: float = 0.7
    balance_classes: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kernel_variant not in cand.KERNEL_VARIANTS:
            raise ValueError(f"unknown kernel variant {self.kernel_variant!r}")
        if self.max_picks < 0 or self.checkpoint_every <= 0:
            raise ValueError("max_picks must be >= 0 and checkpoint_every > 0")
        if self.test_picks < 0 or self.fre_obs_window <= 0:
            raise ValueError("test_picks must be >= 0 and fre_obs_window > 0")
        if self.stuck_rearrange < 0:
            raise ValueError("stuck_rearrange must be >= 0")


# ---------------------------------------------------------------- records


class EmptyBox(Exception):
    """The region scorer sees no window worth picking from."""

    def __init__(self, best_score: float | None = None):
        if best_score is None:
            msg = "no objects left in the box"
        else:
            msg = f"best region score {best_score:.4f} below the empty-box threshold"
        super().__init__(msg)
        self.best_score = best_score


@dataclass
class Decision:
    region_index: int
    grid_index: tuple[int, int]
    pixel: tuple[int, int]
    fre_scores: list[float] | None = None
    binary_map: np.ndarray | None = None
    fallback: bool = False
    evaluations: int = 0


@dataclass
class PickLog:
    n: int
    mode: str
    region: int
    grid_point: tuple[int, int]
    pixel: tuple[int, int]
    success: bool
    cause: str
    fre_scores: list[float] | None
    binary_map: list[list[int]] | None
    fallback: bool
    wall_time: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class CheckpointMetrics:
    n: int
    success_rate: float
    sgpa_train_loss: float
    sgpa_val_loss: float
    sgpa_val_acc: float
    fre_train_loss: float
    fre_val_mse: float
    omission: float
    point_samples: int
    positives: int
    relabeled: int
    region_samples: int


METRICS_FIELDS = [f for f in CheckpointMetrics.__dataclass_fields__]


@dataclass
class MetricsLog:
    checkpoints: list[CheckpointMetrics] = field(default_factory=list)
    final_known: float | None = None
    final_unseen: float | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRICS_FIELDS)
        for c in self.checkpoints:
            w.writerow([_fmt(getattr(c, f)) for f in METRICS_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "checkpoints": [asdict(c) for c in self.checkpoints],
                "final_known": self.final_known,
                "final_unseen": self.final_unseen,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_csv(cls, text: str) -> "MetricsLog":
        rows = list(csv.DictReader(io.StringIO(text)))
        out = cls()
        for r in rows:
            vals = {}
            for f in METRICS_FIELDS:
                typ = CheckpointMetrics.__dataclass_fields__[f].type
                vals[f] = int(r[f]) if typ == "int" else float(r[f])
            out.checkpoints.append(CheckpointMetrics(**vals))
        return out

    def __len__(self) -> int:
        return len(self.checkpoints)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# ---------------------------------------------------------------- decisions


def region_inputs(obs, regions):
    rgb, depth = zip(*(cand.downsample_region(obs, r) for r in regions))
    return nn.prepare_inputs(np.stack(rgb), np.stack(depth), obs.floor_depth, obs.box_depth)


def fre_scores(fre: nn.ModelParams, obs, regions) -> np.ndarray:
    x_rgb, x_d = region_inputs(obs, regions)
    return nn.forward(fre, x_rgb, x_d).astype(np.float64)


def point_map(sgpa: nn.ModelParams, obs, region) -> np.ndarray:
    return ds.binary_map(sgpa, obs, region)


def greedy_decision(
    sgpa: nn.ModelParams,
    fre: nn.ModelParams,
    obs,
    rng: np.random.Generator,
    kernel_variant: str = "symmetric",
    empty_threshold: float | None = None,
) -> Decision:
    """Region by highest score (lowest index on ties), point by kernel E.

    Raises EmptyBox when the best score is below ``empty_threshold``. An
    all-negative point map falls back to a uniformly random grid point.
    """
    regions = cand.region_candidates(*obs.depth.shape)
    scores = fre_scores(fre, obs, regions)
    best = int(np.argmax(scores))
    if empty_threshold is not None and scores[best] < empty_threshold:
        raise EmptyBox(float(scores[best]))
    bmap = point_map(sgpa, obs, regions[best])
    choice = cand.select_point(bmap, kernel_variant)
    fallback = choice is None
    if fallback:
        choice = (int(rng.integers(cand.GRID_N)), int(rng.integers(cand.GRID_N)))
    pixel = cand.grid_pixel(regions[best], choice)
    return Decision(best, tuple(choice), pixel, scores.tolist(), bmap, fallback, len(regions) + N_POINTS)


def random_decision(obs, rng: np.random.Generator) -> Decision:
    regions = cand.region_candidates(*obs.depth.shape)
    k = int(rng.integers(len(regions)))
    g = (int(rng.integers(cand.GRID_N)), int(rng.integers(cand.GRID_N)))
    return Decision(k, g, cand.grid_pixel(regions[k], g))


# ---------------------------------------------------------------- learner


@dataclass
class LearnerState:
    cfg: PipelineConfig
    scene: sim.DepthScene
    sgpa: nn.ModelParams
    fre: nn.ModelParams
    policy_rng: np.random.Generator
    oracle_rng: np.random.Generator
    n: int = 0
    refills: int = 0
    trained: int = 0
    samples: list = field(default_factory=list)
    observations: deque = field(default_factory=deque)
    picklog: list[PickLog] = field(default_factory=list)
    metrics: MetricsLog = field(default_factory=MetricsLog)
    region_dataset: ds.RegionDataset | None = None
    guard: StuckGuard | None = None

    def __post_init__(self):
        if self.guard is None:
            self.guard = StuckGuard(self.cfg.stuck_rearrange)

    @classmethod
    def start(cls, cfg: PipelineConfig) -> "LearnerState":
        m = cfg.seed
        scene = sim.generate_scene(replace(cfg.scene, seed=derive_seed(m, _LEARN_SCENE, 0)))
        return cls(
            cfg,
            scene,
            nn.init_params(nn.SGPA, derive_seed(m, _INIT, 0)),
            nn.init_params(nn.FRE, derive_seed(m, _INIT, 1)),
            _rng(m, _POLICY),
            _rng(m, _ORACLE),
            observations=deque(maxlen=cfg.fre_obs_window),
        )

    def refill(self) -> None:
        self.refills += 1
        seed = derive_seed(self.cfg.seed, _LEARN_SCENE, self.refills)
        self.scene = sim.generate_scene(replace(self.cfg.scene, seed=seed))
        self.guard.reset()

    def point_dataset(self) -> ds.PointDataset:
        return ds.PointDataset.from_samples(self.samples, [self.cfg.seed])


@dataclass
class StuckGuard:
    """Counts consecutive failed picks on an undisturbed scene.

    Failed picks leave the scene as it was, so the greedy policy keeps
    choosing the same region (and, without a fallback, the same point)
    until the periodic rearrangement. After ``limit`` failures in a row the
    scene is rearranged early (0 disables).
    """

    limit: int
    count: int = 0

    def update(self, success: bool) -> bool:
        self.count = 0 if success else self.count + 1
        if self.limit and self.count >= self.limit:
            self.count = 0
            return True
        return False

    def reset(self) -> None:
        self.count = 0


def execute_pick(scene, decision: Decision, oracle_rng, cfg: PipelineConfig, guard: StuckGuard | None = None):
    outcome = sim.suction_oracle(scene, decision.pixel, oracle_rng, cfg.oracle)
    scene = sim.apply_pick(scene, decision.pixel, outcome)
    stuck = guard is not None and guard.update(outcome.success)
    scene = sim.maybe_rearrange(scene, 0 if stuck else cfg.rearrange_every)
    if guard is not None and scene.pick_count_since_rearrange == 0:
        guard.reset()
    return outcome, scene


def pick_step(state: LearnerState) -> PickLog:
    """One learning pick: decide, execute, read the seal, record.

    Raises EmptyBox when the box is empty or a greedy decision finds
    nothing worth picking; the scene and pick counter are left untouched.
    """
    t0 = time.perf_counter()
    cfg = state.cfg
    if not state.scene.objects:
        raise EmptyBox()
    obs = sim.render(state.scene)
    greedy = state.policy_rng.random() < greedy_fraction(state.n, cfg.schedule)
    if greedy:
        decision = greedy_decision(
            state.sgpa, state.fre, obs, state.policy_rng, cfg.kernel_variant, cfg.empty_threshold
        )
    else:
        decision = random_decision(obs, state.policy_rng)
    outcome, state.scene = execute_pick(state.scene, decision, state.oracle_rng, cfg, state.guard)

    patch = cand.extract_patch(obs, decision.pixel)
    state.samples.append(
        ds.PointSample(patch.rgb, patch.depth, int(outcome.success), state.n, decision.pixel)
    )
    state.observations.append((state.n, obs))
    entry = PickLog(
        state.n,
        "greedy" if greedy else "random",
        decision.region_index,
        decision.grid_index,
        tuple(int(v) for v in decision.pixel),
        outcome.success,
        outcome.cause.value,
        decision.fre_scores,
        decision.binary_map.tolist() if decision.binary_map is not None else None,
        decision.fallback,
        time.perf_counter() - t0,
    )
    state.picklog.append(entry)
    state.n += 1
    return entry


def learning_pick(state: LearnerState) -> PickLog:
    """pick_step with box refills: empty scenes and EmptyBox signals refill."""
    for attempt in range(2):
        if not state.scene.objects:
            state.refill()
        try:
            return pick_step(state)
        except EmptyBox:
            if attempt:
                break
            state.refill()
    # a freshly filled box still looks empty to the scorer: pick regardless
    saved = state.cfg.empty_threshold
    state.cfg.empty_threshold = None
    try:
        return pick_step(state)
    finally:
        state.cfg.empty_threshold = saved


# ---------------------------------------------------------------- training


def train_models(state: LearnerState, checkpoint_index: int) -> dict:
    """Process the collected data and retrain both models."""
    cfg = state.cfg
    m = cfg.seed
    first = state.trained == 0 or not cfg.warm_start
    sc = cfg.scene

    points = ds.relabel_high_gradient(state.point_dataset(), cfg.grad_threshold)
    tr, va = ds.split(points, cfg.train_ratio, derive_seed(m, _SPLIT, checkpoint_index, 0))
    if cfg.balance_classes:
        tr = tr.select(ds.balance_indices(tr.label, derive_seed(m, _SPLIT, checkpoint_index, 2)))
    sgpa_cfg = cfg.sgpa_train if first else replace(cfg.sgpa_train, epochs=cfg.sgpa_warm_epochs)
    sgpa0 = state.sgpa if cfg.warm_start else nn.init_params(nn.SGPA, derive_seed(m, _INIT, 0))
    state.sgpa, sgpa_hist = nn.train(
        sgpa0,
        ds.point_tensors(tr, sc.floor_depth, sc.box_depth),
        ds.point_tensors(va, sc.floor_depth, sc.box_depth),
        sgpa_cfg,
        derive_seed(m, _TRAIN, checkpoint_index, 0),
        transform=ds.RotationCycler(len(tr), derive_seed(m, _TRAIN, checkpoint_index, 1)),
    )

    # region labels come from the classifier that was just trained
    obs_items = list(state.observations)
    regions = ds.build_region_dataset(
        state.sgpa, [o for _, o in obs_items], [n for n, _ in obs_items], [m]
    )
    state.region_dataset = regions
    fre_cfg = cfg.fre_train if first else replace(cfg.fre_train, epochs=cfg.fre_warm_epochs)
    fre0 = state.fre if cfg.warm_start else nn.init_params(nn.FRE, derive_seed(m, _INIT, 1))
    if len(regions) >= 2:
        rtr, rva = ds.split(regions, cfg.train_ratio, derive_seed(m, _SPLIT, checkpoint_index, 1))
        if first:
            fre0 = nn.fit_output_bias(fre0, rtr.score)
        state.fre, fre_hist = nn.train(
            fre0,
            ds.region_tensors(rtr, sc.floor_depth, sc.box_depth),
            ds.region_tensors(rva, sc.floor_depth, sc.box_depth),
            fre_cfg,
            derive_seed(m, _TRAIN, checkpoint_index, 2),
        )
    else:
        fre_hist = []
    state.trained += 1
    last_s = sgpa_hist[-1]
    last_f = fre_hist[-1] if fre_hist else None
    return {
        "sgpa_train_loss": last_s.train_loss,
        "sgpa_val_loss": last_s.val_loss if last_s.val_loss is not None else float("nan"),
        "sgpa_val_acc": last_s.val_accuracy if last_s.val_accuracy is not None else float("nan"),
        "fre_train_loss": last_f.train_loss if last_f else float("nan"),
        "fre_val_mse": last_f.val_loss if last_f and last_f.val_loss is not None else float("nan"),
        "point_samples": len(points),
        "positives": int(points.label.sum()),
        "relabeled": int((points.flags & ds.FLAG_RELABELED).astype(bool).sum()),
        "region_samples": len(regions),
    }


# ---------------------------------------------------------------- evaluation


@dataclass
class TestResult:
    picks: int
    successes: int
    omissions: int
    causes: dict

    @property
    def success_rate(self) -> float:
        return self.successes / self.picks if self.picks else 0.0

    @property
    def omission_rate(self) -> float:
        return self.omissions / self.picks if self.picks else 0.0


def region_has_object(scene: sim.DepthScene, region: cand.RegionCandidate) -> bool:
    win = scene.top_id[region.top : region.top + region.size, region.left : region.left + region.size]
    return bool((win >= 0).any())


def run_test_picks(
    sgpa: nn.ModelParams,
    fre: nn.ModelParams,
    cfg: PipelineConfig,
    n_picks: int,
    seed_tags: tuple[int, ...],
    kinds: tuple[str, ...] | None = None,
) -> TestResult:
    """Pure-greedy picks over fresh scenes; nothing is recorded for training.

    A scene is replaced when it runs out of objects or the scorer reports an
    empty box; a report on a freshly filled box is overridden.
    """
    scene_cfg = cfg.scene if kinds is None else replace(cfg.scene, archetype_set=tuple(kinds))
    rng = _rng(cfg.seed, *seed_tags, 0)
    oracle_rng = _rng(cfg.seed, *seed_tags, 1)
    episode = 0

    def fresh():
        nonlocal episode
        episode += 1
        return sim.generate_scene(replace(scene_cfg, seed=derive_seed(cfg.seed, *seed_tags, 2, episode)))

    scene = fresh()
    just_filled = True
    guard = StuckGuard(cfg.stuck_rearrange)
    successes = omissions = 0
    causes: dict[str, int] = {}
    picks = 0
    while picks < n_picks:
        if not scene.objects:
            scene, just_filled = fresh(), True
            guard.reset()
        obs = sim.render(scene)
        threshold = None if just_filled else cfg.empty_threshold
        try:
            decision = greedy_decision(sgpa, fre, obs, rng, cfg.kernel_variant, threshold)
        except EmptyBox:
            scene, just_filled = fresh(), True
            guard.reset()
            continue
        regions = cand.region_candidates(*obs.depth.shape)
        if not region_has_object(scene, regions[decision.region_index]):
            omissions += 1
        outcome, scene = execute_pick(scene, decision, oracle_rng, cfg, guard)
        just_filled = False
        picks += 1
        successes += int(outcome.success)
        causes[outcome.cause.value] = causes.get(outcome.cause.value, 0) + 1
    return TestResult(picks, successes, omissions, causes)


def checkpoint(state: LearnerState) -> CheckpointMetrics:
    """Retrain on everything gathered so far, then score the new models."""
    cfg = state.cfg
    if state.n <= 0 or state.n % cfg.checkpoint_every:
        raise ValueError(f"checkpoints happen every {cfg.checkpoint_every} picks, not at {state.n}")
    k = state.n // cfg.checkpoint_every
    stats = train_models(state, k)
    result = run_test_picks(state.sgpa, state.fre, cfg, cfg.test_picks, (_TEST, k))
    entry = CheckpointMetrics(
        n=state.n,
        success_rate=result.success_rate,
        omission=result.omission_rate,
        **stats,
    )
    state.metrics.checkpoints.append(entry)
    log.info("checkpoint n=%d success=%.3f", state.n, entry.success_rate)
    return entry


def run_learning(cfg: PipelineConfig, progress=None) -> LearnerState:
    """The full loop; stops at ``max_picks`` or once a checkpoint clears the bar."""
    state = LearnerState.start(cfg)
    while state.n < cfg.max_picks:
        learning_pick(state)
        if state.n % cfg.checkpoint_every == 0:
            entry = checkpoint(state)
            if progress:
                progress(entry)
            if entry.success_rate >= cfg.stop_threshold:
                break
    return state


def final_test(
    sgpa: nn.ModelParams,
    fre: nn.ModelParams,
    cfg: PipelineConfig,
    object_set: str = "known",
    n_picks: int = 150,
    seed: int | None = None,
) -> TestResult:
    if n_picks <= 0:
        raise ValueError("n_picks must be positive")
    if object_set not in ("known", "unseen"):
        raise ValueError(f"object_set must be 'known' or 'unseen', not {object_set!r}")
    kinds = cfg.scene.archetype_set if object_set == "known" else cfg.unseen_kinds
    run_cfg = cfg if seed is None else replace(cfg, seed=seed)
    return run_test_picks(sgpa, fre, run_cfg, n_picks, (_FINAL, int(object_set == "unseen")), kinds)


# ---------------------------------------------------------------- region method studies


def _study_scene(cfg: PipelineConfig, tags, trial: int, object_counts) -> sim.DepthScene:
    r = _rng(cfg.seed, *tags, trial)
    n_obj = int(object_counts[r.integers(len(object_counts))])
    scene_cfg = replace(cfg.scene, num_objects=n_obj, seed=derive_seed(cfg.seed, *tags, trial, 1))
    return sim.generate_scene(scene_cfg)


def measure_omission(
    fre: nn.ModelParams,
    trials: int,
    seed: int,
    cfg: PipelineConfig | None = None,
    object_counts=None,
    scorer=None,
) -> float:
    """Share of region choices that land on a window with no object pixels.

    Scenes hold a uniformly drawn number of objects (1..num_objects by
    default) so that empty windows actually occur. ``scorer(scene, obs,
    regions)`` may replace the learned scorer.
    """
    cfg = replace(cfg or PipelineConfig(), seed=seed)
    if object_counts is None:
        object_counts = tuple(range(1, cfg.scene.num_objects + 1))
    misses = 0
    for t in range(trials):
        scene = _study_scene(cfg, (_OMISSION,), t, object_counts)
        obs = sim.render(scene)
        regions = cand.region_candidates(*obs.depth.shape)
        scores = scorer(scene, obs, regions) if scorer else fre_scores(fre, obs, regions)
        best = int(np.argmax(scores))
        misses += not region_has_object(scene, regions[best])
    return misses / trials if trials else 0.0


def occupancy_scores(scene, obs, regions) -> np.ndarray:
    """Ground-truth fraction of object pixels per window."""
    return np.array(
        [
            (scene.top_id[r.top : r.top + r.size, r.left : r.left + r.size] >= 0).mean()
            for r in regions
        ]
    )


@dataclass
class MethodReport:
    method: str
    eval_count: float
    omission: float
    success: float


COMPARE_METHODS = ("fre+sgpa", "full-coverage-sgpa", "random-region+sgpa")


def full_coverage_grid(raster_h: int, raster_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Whole-raster point grid with the region grid's 6 px stride and 2 px margin."""
    rows = np.arange(cand.GRID_OFFSET, raster_h - 1, cand.GRID_STEP)
    cols = np.arange(cand.GRID_OFFSET, raster_w - 1, cand.GRID_STEP)
    return rows, cols


def compare_region_methods(
    sgpa: nn.ModelParams,
    fre: nn.ModelParams,
    trials: int,
    seed: int,
    cfg: PipelineConfig | None = None,
    object_counts=(1, 2),
) -> list[MethodReport]:
    """Success, omission and model evaluations per decision for three methods.

    All methods see the same scenes, one pick each. Sparse scenes (one or
    two objects) are the default since that is where region choice matters.
    """
    cfg = replace(cfg or PipelineConfig(), seed=seed)
    rows, cols = full_coverage_grid(cfg.scene.raster_h, cfg.scene.raster_w)
    tallies = {m: [0, 0, 0] for m in COMPARE_METHODS}  # evals, omissions, successes
    for t in range(trials):
        scene = _study_scene(cfg, (_COMPARE,), t, object_counts)
        obs = sim.render(scene)
        regions = cand.region_candidates(*obs.depth.shape)
        rng = _rng(seed, _COMPARE, t, 2)

        d = greedy_decision(sgpa, fre, obs, rng, cfg.kernel_variant, None)
        _tally(tallies["fre+sgpa"], scene, regions[d.region_index], d.pixel, d.evaluations, cfg, rng)

        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        pixels = np.stack([rr.ravel(), cc.ravel()], axis=1)
        rgb, depth = cand.extract_patches(obs, pixels)
        x_rgb, x_d = nn.prepare_inputs(rgb, depth, obs.floor_depth, obs.box_depth)
        bmap = nn.predict_labels(sgpa, x_rgb, x_d).reshape(len(rows), len(cols))
        choice = cand.select_point(bmap, cfg.kernel_variant)
        if choice is None:
            choice = (int(rng.integers(len(rows))), int(rng.integers(len(cols))))
        pixel = (int(rows[choice[0]]), int(cols[choice[1]]))
        window = _window_around(pixel, cfg.scene.raster_h, cfg.scene.raster_w)
        _tally(tallies["full-coverage-sgpa"], scene, window, pixel, len(pixels), cfg, rng)

        k = int(rng.integers(len(regions)))
        bmap = point_map(sgpa, obs, regions[k])
        choice = cand.select_point(bmap, cfg.kernel_variant)
        if choice is None:
            choice = (int(rng.integers(cand.GRID_N)), int(rng.integers(cand.GRID_N)))
        pixel = cand.grid_pixel(regions[k], choice)
        _tally(tallies["random-region+sgpa"], scene, regions[k], pixel, N_POINTS, cfg, rng)

    n = max(trials, 1)
    return [MethodReport(m, v[0] / n, v[1] / n, v[2] / n) for m, v in tallies.items()]


def _window_around(pixel, h: int, w: int) -> cand.RegionCandidate:
    s = cand.REGION_SIZE
    top = min(max(pixel[0] - s // 2, 0), h - s)
    left = min(max(pixel[1] - s // 2, 0), w - s)
    return cand.RegionCandidate(top, left)


def _tally(t, scene, region, pixel, evals, cfg, rng) -> None:
    t[0] += evals
    t[1] += not region_has_object(scene, region)
    t[2] += sim.suction_oracle(scene, pixel, rng, cfg.oracle).success


def methods_to_csv(reports: list[MethodReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "eval_count", "omission", "success"])
    for r in reports:
        w.writerow([r.method, _num(r.eval_count), repr(r.omission), repr(r.success)])
    return buf.getvalue()


def _num(v: float):
    return int(v) if float(v).is_integer() else repr(v)
