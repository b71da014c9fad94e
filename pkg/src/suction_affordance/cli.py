"""Command-line entry point: ``suction-affordance {learn,test,compare,gradcheck}``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datasets as ds
from . import nn
from . import pipeline as pl
from . import scenesim as sim
from .io_util import atomic_write_text

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

GRADCHECK_TOL = 1e-4
SGPA_WEIGHTS = "sgpa.weights"
FRE_WEIGHTS = "fre.weights"

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

_NESTED = {
    "scene": sim.SceneConfig,
    "oracle": sim.OracleParams,
    "schedule": pl.ScheduleParams,
    "sgpa_train": nn.TrainConfig,
    "fre_train": nn.TrainConfig,
}
_TUPLE_FIELDS = {"archetype_set", "unseen_kinds"}


@dataclasses.dataclass
class RunConfig:
    pipeline: pl.PipelineConfig
    out: str = "run"


def _build(cls, data, where: str, base=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS:
            value = tuple(value)
        kwargs[key] = value
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON; every key is optional."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    out = data.pop("out", "run")
    if not isinstance(out, str):
        raise ConfigError("out: expected a string")
    defaults = pl.PipelineConfig()
    nested = {}
    for key, cls in _NESTED.items():
        if key in data:
            nested[key] = _build(cls, data.pop(key), key, getattr(defaults, key))
    cfg = _build(pl.PipelineConfig, data, "config")
    try:
        cfg = dataclasses.replace(cfg, **nested)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(cfg, out)


def config_to_dict(rc: RunConfig) -> dict:
    d = dataclasses.asdict(rc.pipeline)
    d["out"] = rc.out
    return d


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig(pl.PipelineConfig())
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(data)


def apply_flags(rc: RunConfig, args) -> RunConfig:
    cfg = rc.pipeline
    try:
        if getattr(args, "seed", None) is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if getattr(args, "kernel", None):
            cfg = dataclasses.replace(cfg, kernel_variant=args.kernel)
        if getattr(args, "schedule", None):
            cfg = dataclasses.replace(cfg, schedule=dataclasses.replace(cfg.schedule, form=args.schedule))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.out if getattr(args, "out", None) else rc.out
    return RunConfig(cfg, out)


# ---------------------------------------------------------------- commands


def cmd_learn(rc: RunConfig) -> int:
    cfg = rc.pipeline
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(entry):
        print(f"checkpoint n={entry.n} success={entry.success_rate:.3f}", flush=True)

    state = pl.run_learning(cfg, progress)
    if cfg.final_test_picks > 0 and state.trained:
        for which in ("known", "unseen"):
            res = pl.final_test(state.sgpa, state.fre, cfg, which, cfg.final_test_picks)
            setattr(state.metrics, f"final_{which}", res.success_rate)
            print(f"final {which}: {res.successes}/{res.picks} = {res.success_rate:.3f}", flush=True)

    atomic_write_text(out / "config.json", json.dumps(config_to_dict(rc), indent=2, sort_keys=True))
    atomic_write_text(out / "metrics.csv", state.metrics.to_csv())
    atomic_write_text(out / "metrics.json", state.metrics.to_json())
    atomic_write_text(out / "picklog.jsonl", "".join(p.to_json() + "\n" for p in state.picklog))
    extra = {"picks": state.n, "seed": cfg.seed}
    nn.save_weights(state.sgpa, out / SGPA_WEIGHTS, extra)
    nn.save_weights(state.fre, out / FRE_WEIGHTS, extra)
    ds.save(state.point_dataset(), out / "points")
    if state.region_dataset is not None:
        ds.save(state.region_dataset, out / "regions")
    print(f"wrote {out}")
    return EXIT_OK


def load_models(weights: str) -> tuple[nn.ModelParams, nn.ModelParams]:
    d = Path(weights)
    sgpa, _ = nn.load_weights(d / SGPA_WEIGHTS)
    fre, _ = nn.load_weights(d / FRE_WEIGHTS)
    if sgpa.head_kind != nn.SGPA or fre.head_kind != nn.FRE:
        raise ValueError(f"{d} does not hold a classifier and a region scorer")
    return sgpa, fre


def cmd_test(rc: RunConfig, weights: str, unseen: bool, n: int) -> int:
    sgpa, fre = load_models(weights)
    which = "unseen" if unseen else "known"
    res = pl.final_test(sgpa, fre, rc.pipeline, which, n)
    print(f"set={which} successes={res.successes} picks={res.picks} success_rate={res.success_rate:.4f}")
    return EXIT_OK


def cmd_compare(rc: RunConfig, weights: str, trials: int, out: str | None) -> int:
    sgpa, fre = load_models(weights)
    reports = pl.compare_region_methods(sgpa, fre, trials, rc.pipeline.seed, rc.pipeline)
    text = pl.methods_to_csv(reports)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        atomic_write_text(path / "compare.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def gradcheck_errors(seed: int, grad_fn=None, batch: int = 3) -> dict[str, float]:
    """Worst relative gradient error per head on a random float64 batch."""
    rng = np.random.default_rng(seed)
    errors = {}
    for head in nn.HEAD_KINDS:
        params = nn.init_params(head, seed, np.float64)
        rgb = rng.random((batch, nn.INPUT_SIZE, nn.INPUT_SIZE, 3))
        d3 = rng.random((batch, nn.INPUT_SIZE, nn.INPUT_SIZE, 3))
        if head == nn.SGPA:
            target = rng.integers(0, 2, size=batch)
        else:
            target = rng.random(batch)
        errors[head] = nn.grad_check(params, rgb, d3, target, seed=seed, grad_fn=grad_fn)
    return errors


def cmd_gradcheck(seed: int, grad_fn=None) -> int:
    errors = gradcheck_errors(seed, grad_fn)
    worst = max(errors.values())
    for head, err in errors.items():
        print(f"{head}: max relative error {err:.3e}")
    ok = worst < GRADCHECK_TOL
    print(f"max relative error {worst:.3e} ({'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_RUNTIME


# ---------------------------------------------------------------- argument parsing


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suction-affordance", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, weights=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=_seed, help="master seed")
        p.add_argument("--kernel", choices=("symmetric", "literal"))
        p.add_argument("--schedule", choices=(pl.INTERPOLATED, pl.LITERAL))
        if weights:
            p.add_argument("--weights", required=True, help="directory holding the weight files")

    p = sub.add_parser("learn", help="run the self-supervised learning loop")
    common(p)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("test", help="pure-greedy pick test with trained weights")
    common(p, weights=True)
    p.add_argument("--unseen", action="store_true", help="use the held-out object kinds")
    p.add_argument("--n", type=_positive, default=150, help="number of picks")

    p = sub.add_parser("compare", help="compare region detection methods")
    common(p, weights=True)
    p.add_argument("--n", type=_positive, default=100, help="number of scenes")
    p.add_argument("--out", help="directory for compare.csv")

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=_seed, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "gradcheck":
            return cmd_gradcheck(args.seed)
        rc = apply_flags(load_config(args.config), args)
        if args.command == "learn":
            return cmd_learn(rc)
        if args.command == "test":
            return cmd_test(rc, args.weights, args.unseen, args.n)
        return cmd_compare(rc, args.weights, args.n, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
