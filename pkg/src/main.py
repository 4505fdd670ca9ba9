"""Command-line entry point.

Exit codes: 0 success, 1 a check or run failed, 2 usage or configuration error.
"""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

import structlog

from src.config.run_config import RunConfig, load_config, parse_config, serialize
from src.core.exceptions import (
    CheckpointError,
    ConfigurationError,
    SnapDiffException,
    UsageError,
)
from src.sampling.config import GuidanceMode, SamplerConfig, Solver
from src.utils.logging import setup_logging
from src.utils.validators import is_valid_run_name, parse_float_list, parse_int_list

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _overrides(pairs: Sequence[str]) -> dict[str, str]:
    values: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {pair!r}")
        values[key.strip()] = value.strip()
    return values


def _threshold(text: str) -> float | None:
    if text.strip().lower() in ("none", "off"):
        return None
    try:
        return float(text)
    except ValueError as e:
        raise UsageError(f"--threshold expects a percentile or 'none', got {text!r}") from e


def cmd_verify(args: argparse.Namespace) -> int:
    from src.services.verification import (
        VerificationService,
        format_table,
        write_results_csv,
        write_results_json,
    )

    results = VerificationService(inject_bug=args.inject_bug).run()
    print(format_table(results))
    if args.csv:
        write_results_csv(results, args.csv)
    if args.json:
        write_results_json(results, args.json)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning("verify_failed", checks=failed)
        return EXIT_FAILED
    return EXIT_OK


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = _overrides(args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.output is not None:
        overrides["output_dir"] = args.output
    if args.config is None:
        return parse_config("", overrides)
    return load_config(args.config, overrides)


def cmd_train(args: argparse.Namespace) -> int:
    from src.training.trainer import Trainer

    run = _run_config(args)
    trainer = Trainer(run.fit(), run.diffusion(), run.train(), Path(run.output_dir), config_text=serialize(run))
    state = trainer.run(resume=args.resume, stop_after=args.stop_after)
    print(f"trained to step {state.step}; checkpoint {trainer.last_checkpoint_path}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    from src.services.generation import GenerationService, TrainedModel

    if not is_valid_run_name(args.name):
        raise UsageError(f"invalid output name {args.name!r}")
    model = TrainedModel.load(args.checkpoint, use_ema=not args.raw)
    updates: dict[str, object] = {}
    for key in ("steps", "seed"):
        if getattr(args, key) is not None:
            updates[key] = getattr(args, key)
    if args.guidance is not None:
        updates["guidance_weight"] = args.guidance
    if args.guidance_mode is not None:
        updates["guidance_mode"] = GuidanceMode(args.guidance_mode)
    if args.solver is not None:
        updates["solver"] = Solver(args.solver)
    if args.threshold is not None:
        updates["threshold_percentile"] = _threshold(args.threshold)
    base = model.run.sampler()
    try:
        scfg = SamplerConfig(**{**base.model_dump(), **updates})
    except ValueError as e:
        raise UsageError(str(e)) from e

    levels = parse_int_list(args.levels, "--levels") if args.levels else None
    if args.hierarchical and levels is None:
        levels = (1, 2)
    videos = GenerationService(model, scfg).generate(
        args.class_id,
        batch=args.batch,
        framerate=args.framerate,
        levels=levels,
        total_frames=args.total_frames,
    )
    written = GenerationService.export(videos, args.out, args.name)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def cmd_snr(args: argparse.Namespace) -> int:
    from src.snr.lab import snr_grid, write_snr_csv

    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    Ts = parse_int_list(args.T, "--T")
    ss = parse_int_list(args.s, "--s")
    rows = []
    for sigma in parse_float_list(args.sigma, "--sigma"):
        if sigma <= 0.0:
            raise UsageError(f"--sigma entries must be positive, got {sigma}")
        rows += snr_grid(Ts, ss, sigma, args.trials, seed=args.seed)
    write_snr_csv(rows, args.out)
    for row in rows:
        print(
            f"T={row.T:<3} s={row.s:<2} sigma={row.sigma:<6g} scaled={row.scaled!s:<5} "
            f"ratio={row.ratio:9.4f} predicted={row.predicted_ratio:6.1f} "
            f"snr_avg/reference={row.snr_avg / row.snr_reference:7.4f}"
        )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from src.services.benchmark import (
        MAX_MAC_GROWTH,
        BenchmarkService,
        format_rows,
        write_bench_csv,
        write_bench_json,
    )

    run = load_config(args.config) if args.config else RunConfig()
    rows = BenchmarkService(run.fit(), doublings=args.doublings, repeats=args.repeats).run()
    print(format_rows(rows))
    if args.csv:
        write_bench_csv(rows, args.csv)
    if args.json:
        write_bench_json(rows, args.json)
    growth = BenchmarkService.max_growth(rows)
    return EXIT_OK if growth < MAX_MAC_GROWTH else EXIT_FAILED


def cmd_sweep(args: argparse.Namespace) -> int:
    from src.services.generation import TrainedModel
    from src.services.sweep import (
        GUIDANCE_WEIGHTS,
        ORACLE_COLUMNS,
        STEP_COUNTS,
        SWEEP_COLUMNS,
        SweepService,
        oracle_step_sweep,
        write_rows,
    )
    from src.training.dataset import NearestTemplateClassifier

    out = Path(args.out)
    steps = parse_int_list(args.steps, "--steps") if args.steps else STEP_COUNTS
    if args.oracle:
        run = load_config(args.config) if args.config else RunConfig()
        rows = oracle_step_sweep(run.diffusion(), steps)
        write_rows(rows, ORACLE_COLUMNS, out / "oracle_steps.csv")
        for row in rows:
            print(f"{row.solver:<6} steps={row.steps:<4} max_error={row.max_error:.3e}")
        return EXIT_OK

    if args.checkpoint is None:
        raise UsageError("sweep needs a checkpoint unless --oracle is given")
    model = TrainedModel.load(args.checkpoint, use_ema=not args.raw)
    run = model.run
    service = SweepService(
        model.denoiser(),
        run.diffusion(),
        run.sampler(),
        NearestTemplateClassifier(run.height, run.width, run.n_classes),
        model.frame_shape,
        run.frames,
        run.base_framerate,
        per_class=args.per_class,
    )
    weights = parse_float_list(args.weights, "--weights") if args.weights else GUIDANCE_WEIGHTS
    guidance_rows = service.guidance_sweep(weights)
    step_rows = service.step_sweep(steps)
    write_rows(guidance_rows, SWEEP_COLUMNS, out / "guidance_sweep.csv")
    write_rows(step_rows, SWEEP_COLUMNS, out / "step_sweep.csv")
    for row in guidance_rows + step_rows:
        print(
            f"g={row.weight:<5g} steps={row.steps:<4} accuracy={row.accuracy:.3f} "
            f"saturation={row.saturation:.4f} thresholded={row.saturation_thresholded:.4f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snapdiff", description=__doc__)
    parser.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Run the numerical self-check suite")
    verify.add_argument("--inject-bug", action="store_true", help="Perturb sigma_in inside the loss check")
    verify.add_argument("--csv", default=None)
    verify.add_argument("--json", default=None)
    verify.set_defaults(func=cmd_verify)

    train = sub.add_parser("train", help="Train on the sprite dataset")
    train.add_argument("config", nargs="?", default=None, help="key = value run config")
    train.add_argument("--resume", default=None, help="Checkpoint to continue from")
    train.add_argument("--stop-after", type=int, default=None, help="Stop at this step")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--output", default=None, help="Overrides output_dir")
    train.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a config key")
    train.set_defaults(func=cmd_train)

    smp = sub.add_parser("sample", help="Generate videos from a checkpoint")
    smp.add_argument("checkpoint")
    smp.add_argument("--class-id", type=int, default=1, help="1..n_classes, 0 for unconditional")
    smp.add_argument("--batch", type=int, default=1)
    smp.add_argument("--steps", type=int, default=None)
    smp.add_argument("--guidance", type=float, default=None)
    smp.add_argument("--guidance-mode", choices=[m.value for m in GuidanceMode], default=None)
    smp.add_argument("--threshold", default=None, help="Percentile or 'none'")
    smp.add_argument("--solver", choices=[s.value for s in Solver], default=None)
    smp.add_argument("--seed", type=int, default=None)
    smp.add_argument("--framerate", type=float, default=None)
    smp.add_argument("--hierarchical", action="store_true", help="Generate over levels 1,2")
    smp.add_argument("--levels", default=None, help="Frame-rate levels such as 1,2")
    smp.add_argument("--total-frames", type=int, default=None)
    smp.add_argument("--raw", action="store_true", help="Use raw weights instead of the EMA")
    smp.add_argument("--out", default="samples")
    smp.add_argument("--name", default="sample")
    smp.set_defaults(func=cmd_sample)

    snr = sub.add_parser("snr", help="Block-averaging SNR experiment")
    snr.add_argument("--T", default="1,4,16")
    snr.add_argument("--s", default="1,2")
    snr.add_argument("--sigma", default="1.0")
    snr.add_argument("--trials", type=int, default=100)
    snr.add_argument("--seed", type=int, default=0)
    snr.add_argument("--out", default="snr.csv")
    snr.set_defaults(func=cmd_snr)

    bench = sub.add_parser("bench", help="Forward cost versus patch-token count")
    bench.add_argument("--config", default=None)
    bench.add_argument("--doublings", type=int, default=2)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--csv", default=None)
    bench.add_argument("--json", default=None)
    bench.set_defaults(func=cmd_bench)

    sweep = sub.add_parser("sweep", help="Guidance and step-count sweeps")
    sweep.add_argument("checkpoint", nargs="?", default=None)
    sweep.add_argument("--config", default=None, help="Run config for --oracle")
    sweep.add_argument("--oracle", action="store_true", help="Solver sweep against the Gaussian oracle")
    sweep.add_argument("--weights", default=None)
    sweep.add_argument("--steps", default=None)
    sweep.add_argument("--per-class", type=int, default=4)
    sweep.add_argument("--raw", action="store_true")
    sweep.add_argument("--out", default="sweep")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, CheckpointError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SnapDiffException as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
