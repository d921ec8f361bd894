"""Command-line entry point: wires run configs to experiments, emits CSV/JSON.

Exit codes: 0 success, 1 configuration error (with usage), 2 runtime error.
Outputs are staged inside the output directory and renamed into place on
success, so a failed run leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .data_io import DatasetHandle, cache_features, load_cifar10, load_image_dir, synthesize
from .errors import ConfigError, FileMissing, SdtradeError
from .experiments import (
    concentration_csv,
    gradient_concentration,
    linear_validate,
    linear_validation_csv,
    lipschitz_csv,
    lipschitz_ratios,
    loss_surface,
    surface_csv,
    toy_validate,
    toy_validation_csv,
    tradeoff_csv,
    tradeoff_curve,
)
from .extractors import (
    BlacklightConfig,
    LinearExtractor,
    LinearConfig,
    PihaConfig,
    ToyConfig,
    make_extractor,
)
from .sampling import ProjectionConfig, RngStream, ToyLoss, ToyModelConfig
from .theory import (
    BoundInput,
    chi_cdf,
    general_bound,
    gradient_bound,
    projection_tail_bound,
    toy_bound,
    vacuous,
)

SEED_ENV_VAR = "SDTRADE_SEED"


class _Parser(argparse.ArgumentParser):
    """Parser that reports bad arguments as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{message}\n{self.format_usage()}")


def _add_common(parser, needs_out: bool = True):
    parser.add_argument("--seed", type=int, default=None, help=f"master seed (default: ${SEED_ENV_VAR} or 0)")
    parser.add_argument("--threads", type=int, default=1, help="worker cap; never affects results")
    if needs_out:
        parser.add_argument("--out", type=Path, required=True, help="output directory")


def _add_dataset(parser):
    parser.add_argument(
        "--dataset",
        required=True,
        help="cifar10:DIR | dir:DIR | synthetic:grid_gaussian | synthetic:random_texture",
    )
    parser.add_argument("--n-images", type=int, default=100)
    parser.add_argument("--dims", default="32x32x3", help="HxWxC for synthetic datasets")
    parser.add_argument("--synth-sigma", type=float, default=1.0)
    parser.add_argument("--synth-bin-size", type=int, default=50)


def _add_extractor(parser):
    parser.add_argument("--extractor", choices=["toy", "blacklight", "piha"], default="blacklight")
    parser.add_argument("--bin-size", type=int, default=50)
    parser.add_argument("--window", type=int, default=20)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--top-k", type=int, default=50)
    parser.add_argument("--blur-sigma", type=float, default=1.0)
    parser.add_argument("--block", type=int, default=7)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdtrade", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("bounds", help="print one closed-form bound as JSON")
    p.add_argument("--theorem", required=True, choices=["1", "2", "3", "tail", "chi"])
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--alpha-fp", type=float, default=0.0)
    p.add_argument("--lipschitz-ratio", type=float, default=1.0)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--r", type=float, default=1.0)

    p = sub.add_parser("toy-validate", help="Monte Carlo check of the quantizer bound")
    _add_common(p)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("linear-validate", help="Monte Carlo check of the Lipschitz bound")
    _add_common(p)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--cond", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--matrix-seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--n-taus", type=int, default=40)

    p = sub.add_parser("tradeoff", help="threshold sweep of detection vs false positives")
    _add_common(p)
    _add_dataset(p)
    _add_extractor(p)
    p.add_argument("--beta", type=float, action="append", default=None, help="repeatable")
    p.add_argument("--taus", default=None, help="comma-separated thresholds (default: auto sweep)")
    p.add_argument("--n-taus", type=int, default=40)
    p.add_argument("--mode", choices=["pairwise", "streaming"], default="pairwise")
    p.add_argument("--n-base", type=int, default=100)
    p.add_argument("--n-pert", type=int, default=100)

    p = sub.add_parser("lipschitz", help="distance-ratio distribution of an extractor")
    _add_common(p)
    _add_dataset(p)
    _add_extractor(p)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--bins", type=int, default=50)

    p = sub.add_parser("loss-surface", help="loss increase vs probe width and step size")
    _add_common(p)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--rows", type=int, default=8, help="weight rows of the log-sum-exp loss")
    p.add_argument("--loss-seed", type=int, default=0)
    p.add_argument("--q", type=int, default=50)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--betas", default="0.01,0.1,1.0")
    p.add_argument("--steps", default="0.01,0.05,0.1")

    p = sub.add_parser("grad-concentration", help="projection norm concentration vs its bound")
    _add_common(p)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=10_000)

    p = sub.add_parser("extract", help="compute features and write the JSON-lines cache")
    _add_common(p)
    _add_dataset(p)
    _add_extractor(p)

    return parser


def _config(factory, *args, **kwargs):
    """Build a config object, reporting invalid values as configuration errors."""
    try:
        return factory(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR}={raw!r} is not an integer")


def _parse_dims(text: str) -> tuple[int, int, int]:
    try:
        h, w, c = (int(part) for part in text.lower().split("x"))
        return h, w, c
    except ValueError:
        raise ConfigError(f"--dims must look like 32x32x3, got {text!r}")


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{flag} must be comma-separated numbers, got {text!r}")


def _load_dataset(args, rng: RngStream) -> DatasetHandle:
    spec = args.dataset
    if ":" not in spec:
        raise ConfigError(f"--dataset must be kind:arg, got {spec!r}")
    kind, arg = spec.split(":", 1)
    if kind == "cifar10":
        return load_cifar10(arg, args.n_images, rng)
    if kind == "dir":
        return load_image_dir(arg, args.n_images, rng)
    if kind == "synthetic":
        params = {"sigma": args.synth_sigma, "bin_size": args.synth_bin_size}
        return synthesize(arg, _parse_dims(args.dims), args.n_images, params, rng)
    raise ConfigError(f"unknown dataset kind {kind!r}")


def _make_extractor_config(args):
    if args.extractor == "toy":
        return ToyConfig()
    if args.extractor == "blacklight":
        return _config(
            BlacklightConfig,
            bin_size=args.bin_size,
            window=args.window,
            stride=args.stride,
            top_k=args.top_k,
        )
    return _config(PihaConfig, sigma=args.blur_sigma, block=args.block)


def _version_string() -> str:
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"sdtrade-{__version__}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"sdtrade-{__version__}"


class _OutputStage:
    """Write files into a staging directory inside --out; publish atomically."""

    def __init__(self, out: Path):
        self.final = out
        out.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=".stage-", dir=out))
        self.names: list[str] = []

    def write(self, name: str, text: str):
        (self.staging / name).write_text(text, encoding="utf-8")
        self.names.append(name)

    def publish(self):
        for name in self.names:
            os.replace(self.staging / name, self.final / name)
        shutil.rmtree(self.staging, ignore_errors=True)

    def abort(self):
        shutil.rmtree(self.staging, ignore_errors=True)


def _finish(stage: _OutputStage, subcommand: str, config: dict, seed: int, t0: float):
    manifest = {
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "version": _version_string(),
        "wall_time_s": time.perf_counter() - t0,
        "outputs": list(stage.names),
    }
    stage.write("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    stage.publish()


def _cmd_bounds(args) -> int:
    theorem = args.theorem
    if theorem == "1":
        value = toy_bound(args.d, args.beta, args.alpha_fp)
        params = {"d": args.d, "beta": args.beta, "alpha_fp": args.alpha_fp}
    elif theorem == "2":
        inp = BoundInput(
            d=args.d,
            beta=args.beta,
            alpha_fp=args.alpha_fp,
            lipschitz_ratio=args.lipschitz_ratio,
            spread=args.spread,
        )
        value = general_bound(inp)
        params = {
            "d": args.d,
            "beta": args.beta,
            "alpha_fp": args.alpha_fp,
            "lipschitz_ratio": args.lipschitz_ratio,
            "spread": args.spread,
        }
    elif theorem == "3":
        value = gradient_bound(args.k, args.epsilon, args.beta)
        params = {"k": args.k, "epsilon": args.epsilon, "beta": args.beta}
    elif theorem == "tail":
        value = projection_tail_bound(args.k, args.epsilon, args.sigma)
        params = {"k": args.k, "epsilon": args.epsilon, "sigma": args.sigma}
    else:
        value = chi_cdf(args.r, args.d, args.beta)
        params = {"r": args.r, "d": args.d, "beta": args.beta}
    print(json.dumps({"theorem": theorem, "params": params, "bound": value, "vacuous": vacuous(value)}))
    return 0


def _cmd_toy_validate(args, seed: int) -> int:
    t0 = time.perf_counter()
    cfg = _config(ToyModelConfig, d=args.d, sigma=args.sigma, beta=args.beta)
    result = toy_validate(cfg, args.trials, RngStream(seed))
    stage = _OutputStage(args.out)
    try:
        stage.write("toy_validate.csv", toy_validation_csv(cfg, result))
        config = {"d": args.d, "sigma": args.sigma, "beta": args.beta, "trials": args.trials}
        _finish(stage, "toy-validate", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    print(
        f"toy-validate d={args.d} beta={args.beta}: alpha_fp={result.alpha_fp_hat:.4g} "
        f"alpha_det={result.alpha_det_hat:.4g} bound={result.bound:.4g} "
        f"violated={str(result.violated).lower()}"
    )
    return 0


def _cmd_linear_validate(args, seed: int) -> int:
    t0 = time.perf_counter()
    ext = LinearExtractor.from_config(
        _config(
            LinearConfig,
            seed=args.matrix_seed,
            input_dim=args.d,
            output_dim=args.d,
            condition_number=args.cond,
            scale=args.scale,
        )
    )
    natural = _config(ToyModelConfig, d=args.d, sigma=args.sigma, beta=args.beta)
    result = linear_validate(ext, natural, None, args.beta, args.pairs, RngStream(seed), args.n_taus)
    stage = _OutputStage(args.out)
    try:
        stage.write("linear_validate.csv", linear_validation_csv(result, args.beta))
        config = {
            "d": args.d,
            "cond": args.cond,
            "scale": args.scale,
            "matrix_seed": args.matrix_seed,
            "sigma": args.sigma,
            "beta": args.beta,
            "pairs": args.pairs,
            "n_taus": args.n_taus,
        }
        _finish(stage, "linear-validate", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    n_violated = sum(p.violated for p in result.points)
    print(
        f"linear-validate d={args.d} cond={args.cond}: spread={result.spread_hat:.4g} "
        f"taus={len(result.points)} violated={n_violated}"
    )
    return 0


def _cmd_tradeoff(args, seed: int) -> int:
    t0 = time.perf_counter()
    rng = RngStream(seed)
    dataset = _load_dataset(args, rng.stream(1))
    extractor = make_extractor(_make_extractor_config(args))
    betas = args.beta if args.beta else [0.01]
    taus = None
    if args.taus is not None:
        taus = sorted(_parse_floats(args.taus, "--taus"))
    stage = _OutputStage(args.out)
    try:
        rows = []
        for bi, beta in enumerate(betas):
            points = tradeoff_curve(
                extractor,
                dataset,
                beta=beta,
                rng=rng.stream(2 + bi),
                taus=taus,
                mode=args.mode,
                n_base=args.n_base,
                n_pert=args.n_pert,
                n_taus=args.n_taus,
                threads=args.threads,
            )
            rows.append((beta, points))
            print(
                f"tradeoff {extractor.name} beta={beta}: "
                f"alpha_fp in [{points[0].alpha_fp:.4g}, {points[-1].alpha_fp:.4g}], "
                f"alpha_det in [{points[0].alpha_det:.4g}, {points[-1].alpha_det:.4g}] "
                f"over {len(points)} taus"
            )
        header, *_ = tradeoff_csv([], extractor.name, dataset.kind).splitlines()
        lines = [header]
        for beta, points in rows:
            body = tradeoff_csv(points, extractor.name, dataset.kind).splitlines()[1:]
            lines.extend(body)
        stage.write("tradeoff.csv", "\n".join(lines) + "\n")
        config = {
            "dataset": args.dataset,
            "n_images": args.n_images,
            "extractor": args.extractor,
            "betas": betas,
            "taus": taus,
            "n_taus": args.n_taus,
            "mode": args.mode,
            "n_base": args.n_base,
            "n_pert": args.n_pert,
            "threads": args.threads,
        }
        _finish(stage, "tradeoff", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    return 0


def _cmd_lipschitz(args, seed: int) -> int:
    t0 = time.perf_counter()
    rng = RngStream(seed)
    dataset = _load_dataset(args, rng.stream(1))
    extractor = make_extractor(_make_extractor_config(args))
    report = lipschitz_ratios(
        extractor, dataset, args.pairs, args.beta, rng.stream(2), bins=args.bins, threads=args.threads
    )
    stage = _OutputStage(args.out)
    try:
        stage.write("lipschitz.csv", lipschitz_csv(report))
        config = {
            "dataset": args.dataset,
            "n_images": args.n_images,
            "extractor": args.extractor,
            "pairs": args.pairs,
            "beta": args.beta,
            "bins": args.bins,
        }
        _finish(stage, "lipschitz", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    print(
        f"lipschitz {extractor.name}: p05={report.p05:.4g} p95={report.p95:.4g} "
        f"cov={report.coefficient_of_variation:.4g} p95/p05={report.empirical_ratio:.4g}"
    )
    return 0


def _cmd_loss_surface(args, seed: int) -> int:
    t0 = time.perf_counter()
    betas = _parse_floats(args.betas, "--betas")
    steps = _parse_floats(args.steps, "--steps")
    gen = RngStream(args.loss_seed).generator()
    weights = gen.standard_normal((args.rows, args.d))
    loss = ToyLoss.log_sum_exp(weights)
    x0 = gen.standard_normal(args.d)
    surface = loss_surface(loss, x0, betas, steps, args.q, args.trials, RngStream(seed))
    stage = _OutputStage(args.out)
    try:
        stage.write("surface.csv", surface_csv(surface))
        config = {
            "d": args.d,
            "rows": args.rows,
            "loss_seed": args.loss_seed,
            "q": args.q,
            "trials": args.trials,
            "betas": betas,
            "steps": steps,
        }
        _finish(stage, "loss-surface", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    for bi, beta in enumerate(surface.betas):
        cells = " ".join(f"{v:.4g}" for v in surface.mean_dloss[bi])
        print(f"loss-surface beta={beta}: mean dloss per step [{cells}]")
    return 0


def _cmd_grad_concentration(args, seed: int) -> int:
    t0 = time.perf_counter()
    cfg = _config(ProjectionConfig, k=args.k, d=args.d, beta=args.beta, epsilon=args.epsilon)
    report = gradient_concentration(cfg, args.trials, RngStream(seed))
    stage = _OutputStage(args.out)
    try:
        stage.write("concentration.csv", concentration_csv(cfg, report))
        config = {
            "k": args.k,
            "d": args.d,
            "beta": args.beta,
            "epsilon": args.epsilon,
            "trials": args.trials,
        }
        _finish(stage, "grad-concentration", config, seed, t0)
    except BaseException:
        stage.abort()
        raise
    print(
        f"grad-concentration k={args.k} beta={args.beta} ({report.regime_flag}): "
        f"empirical={report.empirical_prob:.6g} bound={report.bound:.6g} "
        f"satisfied={str(report.satisfied).lower()}"
    )
    return 0


def _cmd_extract(args, seed: int) -> int:
    t0 = time.perf_counter()
    rng = RngStream(seed)
    dataset = _load_dataset(args, rng.stream(1))
    cfg = _make_extractor_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    cache = cache_features(dataset, cfg, args.out / "features.jsonl")
    manifest = {
        "subcommand": "extract",
        "seed": seed,
        "config": {
            "dataset": args.dataset,
            "n_images": args.n_images,
            "extractor": args.extractor,
            "fingerprint": cache.fingerprint,
        },
        "version": _version_string(),
        "wall_time_s": time.perf_counter() - t0,
        "outputs": ["features.jsonl"],
    }
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"extract {args.extractor}: {len(cache.features)} features -> {cache.path}")
    return 0


def run(argv=None) -> int:
    """Parse argv and execute one subcommand; returns the process exit code."""
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"sdtrade: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.subcommand == "bounds":
            return _cmd_bounds(args)
        seed = _resolve_seed(args)
        if args.subcommand == "toy-validate":
            return _cmd_toy_validate(args, seed)
        if args.subcommand == "linear-validate":
            return _cmd_linear_validate(args, seed)
        if args.subcommand == "tradeoff":
            return _cmd_tradeoff(args, seed)
        if args.subcommand == "lipschitz":
            return _cmd_lipschitz(args, seed)
        if args.subcommand == "loss-surface":
            return _cmd_loss_surface(args, seed)
        if args.subcommand == "grad-concentration":
            return _cmd_grad_concentration(args, seed)
        if args.subcommand == "extract":
            return _cmd_extract(args, seed)
        raise ConfigError(f"unknown subcommand {args.subcommand!r}")
    except (ConfigError, FileMissing) as exc:
        print(f"sdtrade: {exc}", file=sys.stderr)
        return 1
    except SdtradeError as exc:
        print(f"sdtrade: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"sdtrade: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
