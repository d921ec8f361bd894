"""The four studies as reproducible procedures.

Every experiment is a pure function of (config, master seed): trials are
partitioned into fixed blocks, each block owns a spawned substream, and
aggregation uses only order-independent sums and counts, so re-running with
any worker count yields bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .data_io import DatasetHandle
from .errors import EmptyDataset, ZeroEstimate
from .extractors import Extractor, LinearExtractor
from .features import BitString, DigestSet, Feature, IntVector, RealVector, feature_distance
from .imagekit import Image
from .sampling import (
    ProjectionConfig,
    RngStream,
    ToyLoss,
    ToyModelConfig,
    loss_and_grad,
    loss_values,
    nes_estimate,
)
from .theory import BoundInput, chi_cdf, gradient_bound, general_bound, toy_bound, vacuous

_BLOCK = 4096


def _spawn(rng: RngStream, n: int) -> list[np.random.SeedSequence]:
    return rng.seed_sequence().spawn(n)


def _gen(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(ss))


def _block_sizes(n: int, block: int = _BLOCK) -> list[int]:
    return [block] * (n // block) + ([n % block] if n % block else [])


def _ordered_map(fn, items, threads: int) -> list:
    """Apply fn over items preserving order; the worker count never affects
    the result, only the schedule."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rate(sorted_dists: np.ndarray, tau: float) -> float:
    return float(np.searchsorted(sorted_dists, tau, side="right") / len(sorted_dists))


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def auto_taus(distances: np.ndarray, n: int = 40) -> list[float]:
    """Log-spaced threshold sweep between the 0.1th and 99.9th percentile of
    the observed finite positive distances."""
    finite = np.asarray(distances, dtype=np.float64)
    finite = finite[np.isfinite(finite) & (finite > 0)]
    if finite.size == 0:
        return [0.0]
    lo = float(np.percentile(finite, 0.1))
    hi = float(np.percentile(finite, 99.9))
    lo = max(lo, 1e-12)
    if hi <= lo:
        return [lo]
    return [float(t) for t in np.geomspace(lo, hi, n)]


# ---------------------------------------------------------------------------
# Pairwise feature distances with per-kind fast paths.


def pairwise_distances(features: Sequence[Feature]) -> np.ndarray:
    """Condensed distance vector over all unordered pairs, order
    (0,1), (0,2), ..., (n-2, n-1). Matches feature_distance exactly."""
    n = len(features)
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    pos = 0
    first = features[0] if features else None
    if isinstance(first, DigestSet):
        sets = [f.digests for f in features]
        sizes = [len(s) for s in sets]
        for i in range(n):
            si, zi = sets[i], sizes[i]
            for j in range(i + 1, n):
                zj = sizes[j]
                out[pos] = (zi if zi > zj else zj) - len(si & sets[j])
                pos += 1
    elif isinstance(first, BitString):
        ints = [f.as_int() for f in features]
        for i in range(n):
            vi = ints[i]
            for j in range(i + 1, n):
                out[pos] = (vi ^ ints[j]).bit_count()
                pos += 1
    elif isinstance(first, IntVector):
        keys = [f.values.tobytes() for f in features]
        for i in range(n):
            ki = keys[i]
            for j in range(i + 1, n):
                out[pos] = 0.0 if ki == keys[j] else math.inf
                pos += 1
    elif isinstance(first, RealVector):
        # same expression as feature_distance so results agree bitwise
        vecs = [f.values for f in features]
        for i in range(n):
            vi = vecs[i]
            for j in range(i + 1, n):
                out[pos] = np.linalg.norm(vi - vecs[j])
                pos += 1
    else:
        for i in range(n):
            for j in range(i + 1, n):
                out[pos] = feature_distance(features[i], features[j])
                pos += 1
    return out


def streaming_min_distances(features: Sequence[Feature]) -> np.ndarray:
    """For each query i, the minimum distance to any earlier query (+inf for
    the first). This is exactly what an unbounded-buffer detector compares
    against its threshold."""
    n = len(features)
    mins = np.full(n, math.inf)
    condensed = pairwise_distances(features)
    pos = 0
    for i in range(n):
        for j in range(i + 1, n):
            if condensed[pos] < mins[j]:
                mins[j] = condensed[pos]
            pos += 1
    return mins


def perturbed_image(img: Image, beta: float, gen: np.random.Generator) -> tuple[Image, float]:
    """Image plus a N(0, beta²) perturbation in normalized pixel units.

    The perturbation is scaled by 255, rounded half-up, and clamped to the
    8-bit grid (the defense only ever sees valid images); the returned input
    distance is the norm of the continuous perturbation.
    """
    delta = gen.standard_normal(img.pixels.shape)
    noisy = np.floor(img.pixels + 255.0 * beta * delta + 0.5)
    out = Image(np.clip(noisy, 0, 255).astype(np.uint8))
    return out, float(beta * np.linalg.norm(delta))


# ---------------------------------------------------------------------------
# Trade-off curves (detection rate vs false positive rate over a tau sweep).


@dataclass(frozen=True)
class TradeoffPoint:
    tau: float
    alpha_fp: float
    alpha_det: float
    n_fp_trials: int
    n_det_trials: int
    beta: float


def tradeoff_curve(
    extractor: Extractor,
    dataset: DatasetHandle,
    *,
    beta: float,
    rng: RngStream,
    taus: Optional[Sequence[float]] = None,
    mode: str = "pairwise",
    n_base: int = 100,
    n_pert: int = 100,
    n_taus: int = 40,
    threads: int = 1,
) -> list[TradeoffPoint]:
    """Sweep thresholds and measure false-positive and detection rates.

    The false-positive rate at tau is the fraction of natural pairs closer
    than tau (pairwise mode) or the fraction of benign queries flagged while
    streaming through an unbounded detector. The detection rate is measured
    over n_base base images times n_pert Gaussian perturbations of standard
    deviation beta in normalized pixel units.
    """
    if dataset.count == 0:
        raise EmptyDataset("tradeoff_curve needs a non-empty dataset")
    if mode not in ("pairwise", "streaming"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_base < 1 or n_pert < 1:
        raise ValueError("n_base and n_pert must be >= 1")
    if n_base > dataset.count:
        raise ValueError(f"n_base={n_base} exceeds dataset size {dataset.count}")
    if taus is not None:
        taus = [float(t) for t in taus]
        if any(b < a for a, b in zip(taus, taus[1:])):
            raise ValueError("taus must be sorted ascending")

    features = _ordered_map(extractor.extract_image, dataset.images, threads)
    if mode == "pairwise":
        fp_dists = pairwise_distances(features)
    else:
        fp_dists = streaming_min_distances(features)

    sel_ss, pert_root = _spawn(rng, 2)
    base_idx = _gen(sel_ss).choice(dataset.count, size=n_base, replace=False)
    pert_streams = pert_root.spawn(n_base)

    def _detect_for_base(item) -> np.ndarray:
        idx, ss = item
        gen = _gen(ss)
        img = dataset.images[int(idx)]
        base_feature = features[int(idx)]
        dists = np.empty(n_pert)
        for j in range(n_pert):
            pert, _ = perturbed_image(img, beta, gen)
            dists[j] = feature_distance(base_feature, extractor.extract_image(pert))
        return dists

    det_blocks = _ordered_map(_detect_for_base, list(zip(base_idx, pert_streams)), threads)
    det_dists = np.concatenate(det_blocks)

    if taus is None:
        taus = auto_taus(fp_dists, n_taus)
    fp_sorted = np.sort(fp_dists)
    det_sorted = np.sort(det_dists)
    return [
        TradeoffPoint(
            tau=t,
            alpha_fp=_rate(fp_sorted, t),
            alpha_det=_rate(det_sorted, t),
            n_fp_trials=len(fp_sorted),
            n_det_trials=len(det_sorted),
            beta=beta,
        )
        for t in taus
    ]


# ---------------------------------------------------------------------------
# Quantizer-model bound validation.


@dataclass(frozen=True)
class ToyValidation:
    alpha_fp_hat: float
    alpha_det_hat: float
    bound: float
    violated: bool
    n_trials: int
    se_det: float


def toy_validate(cfg: ToyModelConfig, n_trials: int, rng: RngStream) -> ToyValidation:
    """Monte Carlo check of the quantizer detection bound.

    Counts how often a natural query escapes its own lattice point (the
    false-positive event) and how often a perturbed query still quantizes to
    the same feature (the detection event), then compares the detection rate
    against toy_bound at the measured false-positive rate plus three standard
    errors.
    """
    if n_trials < 1000:
        raise ValueError(f"n_trials must be >= 1000, got {n_trials}")
    p = cfg.center
    fp_count = 0
    det_count = 0
    sizes = _block_sizes(n_trials)
    for ss, m in zip(_spawn(rng, len(sizes)), sizes):
        gen = _gen(ss)
        x = p + cfg.sigma * gen.standard_normal((m, cfg.d))
        delta = cfg.beta * gen.standard_normal((m, cfg.d))
        hx = np.floor(x + 0.5)
        fp_count += int((hx != p).any(axis=1).sum())
        det_count += int((np.floor(x + delta + 0.5) == hx).all(axis=1).sum())
    alpha_fp_hat = fp_count / n_trials
    alpha_det_hat = det_count / n_trials
    bound = toy_bound(cfg.d, cfg.beta, alpha_fp_hat)
    se = binomial_se(alpha_det_hat, n_trials)
    return ToyValidation(
        alpha_fp_hat=alpha_fp_hat,
        alpha_det_hat=alpha_det_hat,
        bound=bound,
        violated=alpha_det_hat > bound + 3.0 * se,
        n_trials=n_trials,
        se_det=se,
    )


# ---------------------------------------------------------------------------
# Lipschitz-extractor bound validation.


@dataclass(frozen=True)
class LinearValidationPoint:
    tau: float
    alpha_fp_hat: float
    alpha_det_hat: float
    eq_bound: float
    violated: bool
    markov_vacuous: bool


@dataclass(frozen=True)
class LinearValidation:
    spread_hat: float
    lipschitz_ratio: float
    n_pairs: int
    points: list[LinearValidationPoint]


def linear_validate(
    ext: LinearExtractor,
    natural_cfg: ToyModelConfig,
    taus: Optional[Sequence[float]],
    beta: float,
    n: int,
    rng: RngStream,
    n_taus: int = 40,
) -> LinearValidation:
    """Monte Carlo check of the Lipschitz-extractor detection bound.

    Natural pairs estimate the expected input spread and the false-positive
    rate per threshold; perturbation trials estimate the detection rate. For
    a linear map the pair (x, x + delta) has feature distance |M delta| for
    every x, so only the perturbations need to be drawn. Each threshold's
    bound uses the measured false-positive rate and the extractor's exact
    constant ratio; ``markov_vacuous`` marks thresholds at or below
    sigma_max * spread where the intermediate tail inequality carries no
    information (the final bound still holds, just loosely).
    """
    if ext.input_dim != ext.output_dim:
        raise ValueError("two-sided constants require a square full-rank matrix")
    if natural_cfg.d != ext.input_dim:
        raise ValueError(
            f"natural distribution is {natural_cfg.d}-dimensional, extractor expects {ext.input_dim}"
        )
    if n < 1000:
        raise ValueError(f"n must be >= 1000, got {n}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")

    pair_root, det_root = _spawn(rng, 2)
    sizes = _block_sizes(n)
    spread_sum = 0.0
    fp_chunks = []
    for ss, m in zip(pair_root.spawn(len(sizes)), sizes):
        gen = _gen(ss)
        x1 = natural_cfg.center + natural_cfg.sigma * gen.standard_normal((m, natural_cfg.d))
        x2 = natural_cfg.center + natural_cfg.sigma * gen.standard_normal((m, natural_cfg.d))
        diff = x1 - x2
        spread_sum += float(np.linalg.norm(diff, axis=1).sum())
        fp_chunks.append(np.linalg.norm(diff @ ext.matrix.T, axis=1))
    det_chunks = []
    for ss, m in zip(det_root.spawn(len(sizes)), sizes):
        gen = _gen(ss)
        delta = beta * gen.standard_normal((m, natural_cfg.d))
        det_chunks.append(np.linalg.norm(delta @ ext.matrix.T, axis=1))

    spread_hat = spread_sum / n
    fp_sorted = np.sort(np.concatenate(fp_chunks))
    det_sorted = np.sort(np.concatenate(det_chunks))
    if taus is None:
        taus = auto_taus(fp_sorted, n_taus)

    points = []
    for tau in taus:
        alpha_fp_hat = _rate(fp_sorted, tau)
        alpha_det_hat = _rate(det_sorted, tau)
        bound = general_bound(
            BoundInput(
                d=natural_cfg.d,
                beta=beta,
                alpha_fp=min(alpha_fp_hat, 1.0 - 1e-12),
                lipschitz_ratio=ext.lipschitz_ratio,
                spread=spread_hat,
                sigma=natural_cfg.sigma,
            )
        )
        se = binomial_se(alpha_det_hat, n)
        points.append(
            LinearValidationPoint(
                tau=float(tau),
                alpha_fp_hat=alpha_fp_hat,
                alpha_det_hat=alpha_det_hat,
                eq_bound=bound,
                violated=alpha_det_hat > bound + 3.0 * se,
                markov_vacuous=tau <= ext.sigma_max * spread_hat,
            )
        )
    return LinearValidation(
        spread_hat=spread_hat,
        lipschitz_ratio=ext.lipschitz_ratio,
        n_pairs=n,
        points=points,
    )


# ---------------------------------------------------------------------------
# Distance-ratio distributions (empirical Lipschitz behavior).


@dataclass(frozen=True)
class LipschitzReport:
    """Distribution of feature-distance / input-distance ratios.

    For hash extractors the ratio is an empirical proxy only; those distances
    are not Euclidean and no two-sided constant formally exists.
    """

    ratios: np.ndarray
    input_dists: np.ndarray
    feature_dists: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    p05: float
    p95: float
    coefficient_of_variation: float
    empirical_ratio: float


def _spread_stats(ratios: np.ndarray) -> tuple[float, float, float, float]:
    p05, p95 = (float(v) for v in np.percentile(ratios, [5.0, 95.0]))
    mean = float(ratios.mean())
    std = float(ratios.std())
    if std == 0.0:
        cov = 0.0
    elif mean == 0.0:
        cov = math.inf
    else:
        cov = std / mean
    if p05 == 0.0:
        emp = 1.0 if p95 == 0.0 else math.inf
    else:
        emp = p95 / p05
    return p05, p95, cov, emp


def lipschitz_ratios(
    extractor: Extractor,
    sample: Union[DatasetHandle, np.ndarray],
    n_pairs: int,
    beta: float,
    rng: RngStream,
    bins: int = 50,
    threads: int = 1,
) -> LipschitzReport:
    """Ratios feature_distance(H(x), H(x + delta)) / |delta| over fresh pairs.

    ``sample`` is either an image dataset (perturbations in normalized pixel
    units, rounded to the 8-bit grid before extraction) or an (n, d) array of
    real vectors (no rounding). Base features are computed once per distinct
    sample element.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    image_mode = isinstance(sample, DatasetHandle)
    count = sample.count if image_mode else int(np.atleast_2d(sample).shape[0])
    if count == 0:
        raise EmptyDataset("lipschitz_ratios needs a non-empty sample")
    vectors = None if image_mode else np.atleast_2d(np.asarray(sample, dtype=np.float64))

    sel_ss, pert_root = _spawn(rng, 2)
    picks = _gen(sel_ss).integers(0, count, size=n_pairs)
    base_cache: dict[int, Feature] = {}
    for idx in sorted(set(int(i) for i in picks)):
        if image_mode:
            base_cache[idx] = extractor.extract_image(sample.images[idx])
        else:
            base_cache[idx] = extractor.extract_vector(vectors[idx])

    streams = pert_root.spawn(n_pairs)

    def _one_pair(item) -> tuple[float, float]:
        idx, ss = item
        gen = _gen(ss)
        if image_mode:
            img = sample.images[int(idx)]
            pert, input_dist = perturbed_image(img, beta, gen)
            fd = feature_distance(base_cache[int(idx)], extractor.extract_image(pert))
        else:
            x = vectors[int(idx)]
            perturbed = x + beta * gen.standard_normal(x.shape[0])
            input_dist = float(np.linalg.norm(perturbed - x))
            fd = feature_distance(base_cache[int(idx)], extractor.extract_vector(perturbed))
        return input_dist, fd

    results = _ordered_map(_one_pair, list(zip(picks, streams)), threads)
    input_dists = np.array([r[0] for r in results])
    feature_dists = np.array([r[1] for r in results])
    ratios = feature_dists / input_dists
    finite = ratios[np.isfinite(ratios)]
    if finite.size == 0:
        finite = np.zeros(1)
    # a zero-width distribution cannot support many distinct finite bin edges
    if finite.max() - finite.min() < max(abs(float(finite.max())), 1.0) * 1e-9:
        counts, bin_edges = np.histogram(finite, bins=1)
    else:
        counts, bin_edges = np.histogram(finite, bins=bins)
    p05, p95, cov, emp = _spread_stats(ratios)
    return LipschitzReport(
        ratios=ratios,
        input_dists=input_dists,
        feature_dists=feature_dists,
        bin_edges=bin_edges,
        counts=counts,
        p05=p05,
        p95=p95,
        coefficient_of_variation=cov,
        empirical_ratio=emp,
    )


# ---------------------------------------------------------------------------
# Loss-increase surface over (probe width, step size).


@dataclass(frozen=True)
class LossSurface:
    betas: tuple[float, ...]
    steps: tuple[float, ...]
    mean_dloss: np.ndarray  # (len(betas), len(steps))
    stderr: np.ndarray
    n_trials: int
    retries: int
    oracle_dloss: np.ndarray  # (len(steps),) ascent along the analytic gradient


def loss_surface(
    loss: ToyLoss,
    x0,
    betas: Sequence[float],
    steps: Sequence[float],
    q: int,
    n_trials: int,
    rng: RngStream,
    max_retries: int = 5,
) -> LossSurface:
    """Mean loss increase after one normalized ascent step along an estimated
    gradient, per (probe width beta, step size) cell.

    Each trial estimates a gradient with ``q`` probes at the given beta,
    normalizes it, and records L(x0 + step * direction) - L(x0) for every
    step. A zero estimate is retried with fresh noise (counted); the analytic
    gradient produces the oracle row for comparison.
    """
    betas = tuple(float(b) for b in betas)
    steps = tuple(float(s) for s in steps)
    if not betas or not steps:
        raise ValueError("betas and steps must be non-empty")
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    x0 = np.asarray(x0, dtype=np.float64)
    l0, grad = loss_and_grad(loss, x0)
    if np.linalg.norm(grad) == 0:
        raise ZeroEstimate("analytic gradient is zero at x0; surface is degenerate")
    oracle_dir = grad / np.linalg.norm(grad)
    oracle = loss_values(loss, x0 + np.outer(steps, oracle_dir)) - l0

    mean = np.empty((len(betas), len(steps)))
    stderr = np.empty_like(mean)
    retries = 0
    beta_roots = _spawn(rng, len(betas))
    for bi, beta in enumerate(betas):
        dloss = np.empty((n_trials, len(steps)))
        for ti, ss in enumerate(beta_roots[bi].spawn(n_trials)):
            gen = _gen(ss)
            for attempt in range(max_retries + 1):
                ghat = nes_estimate(loss, x0, q, beta, gen)
                norm = np.linalg.norm(ghat)
                if norm > 0:
                    break
                retries += 1
            else:
                raise ZeroEstimate(f"gradient estimate stayed zero after {max_retries} retries")
            direction = ghat / norm
            dloss[ti] = loss_values(loss, x0 + np.outer(steps, direction)) - l0
        mean[bi] = dloss.mean(axis=0)
        stderr[bi] = dloss.std(axis=0, ddof=1) / math.sqrt(n_trials) if n_trials > 1 else 0.0
    return LossSurface(
        betas=betas,
        steps=steps,
        mean_dloss=mean,
        stderr=stderr,
        n_trials=n_trials,
        retries=retries,
        oracle_dloss=oracle,
    )


# ---------------------------------------------------------------------------
# Norm concentration of projected gradients.


@dataclass(frozen=True)
class ConcentrationReport:
    empirical_prob: float
    bound: float
    vacuous: bool
    regime_flag: str
    n_trials: int
    satisfied: bool


def gradient_concentration(
    cfg: ProjectionConfig, n_trials: int, rng: RngStream
) -> ConcentrationReport:
    """Empirical probability that a fresh Gaussian projection preserves a
    fixed random unit gradient's norm within 1 +/- epsilon, against the
    closed-form lower bound.

    The bound is only calibrated near k * beta² = 1 (flagged); outside that
    regime, ``satisfied=False`` records a bound violation as a finding rather
    than raising.
    """
    if n_trials < 1000:
        raise ValueError(f"n_trials must be >= 1000, got {n_trials}")
    dir_ss, draw_root = _spawn(rng, 2)
    grad = _gen(dir_ss).standard_normal(cfg.d)
    grad /= np.linalg.norm(grad)

    inside = 0
    sizes = _block_sizes(n_trials, 1024)
    for ss, m in zip(draw_root.spawn(len(sizes)), sizes):
        g = _gen(ss).standard_normal((m, cfg.k, cfg.d))
        norms = np.linalg.norm(cfg.beta * (g @ grad), axis=1)
        inside += int(((norms >= 1.0 - cfg.epsilon) & (norms <= 1.0 + cfg.epsilon)).sum())
    empirical = inside / n_trials
    bound = gradient_bound(cfg.k, cfg.epsilon, cfg.beta)
    calibrated = abs(cfg.k * cfg.beta**2 - 1.0) <= 0.5
    return ConcentrationReport(
        empirical_prob=empirical,
        bound=bound,
        vacuous=vacuous(bound),
        regime_flag="calibrated" if calibrated else "uncalibrated",
        n_trials=n_trials,
        satisfied=empirical >= bound,
    )


# ---------------------------------------------------------------------------
# CSV renderings (plot-ready data; no plotting here).


def _fmt(x: float) -> str:
    return repr(float(x))


def tradeoff_csv(points: Sequence[TradeoffPoint], extractor: str, dataset: str) -> str:
    lines = ["extractor,dataset,beta,tau,alpha_fp,alpha_det,n_fp,n_det"]
    for p in points:
        lines.append(
            f"{extractor},{dataset},{_fmt(p.beta)},{_fmt(p.tau)},"
            f"{_fmt(p.alpha_fp)},{_fmt(p.alpha_det)},{p.n_fp_trials},{p.n_det_trials}"
        )
    return "\n".join(lines) + "\n"


def lipschitz_csv(report: LipschitzReport) -> str:
    lines = ["pair_id,input_dist,feature_dist,ratio"]
    for i in range(len(report.ratios)):
        lines.append(
            f"{i},{_fmt(report.input_dists[i])},{_fmt(report.feature_dists[i])},"
            f"{_fmt(report.ratios[i])}"
        )
    return "\n".join(lines) + "\n"


def surface_csv(surface: LossSurface) -> str:
    lines = ["beta,step,mean_dloss,stderr,trials"]
    for bi, beta in enumerate(surface.betas):
        for si, step in enumerate(surface.steps):
            lines.append(
                f"{_fmt(beta)},{_fmt(step)},{_fmt(surface.mean_dloss[bi, si])},"
                f"{_fmt(surface.stderr[bi, si])},{surface.n_trials}"
            )
    return "\n".join(lines) + "\n"


def toy_validation_csv(cfg: ToyModelConfig, result: ToyValidation) -> str:
    lines = ["d,sigma,beta,trials,alpha_fp_hat,alpha_det_hat,bound,violated"]
    lines.append(
        f"{cfg.d},{_fmt(cfg.sigma)},{_fmt(cfg.beta)},{result.n_trials},"
        f"{_fmt(result.alpha_fp_hat)},{_fmt(result.alpha_det_hat)},"
        f"{_fmt(result.bound)},{str(result.violated).lower()}"
    )
    return "\n".join(lines) + "\n"


def linear_validation_csv(result: LinearValidation, beta: float) -> str:
    lines = ["tau,beta,alpha_fp_hat,alpha_det_hat,bound,violated,markov_vacuous"]
    for p in result.points:
        lines.append(
            f"{_fmt(p.tau)},{_fmt(beta)},{_fmt(p.alpha_fp_hat)},{_fmt(p.alpha_det_hat)},"
            f"{_fmt(p.eq_bound)},{str(p.violated).lower()},{str(p.markov_vacuous).lower()}"
        )
    return "\n".join(lines) + "\n"


def concentration_csv(cfg: ProjectionConfig, report: ConcentrationReport) -> str:
    lines = ["k,d,beta,epsilon,trials,empirical_prob,bound,vacuous,regime,satisfied"]
    lines.append(
        f"{cfg.k},{cfg.d},{_fmt(cfg.beta)},{_fmt(cfg.epsilon)},{report.n_trials},"
        f"{_fmt(report.empirical_prob)},{_fmt(report.bound)},"
        f"{str(report.vacuous).lower()},{report.regime_flag},{str(report.satisfied).lower()}"
    )
    return "\n".join(lines) + "\n"
