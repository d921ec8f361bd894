"""Reproducible randomness, the query distributions, and gradient estimators.

All randomness flows through :class:`RngStream`, a value-like handle
(master_seed, stream_id) that fully determines its sample sequence. Distinct
stream ids give independent-behaving streams no matter how many other streams
run concurrently, so Monte Carlo loops can fan out across workers without
changing results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, ZeroGradient

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Named random stream; (master_seed, stream_id) determines the sequence."""

    master_seed: int
    stream_id: int = 0

    def seed_sequence(self) -> np.random.SeedSequence:
        # SeedSequence mixes entropy and spawn_key through a 64-bit hash, which
        # is what keeps distinct stream ids statistically independent.
        return np.random.SeedSequence(
            self.master_seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def stream(self, stream_id: int) -> "RngStream":
        return replace(self, stream_id=stream_id)


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either a stream value or an already-advanced generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or Generator, got {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class ToyModelConfig:
    """Quantizer-model query distributions.

    Natural queries are N(center, sigma² I_d) around an integer lattice point;
    attack perturbations are N(0, beta² I_d).
    """

    d: int
    sigma: float
    beta: float
    center: np.ndarray | int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        center = np.broadcast_to(np.asarray(self.center, dtype=np.int64), (self.d,)).copy()
        object.__setattr__(self, "center", center)


def sample_natural(cfg: ToyModelConfig, rng: RngLike, n: Optional[int] = None) -> np.ndarray:
    """Draw natural queries: center + sigma * standard normal, shape (d,) or (n, d)."""
    gen = as_generator(rng)
    shape = (cfg.d,) if n is None else (n, cfg.d)
    return cfg.center + cfg.sigma * gen.standard_normal(shape)


def sample_perturbation(cfg: ToyModelConfig, rng: RngLike, n: Optional[int] = None) -> np.ndarray:
    """Draw attack perturbations: beta * standard normal, shape (d,) or (n, d)."""
    gen = as_generator(rng)
    shape = (cfg.d,) if n is None else (n, cfg.d)
    return cfg.beta * gen.standard_normal(shape)


@dataclass(frozen=True)
class ProjectionConfig:
    """Random projection G with k rows drawn from N(0, I_d beta²)."""

    k: int
    d: int
    beta: float
    epsilon: float = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


def project_gradient(loss_grad, cfg: ProjectionConfig, rng: RngLike) -> float:
    """Norm of G @ grad for one fresh draw of the projection matrix G."""
    return float(project_gradient_batch(loss_grad, cfg, rng, 1)[0])


def project_gradient_batch(
    loss_grad, cfg: ProjectionConfig, rng: RngLike, n: int, chunk: int = 2048
) -> np.ndarray:
    """Norms |G_i @ grad| for n independent draws of G, as one array.

    Standardized by beta and squared, these norms are chi-square with k
    degrees of freedom when the gradient is a unit vector.
    """
    grad = np.asarray(loss_grad, dtype=np.float64)
    if grad.shape != (cfg.d,):
        raise DimensionMismatch(f"expected gradient of length {cfg.d}, got {grad.shape}")
    if not np.any(grad):
        raise ZeroGradient("gradient is identically zero")
    gen = as_generator(rng)
    out = np.empty(n, dtype=np.float64)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        g = gen.standard_normal((m, cfg.k, cfg.d))
        proj = cfg.beta * (g @ grad)
        out[done : done + m] = np.linalg.norm(proj, axis=1)
        done += m
    return out


@dataclass(frozen=True, eq=False)
class ToyLoss:
    """Analytic loss used as the gradient-estimation target.

    ``quadratic``: L(x) = 0.5 |x|², gradient x. ``log_sum_exp``:
    L(x) = log sum_i exp(w_i · x), gradient sum_i softmax_i(Wx) w_i. The
    quadratic loss has exactly beta-independent antithetic differences, so
    probe-width degradation studies need the log_sum_exp kind.
    """

    kind: str
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("quadratic", "log_sum_exp"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "log_sum_exp":
            if self.weights is None:
                raise ValueError("log_sum_exp loss needs a weight matrix")
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 2 or w.shape[0] < 2:
                raise ValueError(f"weights must be (m>=2, d), got {w.shape}")
            object.__setattr__(self, "weights", w)

    @classmethod
    def quadratic(cls) -> "ToyLoss":
        return cls(kind="quadratic")

    @classmethod
    def log_sum_exp(cls, weights) -> "ToyLoss":
        return cls(kind="log_sum_exp", weights=np.asarray(weights, dtype=np.float64))


def loss_values(loss: ToyLoss, points: np.ndarray) -> np.ndarray:
    """Loss at each row of ``points`` (n, d), as shape (n,)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if loss.kind == "quadratic":
        return 0.5 * np.sum(pts * pts, axis=1)
    if pts.shape[1] != loss.weights.shape[1]:
        raise DimensionMismatch(
            f"points have dim {pts.shape[1]}, weights expect {loss.weights.shape[1]}"
        )
    z = pts @ loss.weights.T
    zmax = z.max(axis=1, keepdims=True)
    return (zmax + np.log(np.sum(np.exp(z - zmax), axis=1, keepdims=True)))[:, 0]


def loss_and_grad(loss: ToyLoss, x) -> tuple[float, np.ndarray]:
    """Loss value and analytic gradient at a single point."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {arr.shape}")
    if loss.kind == "quadratic":
        return float(0.5 * arr @ arr), arr.copy()
    w = loss.weights
    if arr.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"x has dim {arr.shape[0]}, weights expect {w.shape[1]}")
    z = w @ arr
    zmax = z.max()
    ez = np.exp(z - zmax)
    total = ez.sum()
    value = float(zmax + np.log(total))
    grad = (ez / total) @ w
    return value, grad


def nes_estimate(
    loss: ToyLoss, x, q: int, beta: float, rng: RngLike, two_sided: bool = True
) -> np.ndarray:
    """Finite-difference gradient estimate over q Gaussian probe directions.

    Antithetic (two-sided) by default:
        g_hat = (1/q) sum_i [(L(x + beta d_i) - L(x - beta d_i)) / (2 beta)] d_i
    with d_i ~ N(0, I_d). ``two_sided=False`` uses one-sided differences
    against L(x).
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    arr = np.asarray(x, dtype=np.float64)
    gen = as_generator(rng)
    delta = gen.standard_normal((q, arr.shape[0]))
    if two_sided:
        diffs = loss_values(loss, arr + beta * delta) - loss_values(loss, arr - beta * delta)
        coeff = diffs / (2.0 * beta)
    else:
        base = loss_values(loss, arr[None, :])[0]
        coeff = (loss_values(loss, arr + beta * delta) - base) / beta
    return (coeff @ delta) / q
