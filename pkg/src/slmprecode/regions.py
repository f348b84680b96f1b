"""Sampling regions and deterministic random streams for data vectors.

Data vectors u live in one of three region kinds: a hypercube of side tau
(the continuous approximation of a cubic lattice code), a solid ball, or a
zero-mean Gaussian with arbitrary covariance (the "oval" shaped source used
to verify the closed-form optimum). Each finite region carries its Lebesgue
volume and the per-dimension differential entropy of the uniform
distribution over it, in bits.

Randomness is counter-based: every stream is a numpy Philox generator keyed
by a pair of 64-bit words, so parallel trials derive independent,
scheduling-independent streams from (master_seed, trial_index) without any
coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg, theory
from .errors import NotPositiveDefiniteError

# Second key word reserved for channel generation so the channel stream can
# never collide with a trial stream (trial indices are < 2^63).
CHANNEL_STREAM_TAG = 0xFFFF_FFFF_FFFF_FFFF

LOG2_TWO_PI_E = math.log2(2.0 * math.pi * math.e)


def make_stream(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream keyed by (seed, index)."""
    key = np.array([np.uint64(seed & 0xFFFF_FFFF_FFFF_FFFF), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def channel_stream(seed: int) -> np.random.Generator:
    """Dedicated stream for drawing random channel matrices."""
    return make_stream(seed, CHANNEL_STREAM_TAG)


@dataclass(frozen=True, eq=False)
class Region:
    """A sampling region for data vectors.

    ``volume`` is the Lebesgue volume for the finite kinds (hypercube,
    ball) and None for the Gaussian. ``entropy_bits_per_dim`` is the
    differential entropy per dimension of the region's distribution:
    log2(tau) for the hypercube, (1/M) log2(volume) for the ball, and the
    Gaussian closed form for the oval case.
    """

    kind: str
    dim: int
    volume: Optional[float]
    entropy_bits_per_dim: float
    tau: Optional[float] = None
    radius: Optional[float] = None
    sigma: Optional[np.ndarray] = None

    def describe(self) -> str:
        if self.kind == "hypercube":
            return f"hypercube(tau={self.tau:g}, M={self.dim})"
        if self.kind == "ball":
            return f"ball(radius={self.radius:g}, M={self.dim})"
        return f"gaussian(M={self.dim})"


def hypercube(tau: float, m: int) -> Region:
    """Centered hypercube [-tau/2, tau/2)^M."""
    tau = float(tau)
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return Region(
        kind="hypercube",
        dim=int(m),
        volume=tau**m,
        entropy_bits_per_dim=math.log2(tau),
        tau=tau,
    )


def ball(radius: float, m: int) -> Region:
    """Solid origin-centered M-ball of the given radius."""
    radius = float(radius)
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if m < 1:
        raise ValueError("dimension must be >= 1")
    volume = theory.ball_volume(m) * radius**m
    return Region(
        kind="ball",
        dim=int(m),
        volume=volume,
        entropy_bits_per_dim=math.log2(volume) / m,
        radius=radius,
    )


def gaussian(sigma) -> Region:
    """Zero-mean Gaussian region with covariance sigma (the oval source)."""
    sigma = linalg.as_matrix(sigma, "sigma")
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"covariance must be square, got {sigma.shape}")
    m = sigma.shape[0]
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise NotPositiveDefiniteError("covariance must be positive definite")
    # h = (1/2) log2((2 pi e)^M det Sigma) bits total, divided by M.
    entropy = 0.5 * LOG2_TWO_PI_E + 0.5 * logdet / (m * math.log(2.0))
    return Region(
        kind="gaussian",
        dim=m,
        volume=None,
        entropy_bits_per_dim=entropy,
        sigma=sigma,
    )


@dataclass
class Sampler:
    """Single-owner random stream tied to a region.

    Two Samplers built from the same (region, seed) emit bitwise-identical
    sample streams; distinct Samplers may run in parallel.
    """

    region: Region
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        self.gen = make_stream(self.seed, self.stream_index)

    def draw(self, n: Optional[int] = None) -> np.ndarray:
        """One sample (shape (M,)) or a batch of n samples (shape (n, M))."""
        r = self.region
        if r.kind == "hypercube":
            return sample_hypercube(r.tau, r.dim, self, n)
        if r.kind == "ball":
            return sample_ball(r.radius, r.dim, self, n)
        return sample_gaussian(r.sigma, self, n)


def _uniform(sampler, n: Optional[int], m: int) -> np.ndarray:
    shape = (m,) if n is None else (int(n), m)
    return sampler.gen.random(shape)


def sample_hypercube(tau: float, m: int, sampler: Sampler, n: Optional[int] = None) -> np.ndarray:
    """I.i.d. coordinates uniform on the half-open interval [-tau/2, tau/2)."""
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    return tau * (_uniform(sampler, n, m) - 0.5)


def sample_ball(radius: float, m: int, sampler: Sampler, n: Optional[int] = None) -> np.ndarray:
    """Uniform over the solid M-ball via the exact radial inverse CDF.

    Direction is a normalized standard Gaussian; the norm is
    radius * U^(1/M), the inverse CDF of the radial distribution.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    shape = (m,) if n is None else (int(n), m)
    g = sampler.gen.standard_normal(shape)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    # A zero Gaussian draw has probability zero; guard anyway.
    norms = np.where(norms == 0.0, 1.0, norms)
    u = sampler.gen.random(shape[:-1] + (1,))
    return g / norms * (radius * u ** (1.0 / m))


def sample_gaussian(sigma, sampler: Sampler, n: Optional[int] = None) -> np.ndarray:
    """Zero-mean Gaussian with covariance sigma via Cholesky coloring."""
    sigma = linalg.as_matrix(sigma, "sigma")
    chol = linalg.cholesky(sigma)
    m = sigma.shape[0]
    shape = (m,) if n is None else (int(n), m)
    white = sampler.gen.standard_normal(shape)
    return white @ chol.T


def expanded_region(base: Region, n_candidates: int) -> Region:
    """Hypercube grown to hold n_candidates points per data vector.

    Selective mapping embeds each data vector among N equivalent points, so
    the carrier volume grows to N times the base volume: the side becomes
    tau * N^(1/M) and the per-dimension entropy gains (1/M) log2(N) bits.
    """
    if base.kind != "hypercube":
        raise ValueError(f"expanded_region requires a hypercube base, got {base.kind}")
    n = int(n_candidates)
    if n < 1:
        raise ValueError("n_candidates must be >= 1")
    if n == 1:
        return base
    return hypercube(base.tau * n ** (1.0 / base.dim), base.dim)
