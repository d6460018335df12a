"""Seeded, chunked Monte Carlo streams over the complex unit ball.

Every stochastic quantity in the library draws its randomness here. A stream
is identified by a root seed plus a tuple of tokens; chunk ``i`` of a stream
is generated by its own PCG64 generator derived from that identity, so values
are bit-stable for a fixed (seed, chunk size) regardless of how many worker
threads consume the chunks or in what order they finish.
"""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import qmc
from scipy.special import ndtri

DEFAULT_CHUNK = 4096


def worker_count() -> int:
    """Worker pool size from BCL_WORKERS (results never depend on it)."""
    try:
        return max(1, int(os.environ.get("BCL_WORKERS", "1")))
    except ValueError:
        return 1


def _token_bytes(token) -> bytes:
    if isinstance(token, bytes):
        return token
    if isinstance(token, str):
        return token.encode("utf-8")
    if isinstance(token, (int, np.integer)):
        return int(token).to_bytes(16, "little", signed=True)
    if isinstance(token, (float, np.floating)):
        return np.float64(token).tobytes()
    if isinstance(token, np.ndarray):
        return token.tobytes()
    if isinstance(token, (tuple, list)):
        return b"".join(_token_bytes(t) for t in token)
    raise TypeError(f"cannot derive stream key from {type(token)!r}")


def stream_entropy(seed: int, *tokens) -> list[int]:
    """Stable entropy words for a (seed, tokens) stream identity."""
    digest = hashlib.blake2b(_token_bytes(tokens), digest_size=16).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return [int(seed) & 0xFFFFFFFF, *words]


def chunk_rng(entropy: list[int], index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy + [index])))


@dataclass
class IntegralResult:
    """Monte Carlo estimate with its standard error."""

    value: float
    se: float
    n_samples: int
    rejected: int = 0
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.se))

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(
            value=self.value * factor,
            se=abs(factor) * self.se,
            n_samples=self.n_samples,
            rejected=self.rejected,
            warnings=list(self.warnings),
        )


def mc_mean(sample_chunk, total: int, entropy: list[int], chunk: int = DEFAULT_CHUNK) -> IntegralResult:
    """Chunked sample mean of ``sample_chunk(rng, m) -> values``.

    ``values`` is a float array of length m; NaN entries mark rejected
    samples, which contribute zero and are counted. The reduction order is
    fixed by chunk index, so the result is independent of the worker count.
    """
    total = int(total)
    chunk = max(1, int(chunk))
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)

    def run(idx_size):
        idx, m = idx_size
        vals = np.asarray(sample_chunk(chunk_rng(entropy, idx), m), dtype=float)
        bad = ~np.isfinite(vals)
        if bad.any():
            vals = np.where(bad, 0.0, vals)
        return float(vals.sum()), float((vals * vals).sum()), int(bad.sum())

    tasks = list(enumerate(sizes))
    workers = worker_count()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, tasks))
    else:
        partials = [run(t) for t in tasks]

    s1 = 0.0
    s2 = 0.0
    rejected = 0
    for a, b, nrej in partials:
        s1 += a
        s2 += b
        rejected += nrej
    mean = s1 / total
    var = max(0.0, (s2 - total * mean * mean) / max(1, total - 1))
    se = float(np.sqrt(var / total))
    warnings = []
    if rejected:
        warnings.append(f"rejected {rejected}/{total} samples near the boundary")
    return IntegralResult(value=float(mean), se=se, n_samples=total, rejected=rejected, warnings=warnings)


# ---------------------------------------------------------------------------
# point samplers
# ---------------------------------------------------------------------------

def uniform_ball(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """m points uniform w.r.t. normalized volume on the unit ball of C^n."""
    g = rng.standard_normal((m, 2 * n))
    v = g[:, :n] + 1j * g[:, n:]
    nrm = np.sqrt(np.sum(np.abs(v) ** 2, axis=1))
    nrm = np.maximum(nrm, 1e-300)
    radius = rng.random(m) ** (1.0 / (2 * n))
    return v * (radius / nrm)[:, None]


def uniform_sphere(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    g = rng.standard_normal((m, 2 * n))
    v = g[:, :n] + 1j * g[:, n:]
    nrm = np.maximum(np.sqrt(np.sum(np.abs(v) ** 2, axis=1)), 1e-300)
    return v / nrm[:, None]


def sphere_first_coordinate(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """Distribution of <xi, e_1> for xi uniform on the unit sphere of C^n.

    For n = 1 this is a uniform phase; for n >= 2 the squared modulus is
    Beta(1, n-1) with an independent uniform phase.
    """
    phase = np.exp(2j * np.pi * rng.random(m))
    if n == 1:
        return phase
    mod = np.sqrt(1.0 - rng.random(m) ** (1.0 / (n - 1)))
    return mod * phase


def ellipsoid_points(rng: np.random.Generator, m: int, ball, frame: np.ndarray) -> np.ndarray:
    """Uniform points in the Bergman-ball ellipsoid described by ``ball``.

    ``frame`` is a unitary whose first column is the center direction; for a
    centered ball any unitary works.
    """
    n = ball.c.shape[0]
    u = uniform_ball(rng, m, n)
    axes = np.full(n, ball.axis_short)
    axes[0] = ball.axis_long
    coords = u * axes[None, :]
    return coords @ frame.T + ball.c[None, :]


def shell_points(rng: np.random.Generator, m: int, n: int, r_lo: float, r_hi: float) -> np.ndarray:
    """Uniform (normalized volume) points in the radial shell r_lo <= |z| < r_hi."""
    lo = r_lo ** (2 * n)
    hi = r_hi ** (2 * n)
    radius = (lo + rng.random(m) * (hi - lo)) ** (1.0 / (2 * n))
    return uniform_sphere(rng, m, n) * radius[:, None]


def carleson_block_points(rng: np.random.Generator, m: int, n: int, delta: float, frame: np.ndarray):
    """Importance sample for integrals over a Carleson tube of width delta.

    Returns (points, weights): z_1 is drawn uniformly on the disc of radius
    delta about 1 (rejecting |z_1| >= 1 with weight 0), the remaining
    coordinates uniformly in their slice ball, and the weight carries the
    marginal density n/pi (1-|z_1|^2)^(n-1) times the proposal area.
    """
    u = rng.random(m)
    theta = 2.0 * np.pi * rng.random(m)
    z1 = 1.0 + delta * np.sqrt(u) * np.exp(1j * theta)
    inside = np.abs(z1) < 1.0
    slack = np.clip(1.0 - np.abs(z1) ** 2, 0.0, None)
    if n > 1:
        zrest = uniform_ball(rng, m, n - 1) * np.sqrt(slack)[:, None]
        coords = np.concatenate([z1[:, None], zrest], axis=1)
    else:
        coords = z1[:, None]
    weights = np.where(inside, n * delta ** 2 * slack ** (n - 1), 0.0)
    pts = coords @ frame.T
    return pts, weights


def low_discrepancy_ball(seed: int, count: int, n: int, trunc: float, hyperbolic: bool = True) -> np.ndarray:
    """Quasi-random candidate stream in the truncated ball |z| <= trunc.

    With ``hyperbolic=True`` the radial law matches the hyperbolic volume
    element, so candidates equidistribute at every scale up to the truncation
    radius; this is what the greedy lattice builder wants.
    """
    entropy = stream_entropy(seed, "sobol", n, float(trunc), int(hyperbolic))
    engine = qmc.Sobol(d=2 * n + 1, scramble=True, seed=np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy))))
    pow2 = 1 << max(0, int(np.ceil(np.log2(max(count, 1)))))
    u = engine.random(pow2)[:count]
    c = np.clip(u[:, 0], 1e-12, 1.0 - 1e-12)
    if hyperbolic:
        # closed-form inverse of the hyperbolic radial CDF on [0, trunc]
        y = c ** (1.0 / n) * trunc ** 2 / (1.0 - trunc ** 2)
        radius = np.sqrt(y / (1.0 + y))
    else:
        radius = trunc * c ** (1.0 / (2 * n))
    g = ndtri(np.clip(u[:, 1:], 1e-12, 1.0 - 1e-12))
    v = g[:, :n] + 1j * g[:, n:]
    nrm = np.maximum(np.sqrt(np.sum(np.abs(v) ** 2, axis=1)), 1e-300)
    return v * (radius / nrm)[:, None]


# ---------------------------------------------------------------------------
# deterministic radial quadrature
# ---------------------------------------------------------------------------

def radial_rule(depth: int = 40, order: int = 12):
    """Composite Gauss-Legendre nodes/weights on (0, 1), dyadically refined at 1.

    Segments [0, 1/2], [1/2, 3/4], ..., [1-2^-depth, 1]; integrands with an
    integrable power behavior at 1 are resolved to near machine precision.
    """
    x, w = leggauss(order)
    edges = [0.0] + [1.0 - 2.0 ** (-k) for k in range(1, depth + 1)] + [1.0]
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(w * half)
    return np.concatenate(nodes), np.concatenate(weights)
