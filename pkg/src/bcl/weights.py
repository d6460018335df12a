"""Radial weights on the unit ball, their tail integrals and diagnostics.

A radial weight is positive and integrable on [0, 1) and acts on the ball
through |z|. The tail integral ``hat(r) = int_r^1 w(s) ds`` drives everything
else: doubling diagnostics, the twisted companion weight ``hat(r)/(1-r)``,
masses of metric balls and Carleson blocks, and kernel-type integrals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from . import _sampling, geometry
from ._sampling import IntegralResult

DEFAULT_SEED = 20240601
# Operational stand-in for the existential threshold lambda_0: one above the
# fitted upper doubling exponent. Used only to emit gating warnings.
LAMBDA0_OFFSET = 1.0


class WeightError(ValueError):
    """Raised for non-integrable weights or out-of-domain arguments."""


@dataclass
class DoublingDiagnostics:
    """Empirical doubling behavior of a radial weight.

    ``doubling_sup`` estimates sup_r hat(r)/hat((1+r)/2); ``reverse_c`` and
    ``reverse_k`` witness the reverse-doubling inequality; the exponent
    window [lambda_est, beta_est] is fitted from two-point slopes of
    log hat against log(1-r).
    """

    doubling_sup: float
    reverse_c: float
    reverse_k: float
    lambda_est: float
    beta_est: float
    grid: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.doubling_sup < 1.0 - 1e-12:
            raise WeightError("doubling_sup must be >= 1")
        if self.lambda_est > self.beta_est + 1e-12:
            raise WeightError("exponent window must satisfy lambda <= beta")


class RadialWeight:
    """Base class: subclasses provide density(r) and hat(r), vectorized."""

    n: int

    def density(self, r):
        raise NotImplementedError

    def hat(self, r):
        raise NotImplementedError

    def density_at(self, pts: np.ndarray) -> np.ndarray:
        """Weight evaluated at ball points (m, n) via their radius."""
        radii = np.sqrt(np.sum(np.abs(np.asarray(pts)) ** 2, axis=-1))
        return self.density(np.minimum(radii, 1.0 - 1e-15))

    def total_mass(self) -> float:
        """Mass of the whole ball w.r.t. w(|z|) dV (normalized volume)."""
        nodes, wts = _sampling.radial_rule(depth=40, order=12)
        vals = 2 * self.n * nodes ** (2 * self.n - 1) * self.density(nodes)
        return float(np.sum(wts * vals))

    def diagnostics(self, grid=None) -> DoublingDiagnostics:
        if getattr(self, "_diag", None) is None or grid is not None:
            diag = doubling_diagnostics(self, grid=grid)
            if grid is not None:
                return diag
            self._diag = diag
        return self._diag

    def _check_integrable(self):
        h0 = float(self.hat(0.0))
        if not np.isfinite(h0) or h0 <= 0:
            raise WeightError("weight is not positive and integrable on [0, 1)")

    def label(self) -> str:
        return type(self).__name__


def _check_unit_interval(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise WeightError("radius must lie in [0, 1]")
    return r


def _binom_series_tail(alpha: float, x):
    """sum_j C(alpha, j) (-1/2)^j x^(alpha+j+1)/(alpha+j+1) for x in [0, 1].

    Stable evaluation of int_0^x t^alpha (1 - t/2)^alpha dt; the generalized
    binomial terms decay geometrically, so 200 terms reach machine precision.
    """
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    coeff = 1.0  # C(alpha, 0)
    xp = np.power(x, alpha + 1.0)
    for j in range(200):
        term = coeff * xp / (alpha + j + 1.0)
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
        coeff *= (alpha - j) / (j + 1.0) * (-0.5)
        xp = xp * x
    return total


class StandardAlpha(RadialWeight):
    """w(r) = c_alpha (1 - r^2)^alpha, normalized to unit ball mass."""

    def __init__(self, alpha: float, n: int = 1):
        if alpha <= -1:
            raise WeightError("alpha must exceed -1")
        self.alpha = float(alpha)
        self.n = int(n)
        self.normalizer = float(
            np.exp(gammaln(n + alpha + 1) - gammaln(n + 1) - gammaln(alpha + 1))
        )
        self._check_integrable()

    def density(self, r):
        r = np.asarray(r, dtype=float)
        return self.normalizer * np.power(np.clip(1.0 - r * r, 0.0, None), self.alpha)

    def hat(self, r):
        r = _check_unit_interval(r)
        # int_r^1 (1-s^2)^alpha ds = 2^alpha int_0^{1-r} x^alpha (1-x/2)^alpha dx
        return self.normalizer * 2.0 ** self.alpha * _binom_series_tail(self.alpha, 1.0 - r)

    def label(self) -> str:
        return f"standard_alpha({self.alpha:g})"


class PowerLog(RadialWeight):
    """w(r) = (1 - r)^alpha log(e/(1-r))^b."""

    def __init__(self, alpha: float, b: float = 0.0, n: int = 1):
        if alpha <= -1:
            raise WeightError("alpha must exceed -1")
        self.alpha = float(alpha)
        self.b = float(b)
        self.n = int(n)
        self._hat_cache: dict[float, float] = {}
        self._check_integrable()

    def density(self, r):
        r = np.asarray(r, dtype=float)
        x = np.clip(1.0 - r, 1e-300, None)
        return np.power(x, self.alpha) * np.power(1.0 - np.log(x), self.b)

    def _hat_scalar(self, r: float) -> float:
        if r >= 1.0:
            return 0.0
        key = round(float(r), 15)
        if key not in self._hat_cache:
            val, _ = quad(
                lambda x: x ** self.alpha * (1.0 - np.log(x)) ** self.b,
                0.0,
                1.0 - r,
                epsabs=0.0,
                epsrel=1e-10,
                limit=200,
            )
            self._hat_cache[key] = float(val)
        return self._hat_cache[key]

    def hat(self, r):
        r = _check_unit_interval(r)
        if np.ndim(r) == 0:
            return self._hat_scalar(float(r))
        return np.array([self._hat_scalar(float(v)) for v in np.ravel(r)]).reshape(np.shape(r))

    def label(self) -> str:
        return f"power_log({self.alpha:g},{self.b:g})"


class Tabulated(RadialWeight):
    """Weight given by samples (r_i, w(r_i)), interpolated log-linearly in r.

    Log-linear interpolation keeps the weight positive; each segment is an
    exponential in r, so tail integrals have closed forms per segment.
    """

    def __init__(self, radii, values, n: int = 1):
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise WeightError("tabulated weight needs matching 1-d grids, >= 2 nodes")
        if np.any(np.diff(radii) <= 0):
            raise WeightError("radii must be strictly increasing")
        if radii[0] < 0 or radii[-1] >= 1.0:
            raise WeightError("radii must lie in [0, 1)")
        if np.any(values <= 0):
            raise WeightError("tabulated values must be positive")
        self.radii = radii
        self.values = values
        self.logv = np.log(values)
        self.n = int(n)
        dr = np.diff(radii)
        self.slopes = np.diff(self.logv) / dr
        # cap the extrapolation slope so the tail integral cannot overflow
        last = np.clip(self.slopes[-1], -700.0 / max(1e-12, 1.0 - radii[-1]), 700.0 / max(1e-12, 1.0 - radii[-1]))
        self._tail_slope = float(last)
        self._seg_tails = self._segment_tails()
        self._check_integrable()

    def _segment_integral(self, w0, k, length):
        kl = k * length
        small = np.abs(kl) < 1e-10
        with np.errstate(over="ignore"):
            full = w0 * np.where(small, length * (1.0 + 0.5 * kl), (np.exp(kl) - 1.0) / np.where(small, 1.0, k))
        return full

    def _segment_tails(self) -> np.ndarray:
        dr = np.diff(self.radii)
        seg = self._segment_integral(self.values[:-1], self.slopes, dr)
        tail_last = self._segment_integral(self.values[-1], self._tail_slope, 1.0 - self.radii[-1])
        tails = np.concatenate([seg, [tail_last]])[::-1].cumsum()[::-1]
        return np.concatenate([tails, [0.0]])

    def density(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, self.radii.size - 2)
        k = self.slopes[idx]
        k = np.where(r > self.radii[-1], self._tail_slope, k)
        base = np.where(r > self.radii[-1], self.radii[-1], self.radii[idx])
        logw = np.where(r > self.radii[-1], self.logv[-1], self.logv[idx]) + k * (r - base)
        return np.exp(logw)

    def hat(self, r):
        r = _check_unit_interval(np.asarray(r, dtype=float))
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.zeros_like(r)
        last = self.radii[-1]
        beyond = r >= last
        out[beyond] = self._segment_integral(
            self.density(r[beyond]), self._tail_slope, np.clip(1.0 - r[beyond], 0.0, None)
        )
        inside = ~beyond
        if inside.any():
            ri = r[inside]
            idx = np.clip(np.searchsorted(self.radii, ri, side="right") - 1, 0, self.radii.size - 2)
            w_at = self.density(ri)
            rest = self.radii[idx + 1] - ri
            out[inside] = self._segment_integral(w_at, self.slopes[idx], rest) + self._seg_tails[idx + 1]
        out[r >= 1.0] = 0.0
        return float(out[0]) if scalar else out

    def label(self) -> str:
        return f"tabulated({self.radii.size} nodes)"


def twisted_weight(omega: RadialWeight) -> Tabulated:
    """Companion weight hat(r)/(1-r), tabulated on a boundary-refined grid."""
    coarse = np.linspace(0.0, 0.5, 65)
    octaves = 2.0 ** (-np.arange(1, 46, dtype=float))
    fine = 1.0 - np.concatenate([octaves, 0.75 * octaves, 0.59 * octaves])
    grid = np.unique(np.concatenate([coarse, fine]))
    vals = np.asarray(omega.hat(grid), dtype=float) / (1.0 - grid)
    return Tabulated(grid, vals, n=omega.n)


def default_doubling_grid() -> np.ndarray:
    dyadic = 1.0 - 2.0 ** (-np.arange(0, 21, dtype=float))
    return np.unique(np.concatenate([dyadic, np.linspace(0.05, 0.45, 9)]))


def doubling_diagnostics(omega: RadialWeight, grid=None) -> DoublingDiagnostics:
    """Estimate doubling constants and the exponent window over a radial grid."""
    grid = default_doubling_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid >= 1):
        raise WeightError("diagnostic grid must lie in [0, 1)")
    grid = np.sort(grid)
    hat = np.asarray(omega.hat(grid), dtype=float)
    hat_mid = np.asarray(omega.hat((1.0 + grid) / 2.0), dtype=float)
    doubling_sup = float(np.max(hat / np.maximum(hat_mid, 1e-300)))

    reverse_c, reverse_k = 0.0, 2.0
    for K in (2.0, 4.0, 8.0, 16.0):
        contracted = np.asarray(omega.hat(1.0 - (1.0 - grid) / K), dtype=float)
        c_k = float(np.min(hat / np.maximum(contracted, 1e-300)))
        if c_k > reverse_c:
            reverse_c, reverse_k = c_k, K
        if c_k > 1.05:
            reverse_c, reverse_k = c_k, K
            break

    exps = []
    one_minus = 1.0 - grid
    for i in range(grid.size):
        for j in range(i + 1, grid.size):
            x = one_minus[i] / one_minus[j]
            if x < 2.0:
                continue
            ratio = hat[i] / max(hat[j], 1e-300)
            exps.append(np.log(ratio) / np.log(x))
    if not exps:
        raise WeightError("diagnostic grid too coarse for exponent fitting")
    return DoublingDiagnostics(
        doubling_sup=doubling_sup,
        reverse_c=reverse_c,
        reverse_k=reverse_k,
        lambda_est=float(np.min(exps)),
        beta_est=float(np.max(exps)),
        grid=grid,
    )


def lambda0_estimate(omega: RadialWeight) -> float:
    return omega.diagnostics().beta_est + LAMBDA0_OFFSET


@dataclass
class BallMass:
    value: float
    se: float
    comparator: float
    n_samples: int
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.se))


def ball_mass(
    omega: RadialWeight,
    a,
    r: float | None = None,
    region: str = "bergman",
    budget: int = 2 ** 14,
    seed: int = DEFAULT_SEED,
    chunk: int = _sampling.DEFAULT_CHUNK,
    rel_tol: float = 0.05,
) -> BallMass:
    """Mass of a Bergman ball or Carleson block under w(|z|) dV.

    Bergman balls are sampled uniformly inside their ellipsoid (the sample
    stream depends only on (seed, center, radius), so two weights evaluated
    on the same ball share points). The comparator (1-|a|)^n hat(|a|) is the
    block-mass scale the doubling theory predicts.
    """
    a = geometry.ensure_interior(a, "center")
    n = omega.n
    if a.shape[0] != n:
        raise WeightError("center dimension does not match the weight")
    mod_a = float(np.sqrt(geometry.norm_sq(a)))
    comparator = float((1.0 - mod_a) ** n * omega.hat(mod_a))

    if region == "bergman":
        if r is None or not r > 0:
            raise WeightError("bergman region needs a positive radius")
        ball = geometry.bergman_ball(a, r)
        frame = geometry.unitary_frame(a if mod_a > 0 else np.eye(n, dtype=complex)[0])
        entropy = _sampling.stream_entropy(seed, "ballmass", n, a, float(r))

        def sample(rng, m):
            pts = _sampling.ellipsoid_points(rng, m, ball, frame)
            return omega.density_at(pts)

        res = _sampling.mc_mean(sample, budget, entropy, chunk).scaled(ball.normalized_volume)
    elif region == "block":
        if mod_a == 0.0:
            entropy = _sampling.stream_entropy(seed, "blocktotal", n)

            def sample(rng, m):
                return omega.density_at(_sampling.uniform_ball(rng, m, n))

            res = _sampling.mc_mean(sample, budget, entropy, chunk)
        else:
            xi = a / mod_a
            delta = 1.0 - mod_a
            frame = geometry.unitary_frame(xi)
            entropy = _sampling.stream_entropy(seed, "block", n, a)

            def sample(rng, m):
                pts, wts = _sampling.carleson_block_points(rng, m, n, delta, frame)
                pts = np.where(wts[:, None] > 0, pts, 0.0)
                return wts * omega.density_at(pts)

            res = _sampling.mc_mean(sample, budget, entropy, chunk)
    else:
        raise WeightError(f"unknown region {region!r}")

    warnings = list(res.warnings)
    if res.value > 0 and res.se > rel_tol * res.value:
        warnings.append(
            f"relative standard error {res.se / res.value:.2e} above target {rel_tol:g}"
        )
    return BallMass(value=res.value, se=res.se, comparator=comparator, n_samples=res.n_samples, warnings=warnings)


@dataclass
class KernelIntegral:
    value: float
    se: float
    proxy: float
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.se))


def kernel_integral(
    omega: RadialWeight,
    a,
    lam: float,
    t: float = 0.0,
    sphere_samples: int = 2 ** 15,
    radial_depth: int = 40,
    batches: int = 8,
    seed: int = DEFAULT_SEED,
) -> KernelIntegral:
    """int_B w(z) (1-|z|^2)^(-t) |1 - <z, a>|^(-(lam n + n)) dV(z).

    Polar decomposition: a deterministic dyadically refined radial rule times
    a seeded Monte Carlo average over the sphere factor. Also returns the
    boundary-scale proxy hat(|a|) / (1-|a|)^(lam n + t). Divergent regimes
    are flagged (tail contributions growing dyadically), never rejected.
    """
    a = geometry.ensure_interior(a, "a")
    n = omega.n
    mod_a = float(np.sqrt(geometry.norm_sq(a)))
    exponent = lam * n + n
    warnings = []
    lam0 = lambda0_estimate(omega)
    if lam <= lam0:
        warnings.append(f"lambda={lam:g} at or below operational lambda0={lam0:g}; out of theory")
    diag = omega.diagnostics()
    if t != 0.0 and t >= diag.lambda_est:
        warnings.append(
            f"t={t:g} >= fitted lower exponent {diag.lambda_est:.3g}; integral may diverge"
        )

    nodes, wts = _sampling.radial_rule(depth=radial_depth, order=12)
    radial_factor = (
        2.0 * n * nodes ** (2 * n - 1) * omega.density(nodes)
        * np.power(np.clip(1.0 - nodes * nodes, 1e-300, None), -t)
    )
    x = nodes * mod_a

    entropy = _sampling.stream_entropy(seed, "kernel", n, a, float(lam), float(t))
    per_batch = max(1, sphere_samples // batches)
    batch_vals = []
    for b in range(batches):
        rng = _sampling.chunk_rng(entropy, b)
        g = np.zeros_like(nodes)
        done = 0
        while done < per_batch:
            m = min(4096, per_batch - done)
            u = _sampling.sphere_first_coordinate(rng, m, n)
            zu = x[:, None] * u[None, :]
            vals = 0.5 * (
                np.abs(1.0 - zu) ** (-exponent) + np.abs(1.0 + zu) ** (-exponent)
            )
            g += vals.sum(axis=1)
            done += m
        g /= per_batch
        batch_vals.append(float(np.sum(wts * radial_factor * g)))
    batch_vals = np.asarray(batch_vals)
    value = float(batch_vals.mean())
    se = float(batch_vals.std(ddof=1) / np.sqrt(batches)) if batches > 1 else 0.0

    # tail-divergence detector on the deterministic radial part
    tail = wts * radial_factor * np.power(np.clip(1.0 - x, 1e-300, None), -exponent)
    seg = tail.reshape(-1, 12).sum(axis=1)
    last = seg[-4:]
    if np.all(np.diff(last) > 0) and last[-1] > 10.0 * max(last[0], 1e-300):
        warnings.append("divergent-tail: dyadic radial contributions still growing")

    proxy = float(omega.hat(mod_a) / (1.0 - mod_a) ** (lam * n + t))
    return KernelIntegral(value=value, se=se, proxy=proxy, warnings=warnings)
