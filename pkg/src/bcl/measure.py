"""Declarative positive Borel measures on the ball and seeded integration.

A measure is one of: a density against normalized volume, a pushforward of
another measure under a holomorphic self-map (with a nonnegative factor), a
restriction to a region, or a finite sum. Integration against pushforwards
always composes through the forward map; nothing is ever inverted.

The composite measures used by the operator criteria are built here from a
symbol pair (phi, psi) and Borel weights (u, v): the distance-weighted
pullback eta, the region-restricted difference pullback sigma_r, and the
kernel-twisted quantity R_{s,r,q}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _sampling, geometry
from ._sampling import DEFAULT_CHUNK, IntegralResult
from .weights import RadialWeight

DEFAULT_SEED = 20240601
CERT_SAMPLES = 10_000
CERT_SEED = 987654321
# samples with |1 - <b, psi(z)>| below this are boundary contacts and get
# rejected (counted, contribute zero)
CONTACT_TOL = 1e-14


class MeasureError(ValueError):
    pass


# ---------------------------------------------------------------------------
# holomorphic self-maps
# ---------------------------------------------------------------------------

class SymbolMap:
    """Base class for holomorphic self-maps of the ball."""

    n: int

    def apply(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_identity(self) -> bool:
        return False

    def label(self) -> str:
        return type(self).__name__

    def _certify(self):
        """Empirical self-map certificate over a fixed sample cloud."""
        rng = _sampling.chunk_rng(_sampling.stream_entropy(CERT_SEED, "cert", self.n), 0)
        pts = _sampling.uniform_ball(rng, CERT_SAMPLES, self.n)
        image = self.apply(pts)
        sup = float(np.sqrt(np.sum(np.abs(image) ** 2, axis=1)).max())
        if sup > 1.0 + 1e-9:
            raise MeasureError(f"{self.label()} is not a self-map: sup |phi| = {sup:.6f}")
        self.sup_modulus = sup


class IdentityMap(SymbolMap):
    def __init__(self, n: int):
        self.n = int(n)
        self.sup_modulus = 1.0

    def apply(self, pts):
        return pts

    def is_identity(self) -> bool:
        return True

    def label(self):
        return "identity"


class DilationMap(SymbolMap):
    """z -> lam z with |lam| <= 1."""

    def __init__(self, lam: complex, n: int):
        if abs(lam) > 1.0 + 1e-12:
            raise MeasureError("dilation factor must satisfy |lam| <= 1")
        self.lam = complex(lam)
        self.n = int(n)
        self.sup_modulus = abs(lam)

    def apply(self, pts):
        return self.lam * pts

    def label(self):
        return f"dilation({self.lam:g})" if self.lam.imag == 0 else f"dilation({self.lam})"


class AffineMap(SymbolMap):
    def __init__(self, matrix, offset, n: int):
        self.matrix = np.asarray(matrix, dtype=complex).reshape(n, n)
        self.offset = np.asarray(offset, dtype=complex).reshape(n)
        self.n = int(n)
        self._certify()

    def apply(self, pts):
        return pts @ self.matrix.T + self.offset

    def label(self):
        return "affine"


class AutomorphismMap(SymbolMap):
    """z -> U phi_a(z): a Mobius swap followed by a unitary rotation."""

    def __init__(self, a, unitary=None, n: int | None = None):
        a = geometry.ensure_interior(a, "a")
        self.a = a
        self.n = a.shape[0] if n is None else int(n)
        self.unitary = np.eye(self.n, dtype=complex) if unitary is None else np.asarray(unitary, dtype=complex)
        if not np.allclose(self.unitary @ self.unitary.conj().T, np.eye(self.n), atol=1e-10):
            raise MeasureError("rotation matrix must be unitary")
        self._certify()

    def apply(self, pts):
        return geometry._mobius_raw(self.a, pts) @ self.unitary.T

    def label(self):
        return "automorphism"


class CompositeMap(SymbolMap):
    def __init__(self, maps):
        if not maps:
            raise MeasureError("composite of no maps")
        self.maps = list(maps)
        self.n = self.maps[0].n
        self._certify()

    def apply(self, pts):
        for m in self.maps:
            pts = m.apply(pts)
        return pts

    def label(self):
        return "o".join(m.label() for m in self.maps)


def rho_of_symbols(phi: SymbolMap, psi: SymbolMap, pts: np.ndarray) -> np.ndarray:
    """Pointwise pseudohyperbolic distance between the two symbol images.

    Uses the algebraic identity for rho^2; image points may touch the
    boundary, where the clipped formula degrades gracefully.
    """
    zp = phi.apply(pts)
    zq = psi.apply(pts)
    same = np.sum(np.abs(zp - zq) ** 2, axis=-1) < 1e-28
    gram = np.sum(zp * np.conj(zq), axis=-1)
    den = np.abs(1.0 - gram) ** 2
    num = (1.0 - np.sum(np.abs(zp) ** 2, axis=-1)) * (1.0 - np.sum(np.abs(zq) ** 2, axis=-1))
    rho_sq = 1.0 - num / np.maximum(den, 1e-300)
    rho = np.sqrt(np.clip(rho_sq, 0.0, 1.0))
    return np.where(same, 0.0, rho)


# ---------------------------------------------------------------------------
# Borel weight factors
# ---------------------------------------------------------------------------

class WeightFactor:
    """Nonnegative Borel weight on the ball with an empirical sup certificate."""

    def __init__(self, fn, n: int, name: str = "factor"):
        self.fn = fn
        self.n = int(n)
        self.name = name
        rng = _sampling.chunk_rng(_sampling.stream_entropy(CERT_SEED, "factor", n), 0)
        pts = _sampling.uniform_ball(rng, CERT_SAMPLES, n)
        vals = np.asarray(fn(pts), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise MeasureError(f"weight factor {name} must be finite and nonnegative")
        self.sup_estimate = float(vals.max()) if vals.size else 0.0

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(pts), dtype=float)

    @staticmethod
    def const(c: float, n: int) -> "WeightFactor":
        if c < 0:
            raise MeasureError("constant weight must be nonnegative")
        return WeightFactor(lambda pts: np.full(pts.shape[0], float(c)), n, name=f"const({c:g})")

    @staticmethod
    def zero(n: int) -> "WeightFactor":
        return WeightFactor(lambda pts: np.zeros(pts.shape[0]), n, name="zero")

    @staticmethod
    def boundary_power(exponent: float, n: int) -> "WeightFactor":
        def fn(pts):
            mod = np.sqrt(np.sum(np.abs(pts) ** 2, axis=-1))
            return np.clip(1.0 - mod, 1e-300, None) ** exponent
        return WeightFactor(fn, n, name=f"(1-|z|)^{exponent:g}")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

class Measure:
    n: int

    def label(self) -> str:
        return type(self).__name__

    def _integrand_on_ball(self, pts: np.ndarray, f) -> np.ndarray:
        """Density of ``f d(mu)`` against samples uniform in the ball."""
        raise NotImplementedError

    def integrate(self, f, budget: int = 2 ** 14, seed: int = DEFAULT_SEED, chunk: int = DEFAULT_CHUNK) -> IntegralResult:
        """Seeded Monte Carlo integral of f against this measure."""
        entropy = _sampling.stream_entropy(seed, "integrate", self.n)

        def sample(rng, m):
            pts = _sampling.uniform_ball(rng, m, self.n)
            return self._integrand_on_ball(pts, f)

        return _sampling.mc_mean(sample, budget, entropy, chunk)

    def ball_measure(self, a, r: float, budget: int = 2 ** 14, seed: int = DEFAULT_SEED, chunk: int = DEFAULT_CHUNK) -> IntegralResult:
        """Mass mu(D(a, r)) of a Bergman metric ball."""
        raise NotImplementedError

    def total_mass(self, budget: int = 2 ** 14, seed: int = DEFAULT_SEED) -> IntegralResult:
        return self.integrate(lambda pts: np.ones(pts.shape[0]), budget=budget, seed=seed)


def _ball_stream(seed: int, a: np.ndarray, r: float):
    """Shared ellipsoid sample stream identity for D(a, r).

    Keyed only by (seed, center, radius): all density-type ball masses with
    identical arguments consume identical points, making single-integrator
    ratios exact.
    """
    return _sampling.stream_entropy(seed, "ballstream", a, float(r))


class DensityMeasure(Measure):
    """g(z) dV(z) for a nonnegative evaluator g (normalized volume)."""

    def __init__(self, g, n: int, name: str = "density"):
        self.g = g
        self.n = int(n)
        self.name = name

    @staticmethod
    def from_weight(omega: RadialWeight, extra=None, name: str | None = None) -> "DensityMeasure":
        if extra is None:
            return DensityMeasure(omega.density_at, omega.n, name or omega.label())
        return DensityMeasure(
            lambda pts: omega.density_at(pts) * extra.evaluate(pts),
            omega.n,
            name or f"{extra.name}*{omega.label()}",
        )

    def label(self):
        return self.name

    def _integrand_on_ball(self, pts, f):
        base = np.asarray(self.g(pts), dtype=float)
        if f is None:
            return base
        return base * np.asarray(f(pts))

    def ball_measure(self, a, r, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        a = geometry.as_point(a)
        ball = geometry.bergman_ball(a, r)
        mod = float(np.sqrt(geometry.norm_sq(a)))
        frame = geometry.unitary_frame(a) if mod > 0 else np.eye(self.n, dtype=complex)
        entropy = _ball_stream(seed, a, r)

        def sample(rng, m):
            pts = _sampling.ellipsoid_points(rng, m, ball, frame)
            return np.asarray(self.g(pts), dtype=float)

        return _sampling.mc_mean(sample, budget, entropy, chunk).scaled(ball.normalized_volume)

    def integrate_over_ball(self, f, a, r, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        """int_{D(a,r)} f g dV via uniform sampling of the ellipsoid."""
        a = geometry.as_point(a)
        ball = geometry.bergman_ball(a, r)
        mod = float(np.sqrt(geometry.norm_sq(a)))
        frame = geometry.unitary_frame(a) if mod > 0 else np.eye(self.n, dtype=complex)
        entropy = _ball_stream(seed, a, r)

        def sample(rng, m):
            pts = _sampling.ellipsoid_points(rng, m, ball, frame)
            return np.asarray(self.g(pts), dtype=float) * np.asarray(f(pts))

        return _sampling.mc_mean(sample, budget, entropy, chunk).scaled(ball.normalized_volume)


class PushforwardMeasure(Measure):
    """(factor d base) o map^{-1}; integration composes through the map.

    The integrand f is pulled back as f(map(.)), the factor stays on the base
    side, and the recursion keeps both straight for nested pushforwards.
    """

    def __init__(self, base: Measure, map_: SymbolMap, factor: WeightFactor | None = None, name: str | None = None):
        if factor is not None and factor.n != base.n:
            raise MeasureError("factor dimension mismatch")
        self.base = base
        self.map = map_
        self.factor = factor
        self.n = base.n
        self.name = name

    def label(self):
        return self.name or f"({self.base.label()} via {self.map.label()})"

    def _integrand_on_ball(self, pts, f):
        if f is None and self.factor is None:
            return self.base._integrand_on_ball(pts, None)

        def g(p):
            out = self.factor.evaluate(p) if self.factor is not None else np.ones(p.shape[0])
            if f is not None:
                out = out * np.asarray(f(self.map.apply(p)))
            return out

        return self.base._integrand_on_ball(pts, g)

    def ball_measure(self, a, r, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        a = geometry.as_point(a)
        if self.map.is_identity() and isinstance(self.base, DensityMeasure):
            # identity pushforward of a density is a density; keep the exact
            # ellipsoid sampler
            fac = self.factor
            dens = DensityMeasure(
                (lambda pts: self.base.g(pts) * fac.evaluate(pts)) if fac is not None else self.base.g,
                self.n,
            )
            return dens.ball_measure(a, r, budget=budget, seed=seed, chunk=chunk)
        ball = geometry.bergman_ball(a, r)
        return self.integrate(
            lambda pts: np.asarray(geometry.ellipsoid_contains(ball, pts), dtype=float),
            budget=budget,
            seed=seed,
            chunk=chunk,
        )


class RestrictionMeasure(Measure):
    def __init__(self, base: Measure, predicate, name: str | None = None):
        self.base = base
        self.predicate = predicate
        self.n = base.n
        self.name = name

    def label(self):
        return self.name or f"restrict({self.base.label()})"

    def _integrand_on_ball(self, pts, f):
        def g(p):
            mask = np.asarray(self.predicate(p), dtype=float)
            return mask if f is None else mask * np.asarray(f(p))

        return self.base._integrand_on_ball(pts, g)

    def ball_measure(self, a, r, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        if isinstance(self.base, DensityMeasure):
            return self.base.integrate_over_ball(
                lambda pts: np.asarray(self.predicate(pts), dtype=float), a, r, budget=budget, seed=seed, chunk=chunk
            )
        a = geometry.as_point(a)
        ball = geometry.bergman_ball(a, r)
        return self.integrate(
            lambda pts: np.asarray(geometry.ellipsoid_contains(ball, pts), dtype=float),
            budget=budget,
            seed=seed,
            chunk=chunk,
        )


class SumMeasure(Measure):
    def __init__(self, parts, n: int | None = None, name: str | None = None):
        self.parts = list(parts)
        if not self.parts and n is None:
            raise MeasureError("empty sum needs an explicit dimension")
        self.n = self.parts[0].n if self.parts else int(n)
        self.name = name

    def label(self):
        return self.name or ("zero" if not self.parts else " + ".join(p.label() for p in self.parts))

    def _integrand_on_ball(self, pts, f):
        if not self.parts:
            return np.zeros(pts.shape[0])
        total = self.parts[0]._integrand_on_ball(pts, f)
        for p in self.parts[1:]:
            total = total + p._integrand_on_ball(pts, f)
        return total

    @staticmethod
    def _combine(results) -> IntegralResult:
        value = sum(r.value for r in results)
        se = float(np.sqrt(sum(r.se ** 2 for r in results)))
        warnings = [w for r in results for w in r.warnings]
        return IntegralResult(
            value=value,
            se=se,
            n_samples=sum(r.n_samples for r in results),
            rejected=sum(r.rejected for r in results),
            warnings=warnings,
        )

    def integrate(self, f, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        if not self.parts:
            return IntegralResult(0.0, 0.0, 0)
        return super().integrate(f, budget=budget, seed=seed, chunk=chunk)

    def ball_measure(self, a, r, budget=2 ** 14, seed=DEFAULT_SEED, chunk=DEFAULT_CHUNK) -> IntegralResult:
        if not self.parts:
            return IntegralResult(0.0, 0.0, 0)
        return self._combine([p.ball_measure(a, r, budget=budget, seed=seed, chunk=chunk) for p in self.parts])


# ---------------------------------------------------------------------------
# mean function and operator measures
# ---------------------------------------------------------------------------

@dataclass
class MeanValue:
    value: float
    se: float
    numerator: IntegralResult
    denominator: IntegralResult


def mean_function(
    mu: Measure,
    omega: RadialWeight,
    r: float,
    s: float,
    a,
    budget: int = 2 ** 14,
    seed: int = DEFAULT_SEED,
    chunk: int = DEFAULT_CHUNK,
) -> MeanValue:
    """Weighted mean mu(D(a,r)) / omega(D(a,r))^s.

    Numerator and denominator share the ellipsoid sample stream whenever both
    are density-type, so mu = (c omega) dV gives exactly c at s = 1.
    """
    if not s > 0:
        raise MeasureError("exponent s must be positive")
    num = mu.ball_measure(a, r, budget=budget, seed=seed, chunk=chunk)
    den = DensityMeasure.from_weight(omega).ball_measure(a, r, budget=budget, seed=seed, chunk=chunk)
    if den.value < 1e-300:
        raise MeasureError("weight mass of the ball underflowed")
    value = num.value / den.value ** s
    rel = 0.0
    if num.value > 0:
        rel += (num.se / num.value) ** 2
    if den.value > 0:
        rel += (s * den.se / den.value) ** 2
    return MeanValue(value=float(value), se=float(abs(value) * np.sqrt(rel)), numerator=num, denominator=den)


@dataclass
class OperatorMeasures:
    """Composite pullback measures attached to one symbol configuration."""

    eta: SumMeasure
    eta_phi: PushforwardMeasure
    eta_psi: PushforwardMeasure
    sigma: SumMeasure
    sigma_phi: PushforwardMeasure
    sigma_psi: PushforwardMeasure

    def one_sided(self, side: str) -> SumMeasure:
        if side == "phi":
            return SumMeasure([self.eta_phi, self.eta_psi, self.sigma_phi], name="eta+sigma_phi")
        if side == "psi":
            return SumMeasure([self.eta_phi, self.eta_psi, self.sigma_psi], name="eta+sigma_psi")
        raise MeasureError("side must be 'phi' or 'psi'")

    def total(self) -> SumMeasure:
        return SumMeasure(
            [self.eta_phi, self.eta_psi, self.sigma_phi, self.sigma_psi], name="eta+sigma"
        )


def build_eta(phi: SymbolMap, psi: SymbolMap, u: WeightFactor, v: WeightFactor, mu: Measure, q: float) -> SumMeasure:
    """eta = (|rho u|^q dmu) o phi^{-1} + (|rho v|^q dmu) o psi^{-1}."""
    if not q > 0:
        raise MeasureError("q must be positive")

    def eta_factor(w: WeightFactor) -> WeightFactor:
        def fn(pts):
            rho = rho_of_symbols(phi, psi, pts)
            return (rho * w.evaluate(pts)) ** q
        return WeightFactor(fn, mu.n, name=f"(rho*{w.name})^{q:g}")

    part_phi = PushforwardMeasure(mu, phi, eta_factor(u), name="eta_phi_u")
    part_psi = PushforwardMeasure(mu, psi, eta_factor(v), name="eta_psi_v")
    return SumMeasure([part_phi, part_psi], name="eta")


def build_sigma(phi: SymbolMap, psi: SymbolMap, u: WeightFactor, v: WeightFactor, mu: Measure, q: float, r: float) -> SumMeasure:
    """sigma_r, the |u-v|^q pullbacks restricted to the proximity set G_r."""
    if not (0 < r < 1):
        raise MeasureError("sigma radius must lie in (0, 1)")
    if not q > 0:
        raise MeasureError("q must be positive")

    def sigma_factor() -> WeightFactor:
        def fn(pts):
            rho = rho_of_symbols(phi, psi, pts)
            diff = np.abs(u.evaluate(pts) - v.evaluate(pts)) ** q
            return np.where(rho < r, diff, 0.0)
        return WeightFactor(fn, mu.n, name=f"chi_G|u-v|^{q:g}")

    part_phi = PushforwardMeasure(mu, phi, sigma_factor(), name="sigma_phi")
    part_psi = PushforwardMeasure(mu, psi, sigma_factor(), name="sigma_psi")
    return SumMeasure([part_phi, part_psi], name="sigma_r")


def operator_measures(phi, psi, u, v, mu, q: float, r: float) -> OperatorMeasures:
    eta = build_eta(phi, psi, u, v, mu, q)
    sigma = build_sigma(phi, psi, u, v, mu, q, r)
    return OperatorMeasures(
        eta=eta,
        eta_phi=eta.parts[0],
        eta_psi=eta.parts[1],
        sigma=sigma,
        sigma_phi=sigma.parts[0],
        sigma_psi=sigma.parts[1],
    )


@dataclass
class RQuantity:
    value: float
    se: float
    rejected_fraction: float


def r_quantity(
    phi: SymbolMap,
    psi: SymbolMap,
    u: WeightFactor,
    v: WeightFactor,
    mu: Measure,
    s: float,
    r: float,
    q: float,
    a,
    b,
    budget: int = 2 ** 14,
    seed: int = DEFAULT_SEED,
    chunk: int = DEFAULT_CHUNK,
) -> RQuantity:
    """int over phi^{-1}(D(a, r)) of |u - v Q_b^s|^q dmu.

    Q_b(z) = (1 - <b, phi(z)>) / (1 - <b, psi(z)>), principal power. Samples
    with boundary contact in the denominator are rejected and counted.
    """
    a = geometry.as_point(a)
    b = geometry.ensure_interior(b, "b")
    ball = geometry.bergman_ball(a, r)

    def core(pts, chi):
        zp = phi.apply(pts)
        zq = psi.apply(pts)
        num = 1.0 - np.sum(zp * np.conj(b), axis=-1)
        den = 1.0 - np.sum(zq * np.conj(b), axis=-1)
        bad = np.abs(den) < CONTACT_TOL
        den = np.where(bad, 1.0, den)
        qb = num / den
        qb_s = np.exp(s * np.log(qb))
        vals = chi * np.abs(u.evaluate(pts) - v.evaluate(pts) * qb_s) ** q
        return np.where(bad, np.nan, vals)

    if phi.is_identity() and isinstance(mu, DensityMeasure):
        # the domain of integration is exactly D(a, r); sample it directly
        res = mu.integrate_over_ball(lambda pts: core(pts, 1.0), a, r, budget=budget, seed=seed, chunk=chunk)
    else:
        def f_all(pts):
            chi = np.asarray(geometry.ellipsoid_contains(ball, phi.apply(pts)), dtype=float)
            return core(pts, chi)

        res = mu.integrate(f_all, budget=budget, seed=seed, chunk=chunk)
    return RQuantity(value=res.value, se=res.se, rejected_fraction=res.rejected / max(1, res.n_samples))
