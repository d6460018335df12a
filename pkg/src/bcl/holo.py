"""Holomorphic test functions, their norms, and operator images.

Function objects evaluate vectorized over point batches (m, n). Complex
powers use the principal branch throughout; kernel bases 1 - <z, a> have
positive real part for interior arguments, so the branch cut is never hit.

Norms follow a polar decomposition: a deterministic dyadically refined
radial rule times a seeded Monte Carlo average over spheres. The sphere
cloud depends only on (seed, n, count), so norm ratios across functions and
weights are computed on common samples.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _sampling, geometry
from .measure import DensityMeasure, Measure, SymbolMap, WeightFactor
from .weights import RadialWeight, twisted_weight

DEFAULT_SEED = 20240601
BATTERY_VERSION = "bcl-battery/1"
NEAR_SINGULAR = 1e-14


class HoloError(ValueError):
    pass


class HoloFunction:
    """Base class for holomorphic functions on the ball."""

    n: int

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, pts):
        return self.evaluate(np.atleast_2d(np.asarray(pts, dtype=complex)))

    def label(self) -> str:
        return type(self).__name__


def _principal_power(base: np.ndarray, exponent: float) -> np.ndarray:
    if np.any(np.abs(base) < NEAR_SINGULAR):
        raise HoloError("kernel evaluation too close to its singularity")
    return np.exp(exponent * np.log(base))


class Constant(HoloFunction):
    def __init__(self, c: complex, n: int):
        self.c = complex(c)
        self.n = int(n)

    def evaluate(self, pts):
        return np.full(pts.shape[0], self.c)

    def label(self):
        return f"const({self.c:g})" if self.c.imag == 0 else f"const({self.c})"


class Coordinate(HoloFunction):
    def __init__(self, j: int, n: int):
        if not 1 <= j <= n:
            raise HoloError("coordinate index out of range")
        self.j = int(j)
        self.n = int(n)

    def evaluate(self, pts):
        return pts[:, self.j - 1]

    def label(self):
        return f"z_{self.j}"


class Polynomial(HoloFunction):
    """sum of c_m z^m over multi-indices m."""

    def __init__(self, coeffs: dict, n: int):
        self.coeffs = {tuple(int(k) for k in key): complex(c) for key, c in coeffs.items()}
        for key in self.coeffs:
            if len(key) != n or any(k < 0 for k in key):
                raise HoloError(f"bad multi-index {key}")
        self.n = int(n)

    def evaluate(self, pts):
        out = np.zeros(pts.shape[0], dtype=complex)
        for key, c in self.coeffs.items():
            term = np.full(pts.shape[0], c)
            for j, k in enumerate(key):
                if k:
                    term = term * pts[:, j] ** k
            out += term
        return out

    def label(self):
        return f"poly({len(self.coeffs)} terms)"


class KernelPower(HoloFunction):
    """z -> (1 - <z, a>)^(-s)."""

    def __init__(self, a, s: float):
        self.a = geometry.ensure_interior(a, "a")
        if not s > 0:
            raise HoloError("kernel exponent must be positive")
        self.s = float(s)
        self.n = self.a.shape[0]

    def evaluate(self, pts):
        base = 1.0 - pts @ np.conj(self.a)
        return _principal_power(base, -self.s)

    def label(self):
        return f"kernel(|a|={float(np.sqrt(geometry.norm_sq(self.a))):.3g},s={self.s:g})"


class NormalizedTest(HoloFunction):
    """Kernel power scaled to have A^p norm of order one for every center.

    Holomorphic representative of the boundary bump with modulus
    ((1-|a|^2)/|1-<z,a>|)^((gamma+n)/p) / (hat(a)^(1/p) (1-|a|^2)^(n/p)).
    """

    def __init__(self, a, gamma: float, omega: RadialWeight, p: float):
        self.a = geometry.ensure_interior(a, "a")
        self.n = self.a.shape[0]
        self.gamma = float(gamma)
        self.p = float(p)
        mod = float(np.sqrt(geometry.norm_sq(self.a)))
        self.s = (gamma + self.n) / p
        self.scale = (1.0 - mod * mod) ** (gamma / p) / float(omega.hat(mod)) ** (1.0 / p)

    def evaluate(self, pts):
        base = 1.0 - pts @ np.conj(self.a)
        return self.scale * _principal_power(base, -self.s)

    def label(self):
        return f"bump(|a|={float(np.sqrt(geometry.norm_sq(self.a))):.4g})"


class LatticeSum(HoloFunction):
    """sum_k c_k (1-|a_k|^2)^(t-n/p) hat(a_k)^(-1/p) (1 - <z, b_k>)^(-t).

    Centers a_k set the scaling, evaluation centers b_k the kernel location
    (equal by default). The centers must form a separated sequence.
    """

    def __init__(self, coeffs, centers, t: float, omega: RadialWeight, p: float, eval_centers=None, min_separation: float = 1e-6):
        centers = np.atleast_2d(np.asarray(centers, dtype=complex))
        eval_centers = centers if eval_centers is None else np.atleast_2d(np.asarray(eval_centers, dtype=complex))
        if centers.shape != eval_centers.shape:
            raise HoloError("centers and eval_centers must align")
        coeffs = np.asarray(coeffs, dtype=complex).reshape(centers.shape[0])
        if centers.shape[0] > 1:
            d = geometry.beta_pairwise(centers, centers)
            np.fill_diagonal(d, np.inf)
            if float(d.min()) < min_separation:
                raise HoloError(f"centers are not separated: min beta {float(d.min()):.3g}")
        self.n = centers.shape[1]
        self.t = float(t)
        self.p = float(p)
        self.warnings: list[str] = []
        diag = omega.diagnostics()
        threshold = self.n + (diag.beta_est + diag.lambda_est * self.n + self.n) / p
        if t <= threshold:
            self.warnings.append(
                f"exponent t={t:g} at or below fitted admissibility threshold {threshold:.3g}"
            )
        mods = np.sqrt(np.sum(np.abs(centers) ** 2, axis=1))
        hats = np.asarray(omega.hat(mods), dtype=float)
        self.weights = coeffs * (1.0 - mods ** 2) ** (t - self.n / p) * hats ** (-1.0 / p)
        self.eval_centers = eval_centers

    def evaluate(self, pts):
        out = np.zeros(pts.shape[0], dtype=complex)
        for wk, bk in zip(self.weights, self.eval_centers):
            if wk == 0:
                continue
            base = 1.0 - pts @ np.conj(bk)
            out += wk * _principal_power(base, -self.t)
        return out

    def label(self):
        return f"lattice_sum({self.eval_centers.shape[0]} atoms,t={self.t:g})"


class MeasurableFunction:
    """Pointwise-defined complex function, such as an operator image."""

    def __init__(self, fn, n: int, name: str = "measurable"):
        self.fn = fn
        self.n = int(n)
        self.name = name

    def evaluate(self, pts):
        return np.asarray(self.fn(pts))

    def __call__(self, pts):
        return self.evaluate(np.atleast_2d(np.asarray(pts, dtype=complex)))

    def label(self):
        return self.name


def apply_difference(u: WeightFactor, v: WeightFactor, phi: SymbolMap, psi: SymbolMap, f: HoloFunction) -> MeasurableFunction:
    """z -> u(z) f(phi(z)) - v(z) f(psi(z))."""

    def fn(pts):
        return u.evaluate(pts) * f.evaluate(phi.apply(pts)) - v.evaluate(pts) * f.evaluate(psi.apply(pts))

    return MeasurableFunction(fn, f.n, name=f"(u C_phi - v C_psi){f.label()}")


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

@dataclass
class NormResult:
    value: float
    se: float
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.se))


def bergman_norm(
    f: HoloFunction,
    omega: RadialWeight,
    p: float,
    sphere_samples: int = 2 ** 12,
    radial_depth: int = 36,
    batches: int = 8,
    seed: int = DEFAULT_SEED,
) -> NormResult:
    """(int |f|^p w dV)^(1/p) by radial quadrature times sphere Monte Carlo."""
    if not p > 0:
        raise HoloError("p must be positive")
    n = f.n
    nodes, wts = _sampling.radial_rule(depth=radial_depth, order=12)
    radial_factor = 2.0 * n * nodes ** (2 * n - 1) * np.asarray(omega.density(nodes), dtype=float)

    entropy = _sampling.stream_entropy(seed, "spherenorm", n, sphere_samples)
    per_batch = max(1, sphere_samples // batches)
    batch_integrals = []
    seg_mass = np.zeros(nodes.size // 12)
    for b in range(batches):
        rng = _sampling.chunk_rng(entropy, b)
        g = np.zeros_like(nodes)
        done = 0
        while done < per_batch:
            m = min(2048, per_batch - done)
            xi = _sampling.uniform_sphere(rng, m, n)
            # evaluate on the product grid in radial blocks to bound memory
            for lo in range(0, nodes.size, 128):
                block = nodes[lo : lo + 128]
                pts = (block[:, None, None] * xi[None, :, :]).reshape(-1, n)
                vals = np.abs(f.evaluate(pts)) ** p
                g[lo : lo + 128] += vals.reshape(block.size, m).sum(axis=1)
            done += m
        g /= per_batch
        contrib = wts * radial_factor * g
        seg_mass += contrib.reshape(-1, 12).sum(axis=1) / batches
        batch_integrals.append(float(contrib.sum()))

    batch_integrals = np.asarray(batch_integrals)
    integral = float(batch_integrals.mean())
    warnings = []
    tail = seg_mass[-4:]
    if np.all(np.diff(tail) > 0) and tail[-1] > 2.0 * max(tail[0], 1e-300):
        warnings.append("divergent-tail: radial contributions still growing at the boundary")
    value = integral ** (1.0 / p)
    se_int = float(batch_integrals.std(ddof=1) / np.sqrt(batches)) if batches > 1 else 0.0
    se = se_int / p * integral ** (1.0 / p - 1.0) if integral > 0 else se_int
    return NormResult(value=float(value), se=float(se), warnings=warnings)


def lq_norm(f, mu: Measure, q: float, budget: int = 2 ** 14, seed: int = DEFAULT_SEED, chunk: int = _sampling.DEFAULT_CHUNK) -> NormResult:
    """(int |f|^q dmu)^(1/q) with the measure's seeded integrator."""
    if not q > 0:
        raise HoloError("q must be positive")
    res = mu.integrate(lambda pts: np.abs(f.evaluate(pts)) ** q, budget=budget, seed=seed, chunk=chunk)
    if res.value <= 0:
        return NormResult(value=0.0, se=float(res.se), warnings=list(res.warnings))
    value = res.value ** (1.0 / q)
    se = res.se / q * res.value ** (1.0 / q - 1.0)
    return NormResult(value=float(value), se=float(se), warnings=list(res.warnings))


def make_lattice_sum(coeffs, centers, t: float, omega: RadialWeight, p: float, eval_centers=None) -> LatticeSum:
    return LatticeSum(coeffs, centers, t, omega, p, eval_centers=eval_centers)


def oscillation_ratio(
    f: HoloFunction,
    a,
    b,
    r1: float,
    r2: float,
    omega: RadialWeight,
    p: float,
    q: float,
    budget: int = 2 ** 12,
    seed: int = DEFAULT_SEED,
) -> float:
    """|f(a)-f(b)|^q over the local-growth bound it should obey.

    The denominator is rho(a,b)^q ((1-|a|)^n hat(a))^(-q/p) times the p-mass
    of f against the twisted weight on D(a, r1). Returns 0 when b = a.
    """
    a = geometry.ensure_interior(a, "a")
    b = geometry.ensure_interior(b, "b")
    if not 0 < r2 < r1 < 1:
        raise HoloError("need 0 < r2 < r1 < 1")
    rho = float(geometry.pseudo_distance(a, b))
    beta = float(geometry.bergman_distance(a, b))
    if beta >= r2:
        raise HoloError(f"b must lie in D(a, r2); beta(a,b)={beta:.4g} >= {r2:g}")
    if rho == 0.0:
        return 0.0
    w = twisted_weight(omega)
    dens = DensityMeasure.from_weight(w)
    mass = dens.integrate_over_ball(
        lambda pts: np.abs(f.evaluate(pts)) ** p, a, r1, budget=budget, seed=seed
    )
    mod = float(np.sqrt(geometry.norm_sq(a)))
    scale = ((1.0 - mod) ** f.n * float(omega.hat(mod))) ** (-q / p)
    num = float(np.abs(f.evaluate(a[None, :])[0] - f.evaluate(b[None, :])[0]) ** q)
    den = rho ** q * scale * mass.value
    if den <= 0:
        raise HoloError("degenerate denominator in oscillation ratio")
    return num / den


# ---------------------------------------------------------------------------
# versioned test-function batteries
# ---------------------------------------------------------------------------

def _kernel_directions(n: int) -> list[np.ndarray]:
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    if n == 1:
        return [e1, np.exp(1j * np.pi / 4) * e1]
    e2 = np.zeros(n, dtype=complex)
    e2[1] = 1.0
    return [e1, (e1 + 1j * e2) / np.sqrt(2.0)]


def battery(omega: RadialWeight, p: float, n: int, kind: str = "full") -> list[tuple[str, HoloFunction]]:
    """Versioned finite family standing in for the whole space.

    ``full`` is the norm-equivalence battery (monomials to degree 6, kernels
    at four moduli and two directions, two bump functions, two lattice sums);
    ``compact`` is the smaller operator-check family. Kernels at increasing
    moduli carry the boundary-kernel tag used by consistency checks.
    """
    diag = omega.diagnostics()
    gamma = n * (diag.beta_est + 1.0) + 1.0
    s_kernel = (gamma + n) / p
    t_sum = n + (diag.beta_est + diag.lambda_est * n + n) / p + 0.75

    funcs: list[tuple[str, HoloFunction]] = []
    degrees = range(0, 7) if kind == "full" else range(0, 4)
    for k in degrees:
        key = tuple([k] + [0] * (n - 1))
        funcs.append((f"monomial_deg{k}", Polynomial({key: 1.0}, n)))
    if kind == "full":
        funcs.append(("coordinate", Coordinate(min(2, n), n)))
    if n > 1:
        funcs.append(("monomial_mixed", Polynomial({tuple([1, 1] + [0] * (n - 2)): 1.0}, n)))

    moduli = (0.0, 0.5, 0.9, 0.99)
    directions = _kernel_directions(n)
    for mod in moduli:
        for di, direction in enumerate(directions if kind == "full" else directions[:1]):
            a = mod * direction
            funcs.append((f"kernel|a|={mod}/d{di}", KernelPower(a, s_kernel) if mod > 0 else Constant(1.0, n)))

    e1 = directions[0]
    for mod in ((0.6, 0.95) if kind == "full" else (0.9,)):
        funcs.append((f"bump|a|={mod}", NormalizedTest(mod * e1, gamma, omega, p)))

    c1 = np.stack([0.5 * e1, -0.5 * e1])
    c2 = np.stack([0.3 * e1, 0.85 * e1, -0.7 * e1])
    funcs.append(("lattice_sum_2", LatticeSum([1.0, 0.5], c1, t_sum, omega, p)))
    if kind == "full":
        funcs.append(("lattice_sum_3", LatticeSum([1.0, -0.75, 0.4], c2, t_sum, omega, p)))
    return funcs


def boundary_kernel_names(funcs) -> list[str]:
    return [name for name, _ in funcs if name.startswith("kernel|a|=") and not name.startswith("kernel|a|=0.0")]
