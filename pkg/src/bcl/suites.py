"""Invariant batteries for the geometry, weights, and lattice layers.

Each runner exercises a module's documented invariants at a configurable
sample scale and returns a plain dict of recorded numbers plus per-check
pass flags, ready for JSON reports. Empirical comparability constants are
logged, never silently thresholded.
"""
from __future__ import annotations

import numpy as np

from . import _sampling, geometry, lattice as lattice_mod, weights as weights_mod

SEED = 20240601
# default tolerance constants, mirrored in the acceptance tests
INVARIANCE_TOL = 1e-10
MEMBERSHIP_BAND = geometry.MEMBERSHIP_BAND
DOUBLING_REL_TOL = 0.02
TWISTED_RATIO_WINDOW = 8.0
KERNEL_SLOPE_TOL = 0.1
BALL_COMP_WINDOW = 64.0


def _random_interior(rng, m, n, radius=0.98):
    return _sampling.uniform_ball(rng, m, n) * radius


def run_geometry_suite(n_values=(1, 2, 3), samples: int = 10_000, seed: int = SEED) -> dict:
    """Mobius invariance, involution, membership agreement, comparability,
    and tube containment, at the stated tolerances."""
    out: dict = {"samples": samples, "checks": {}, "constants": {}}
    ok_all = True
    for n in n_values:
        rng = _sampling.chunk_rng(_sampling.stream_entropy(seed, "geom", n), 0)
        A = _random_interior(rng, samples, n)
        Z = _random_interior(rng, samples, n)
        Wp = _random_interior(rng, samples, n)

        moved_z = geometry._mobius_raw(A, Z)
        moved_w = geometry._mobius_raw(A, Wp)
        lhs = np.sqrt(geometry.norm_sq(geometry._mobius_raw(moved_z, moved_w)))
        rhs = np.sqrt(geometry.norm_sq(geometry._mobius_raw(Z, Wp)))
        invariance_err = float(np.max(np.abs(lhs - rhs)))

        involution_err = float(np.max(np.abs(geometry._mobius_raw(A, moved_z) - Z)))

        radii = 0.2 + 1.3 * rng.random(samples)
        R = np.tanh(radii)
        zsq = geometry.norm_sq(Z)
        den = 1.0 - R * R * zsq
        beta = np.arctanh(np.minimum(np.sqrt(geometry.norm_sq(geometry._mobius_raw(Z, Wp))), 1 - 1e-16))
        comp = np.sum(Wp * np.conj(Z), axis=-1)
        zmod = np.sqrt(np.maximum(zsq, 1e-300))
        direction = Z / zmod[:, None]
        along = np.sum(Wp * np.conj(direction), axis=-1)
        p_part = along[:, None] * direction
        q_part = Wp - p_part
        c_mod = (1.0 - R * R) * zmod / den
        s = (1.0 - zsq) / den
        val = np.abs(along - c_mod) ** 2 / (s * R) ** 2 + geometry.norm_sq(q_part) / (s * R ** 2)
        member_ellipsoid = val < 1.0
        member_metric = beta < radii
        off_band = np.abs(beta - radii) > MEMBERSHIP_BAND
        disagreements = int(np.sum((member_ellipsoid != member_metric) & off_band))

        inside = member_metric
        one_minus_z = 1.0 - zmod
        one_minus_w = 1.0 - np.sqrt(geometry.norm_sq(Wp))
        pairing = np.abs(1.0 - comp)
        ratios1 = (one_minus_z / np.maximum(one_minus_w, 1e-300))[inside]
        ratios2 = (one_minus_z / np.maximum(pairing, 1e-300))[inside]
        comparability = {
            "size_ratio_min": float(ratios1.min()),
            "size_ratio_max": float(ratios1.max()),
            "pairing_ratio_min": float(ratios2.min()),
            "pairing_ratio_max": float(ratios2.max()),
        }

        out["checks"][f"n={n}"] = {
            "invariance_err": invariance_err,
            "involution_err": involution_err,
            "membership_disagreements": disagreements,
            "invariance_ok": invariance_err < INVARIANCE_TOL,
            "involution_ok": involution_err < INVARIANCE_TOL,
            "membership_ok": disagreements == 0,
        }
        out["constants"][f"n={n}"] = comparability
        ok_all &= out["checks"][f"n={n}"]["invariance_ok"]
        ok_all &= out["checks"][f"n={n}"]["involution_ok"]
        ok_all &= out["checks"][f"n={n}"]["membership_ok"]

    # tube containment on an admissible (t, r) grid: the tube width
    # 2 (1-t) / (1 - atanh(r)) must be positive, so r stays below tanh(1)
    violations = 0
    tested = 0
    rng = _sampling.chunk_rng(_sampling.stream_entropy(seed, "tube"), 0)
    for n in n_values:
        e1 = np.zeros(n, dtype=complex)
        e1[0] = 1.0
        for t in (0.3, 0.6, 0.9, 0.99):
            for r in (0.2, 0.4, 0.6, 0.7):
                delta = 2.0 * (1.0 - t) / (1.0 - np.arctanh(r))
                ball = geometry.bergman_ball(t * e1, np.arctanh(r))
                frame = np.eye(n, dtype=complex)
                pts = _sampling.ellipsoid_points(rng, 800, ball, frame)
                inside_tube = geometry.carleson_tube_contains(e1, delta, pts)
                violations += int(np.sum(~inside_tube))
                tested += pts.shape[0]
    out["checks"]["tube_containment"] = {
        "violations": violations,
        "tested": tested,
        "ok": violations == 0,
    }
    ok_all &= violations == 0
    out["passed"] = bool(ok_all)
    return out


def run_weights_suite(alphas=(0.0, 1.0, 2.0), n: int = 1, seed: int = SEED, budget: int = 2 ** 13) -> dict:
    """Doubling limits, twisted-weight comparability, block/ball masses, and
    kernel-integral flatness for the standard weight family."""
    out: dict = {"checks": {}, "passed": True}
    deep = 1.0 - 2.0 ** -20

    for alpha in alphas:
        w = weights_mod.StandardAlpha(alpha, n=n)
        entry: dict = {}

        ratio = float(w.hat(deep) / w.hat((1.0 + deep) / 2.0))
        target = 2.0 ** (alpha + 1.0)
        entry["doubling_ratio"] = ratio
        entry["doubling_target"] = target
        entry["doubling_ok"] = abs(ratio - target) <= DOUBLING_REL_TOL * target

        tw = weights_mod.twisted_weight(w)
        grid = np.concatenate([np.linspace(0.0, 0.9, 19), 1.0 - np.geomspace(0.1, 0.001, 13)])
        tw_ratio = np.asarray(tw.hat(grid), dtype=float) / np.asarray(w.hat(grid), dtype=float)
        entry["twisted_ratio_min"] = float(tw_ratio.min())
        entry["twisted_ratio_max"] = float(tw_ratio.max())
        entry["twisted_ok"] = bool(
            tw_ratio.min() > 1.0 / TWISTED_RATIO_WINDOW and tw_ratio.max() < TWISTED_RATIO_WINDOW
        )

        comp_ratios = []
        for mod in (0.0, 0.5, 0.9, 0.99):
            a = np.zeros(n, dtype=complex)
            a[0] = mod
            bm = weights_mod.ball_mass(w, a, r=0.5, budget=budget, seed=seed)
            comp_ratios.append(bm.value / max(bm.comparator, 1e-300))
        entry["ball_comparator_min"] = float(min(comp_ratios))
        entry["ball_comparator_max"] = float(max(comp_ratios))
        entry["ball_comparator_ok"] = bool(
            min(comp_ratios) > 1.0 / BALL_COMP_WINDOW and max(comp_ratios) < BALL_COMP_WINDOW
        )

        lam0 = weights_mod.lambda0_estimate(w)
        slopes = {}
        mods = np.array([0.5, 0.65, 0.8, 0.9, 0.95, 0.99])
        for dlam in (0.05, 0.3):
            lam = lam0 + dlam
            ratios = []
            for mod in mods:
                a = np.zeros(n, dtype=complex)
                a[0] = mod
                ki = weights_mod.kernel_integral(w, a, lam=lam, sphere_samples=budget, seed=seed)
                ratios.append(ki.value / ki.proxy)
            slope = float(np.polyfit(np.log(1.0 - mods), np.log(ratios), 1)[0])
            slopes[f"lambda={lam:.3f}"] = slope
        entry["kernel_slopes"] = slopes
        entry["kernel_ok"] = bool(all(abs(s) < KERNEL_SLOPE_TOL for s in slopes.values()))

        ok = all(entry[k] for k in ("doubling_ok", "twisted_ok", "ball_comparator_ok", "kernel_ok"))
        out["checks"][f"alpha={alpha:g}"] = entry
        out["passed"] = bool(out["passed"] and ok)
    return out


def run_lattice_suite(
    configs=((1, 0.3, 0.9), (1, 0.6, 0.9), (1, 1.0, 0.9), (2, 0.6, 0.85)),
    covering_samples: int = 100_000,
    seed: int = SEED,
) -> dict:
    """Covering / separation / multiplicity for a panel of lattices plus a
    decomposition cross-check against exhaustive assignment on a tiny input."""
    out: dict = {"lattices": {}, "passed": True}
    for n, r, trunc in configs:
        lat = lattice_mod.build_lattice(r, trunc, n, seed=seed)
        misses, worst = lattice_mod.covering_misses(lat.points, r, trunc, n, samples=covering_samples, seed=seed + 5)
        min_beta = lattice_mod.min_pairwise_beta(lat.points)
        entry = {
            "size": len(lat),
            "covering_misses": misses,
            "worst_gap_rho": worst,
            "min_pairwise_beta": min_beta,
            "separation_ok": bool(min_beta >= r / 4.0),
            "covering_ok": misses == 0,
            "multiplicity": lat.multiplicity_bound,
        }
        out["lattices"][f"n={n},r={r:g},trunc={trunc:g}"] = entry
        out["passed"] = bool(out["passed"] and entry["separation_ok"] and entry["covering_ok"])

    seq = np.array([[0.9], [0.91], [0.99]], dtype=complex)
    dec = lattice_mod.decompose_separated(seq, N=1.2, r=0.05, M=2, R_out=0.05)
    union = np.sort(np.concatenate([g for g in dec.groups if g.size]))
    partition_ok = bool(np.array_equal(union, np.arange(seq.shape[0])))
    out["decomposition"] = {
        "groups": [g.tolist() for g in dec.groups],
        "partition_ok": partition_ok,
        "exclusion_radius": dec.exclusion_radius,
        "candidate_formulas": dec.candidate_formulas,
    }
    out["passed"] = bool(out["passed"] and partition_ok)
    return out
