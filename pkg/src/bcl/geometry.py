"""Mobius geometry of the complex unit ball.

Points are numpy arrays of ``n`` complex coordinates. Every operation accepts
a single point ``(n,)`` or a batch ``(m, n)`` and broadcasts along leading
axes. The inner product is linear in the first slot and conjugate-linear in
the second, ``inner(z, w) = sum_j z_j * conj(w_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Interior points keep this margin to the boundary, so denominators of the
# form 1 - <z, a> stay bounded away from zero.
INTERIOR_MARGIN = 1e-12
# Tolerance for |xi| = 1 when validating boundary points.
BOUNDARY_TOL = 1e-12
# Width of the band around beta(z, w) = r inside which ellipsoid membership
# and metric membership are allowed to disagree.
MEMBERSHIP_BAND = 1e-9


class GeometryError(ValueError):
    """Raised when a point violates an operation's domain."""


def as_point(z) -> np.ndarray:
    """Coerce scalars / sequences to a complex coordinate array."""
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def inner(z, w) -> np.ndarray | complex:
    """Hermitian inner product along the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def norm_sq(z) -> np.ndarray | float:
    return np.sum(np.abs(np.asarray(z)) ** 2, axis=-1)


def ensure_interior(z, name: str = "point") -> np.ndarray:
    z = as_point(z)
    if np.any(np.sqrt(norm_sq(z)) >= 1.0 - INTERIOR_MARGIN):
        raise GeometryError(
            f"{name} must lie strictly inside the unit ball "
            f"(margin {INTERIOR_MARGIN:g})"
        )
    return z


def ensure_boundary(xi, name: str = "boundary point") -> np.ndarray:
    xi = as_point(xi)
    if np.any(np.abs(np.sqrt(norm_sq(xi)) - 1.0) > BOUNDARY_TOL):
        raise GeometryError(f"{name} must lie on the unit sphere")
    return xi


def projections(z, w):
    """Orthogonal projections of w onto the line through z and its complement.

    Returns ``(P_z(w), Q_z(w))`` with ``P_z(w) = (<w, z>/|z|^2) z`` and
    ``Q_z(w) = w - P_z(w)``. For z = 0 the convention is P_0 = 0 and Q_0 the
    identity.
    """
    z = as_point(z)
    w = as_point(w)
    zsq = norm_sq(z)
    coeff = np.where(zsq > 0, inner(w, z) / np.where(zsq > 0, zsq, 1.0), 0.0)
    p = np.asarray(coeff)[..., None] * z
    return p, w - p


def mobius_transform(a, z) -> np.ndarray:
    """Involutive automorphism of the ball exchanging 0 and a, applied to z."""
    a = ensure_interior(a, "a")
    z = ensure_interior(z, "z")
    return _mobius_raw(a, z)


def _mobius_raw(a, z) -> np.ndarray:
    """Mobius transform without domain validation (batch internals)."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    asq = norm_sq(a)
    safe = np.where(asq > 0, asq, 1.0)
    coeff = np.where(asq > 0, inner(z, a) / safe, 0.0)
    p = np.asarray(coeff)[..., None] * a
    q = z - p
    s = np.sqrt(np.clip(1.0 - asq, 0.0, None))
    num = a - p - np.asarray(s)[..., None] * q
    den = 1.0 - inner(z, a)
    return num / np.asarray(den)[..., None]


def pseudo_distance(a, z) -> np.ndarray | float:
    """Pseudohyperbolic distance, the modulus of the Mobius transform."""
    a = ensure_interior(a, "a")
    z = ensure_interior(z, "z")
    return np.sqrt(norm_sq(_mobius_raw(a, z)))


def bergman_distance(z, w) -> np.ndarray | float:
    """Hyperbolic (Bergman) distance, atanh of the pseudohyperbolic one."""
    rho = pseudo_distance(z, w)
    return 0.5 * (np.log1p(rho) - np.log1p(-rho))


def rho_pairwise(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Pseudohyperbolic distances between all rows of Z (k, n) and W (m, n).

    Uses the identity 1 - rho^2 = (1-|z|^2)(1-|w|^2)/|1-<z,w>|^2, which is
    fast and Gram-matrix friendly but loses relative accuracy for rho near 0.
    Intended for bulk threshold comparisons (lattices, memberships).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    gram = Z @ W.conj().T
    zsq = norm_sq(Z)[:, None]
    wsq = norm_sq(W)[None, :]
    den = np.abs(1.0 - gram) ** 2
    rho_sq = 1.0 - (1.0 - zsq) * (1.0 - wsq) / np.maximum(den, 1e-300)
    return np.sqrt(np.clip(rho_sq, 0.0, 1.0))


def beta_pairwise(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    rho = rho_pairwise(Z, W)
    rho = np.minimum(rho, 1.0 - 1e-16)
    return 0.5 * (np.log1p(rho) - np.log1p(-rho))


@dataclass(frozen=True)
class EllipsoidParams:
    """Euclidean description of a Bergman metric ball.

    The ball of hyperbolic radius r about z is the set of w with

        |P_z(w) - c|^2 / (s R)^2 + |Q_z(w)|^2 / (s R^2) < 1,

    an ellipsoid with one long complex semi-axis s*R along z and n-1 short
    semi-axes sqrt(s)*R orthogonal to it.
    """

    R: float
    c: np.ndarray
    s: float
    axis_long: float
    axis_short: float

    @property
    def normalized_volume(self) -> float:
        n = self.c.shape[0]
        return self.s ** (n + 1) * self.R ** (2 * n)


def bergman_ball(z, r: float) -> EllipsoidParams:
    """Ellipsoid parameters of the Bergman ball D(z, r)."""
    z = ensure_interior(z, "z")
    if z.ndim != 1:
        raise GeometryError("bergman_ball expects a single center point")
    if not r > 0:
        raise GeometryError("radius must be positive")
    R = float(np.tanh(r))
    zsq = float(norm_sq(z))
    den = 1.0 - R * R * zsq
    c = (1.0 - R * R) * z / den
    s = (1.0 - zsq) / den
    return EllipsoidParams(R=R, c=c, s=s, axis_long=s * R, axis_short=np.sqrt(s) * R)


def ellipsoid_contains(ball: EllipsoidParams, w) -> np.ndarray | bool:
    """Strict membership test against the ellipsoid inequality."""
    w = as_point(w)
    csq = float(norm_sq(ball.c))
    if csq == 0.0:
        return norm_sq(w) < ball.R ** 2
    direction = ball.c / np.sqrt(csq)
    comp = inner(w, direction)
    p = np.asarray(comp)[..., None] * direction
    q = w - p
    long_sq = np.abs(comp - np.sqrt(csq)) ** 2
    short_sq = norm_sq(q)
    val = long_sq / (ball.s * ball.R) ** 2 + short_sq / (ball.s * ball.R ** 2)
    return val < 1.0


def carleson_tube_contains(xi, delta: float, z) -> np.ndarray | bool:
    """Membership of z in the Carleson tube S(xi, delta) = {|1 - <z, xi>| < delta}."""
    xi = ensure_boundary(xi)
    if not delta > 0:
        raise GeometryError("tube width delta must be positive")
    z = as_point(z)
    return np.abs(1.0 - inner(z, xi)) < delta


def carleson_block_width(a) -> float:
    """Width 1 - |a| of the Carleson block attached to a (whole ball at a = 0)."""
    a = as_point(a)
    return float(1.0 - np.sqrt(norm_sq(a)))


def unitary_frame(a) -> np.ndarray:
    """Unitary matrix whose first column is a/|a|.

    Completed by Gram-Schmidt over the standard basis, so for a = t e_1 with
    t > 0 the frame is exactly the identity.
    """
    a = as_point(a)
    n = a.shape[0]
    nrm = np.sqrt(float(norm_sq(a)))
    if nrm == 0.0:
        return np.eye(n, dtype=complex)
    cols = [a / nrm]
    for j in range(n):
        if len(cols) == n:
            break
        v = np.zeros(n, dtype=complex)
        v[j] = 1.0
        for c in cols:
            v = v - inner(v, c) * c
        vn = np.sqrt(float(norm_sq(v)))
        if vn > 1e-8:
            cols.append(v / vn)
    return np.stack(cols, axis=1)
