"""Fourier-space amplification matrices for SL-DIRK on the two-velocity model.

The linear two-velocity relaxation system diagonalizes per wavenumber into
a 2x2 system for the Fourier coefficients of (f_1, f_2).  One SL-DIRK step
maps the coefficient pair through a product of stage factors:

* an implicit relaxation solve per stage, (I - a_kk * xi * J)^{-1} with
  J the relaxation Jacobian and xi = dt / eps;
* diagonal phase factors exp(-+ i * k * shift) from the characteristic
  shifts of the Shu-Osher combination.

Everything reduces to closed-form 2x2 complex algebra, so scans over
(b, k*dt, xi) grids are vectorized numpy throughout.  The stiff limit
xi -> infinity is handled analytically by the equilibrium projection
instead of a large finite xi, which would cancel catastrophically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .butcher import ButcherTableau, ShuOsherForm, to_shu_osher

#: distinguished value for the stiff limit dt/eps -> infinity
XI_INF = np.inf


@dataclass(frozen=True)
class StabilityPoint:
    """One point of the stability parameter space."""
    b: float
    k_dt: float
    xi: float

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b = {self.b} outside [0, 1]")
        if self.k_dt < 0.0:
            raise ValueError(f"k_dt = {self.k_dt} must be >= 0")
        if self.xi < 0.0:
            raise ValueError(f"xi = {self.xi} must be >= 0 (inf allowed)")


@dataclass(frozen=True)
class AmplificationMatrix:
    """2x2 complex one-step map of Fourier coefficients, with provenance."""
    m: np.ndarray
    tableau_name: str
    point: StabilityPoint


def relaxation_jacobian(b: float) -> np.ndarray:
    """Jacobian of the two-velocity relaxation operator; eigenvalues {0, -1}."""
    return 0.5 * np.array([[-1.0 + b, 1.0 + b],
                           [1.0 - b, -1.0 - b]])


def equilibrium_projection(b):
    """Rank-1 projection onto the equilibrium direction (null space of the
    relaxation Jacobian); the xi -> infinity limit of every stage inverse."""
    b = np.asarray(b, dtype=float)
    p = np.empty(b.shape + (2, 2))
    p[..., 0, 0] = p[..., 0, 1] = 0.5 * (1.0 + b)
    p[..., 1, 0] = p[..., 1, 1] = 0.5 * (1.0 - b)
    return p


def stage_inverse(a_ll: float, xi: float, b) -> np.ndarray:
    """Closed-form (I - a_ll * xi * J)^{-1}, broadcast over b.

    The matrix is nonsingular for every xi >= 0 because J has eigenvalues
    {0, -1}; its determinant is 1 + a_ll * xi.  For xi = inf returns the
    equilibrium projection.
    """
    if a_ll <= 0.0:
        raise ValueError(f"stage weight a_ll = {a_ll} must be positive")
    if np.isinf(xi):
        return equilibrium_projection(b)
    b = np.asarray(b, dtype=float)
    ax = a_ll * xi
    out = np.empty(b.shape + (2, 2))
    out[..., 0, 0] = 1.0 + 0.5 * (1.0 + b) * ax
    out[..., 0, 1] = 0.5 * (1.0 + b) * ax
    out[..., 1, 0] = 0.5 * (1.0 - b) * ax
    out[..., 1, 1] = 1.0 + 0.5 * (1.0 - b) * ax
    out /= 1.0 + ax
    return out


def _phase_pair(theta):
    """Diagonal advection factor diag(exp(-i theta), exp(+i theta)) as (.., 2)."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape + (2,), dtype=complex)
    out[..., 0] = np.exp(-1j * theta)
    out[..., 1] = np.exp(1j * theta)
    return out


def _amplification_grid(so: ShuOsherForm, b_grid, kdt_grid, xi) -> np.ndarray:
    """One-step matrices on the (b, k_dt) grid for a single xi.

    Output shape (nb, nk, 2, 2).  The stage recursion accumulates
    E_l = B_l + sum_{j<l} C_lj (A_j^{-1} E_j) with diagonal B_l, C_lj and
    the final map A_s^{-1} E_s.
    """
    b_grid = np.atleast_1d(np.asarray(b_grid, dtype=float))
    kdt_grid = np.atleast_1d(np.asarray(kdt_grid, dtype=float))
    nb, nk = len(b_grid), len(kdt_grid)
    s = so.s
    w, diag, c = so.b_coeffs, so.diag, so.c

    # stage inverses depend on (b, xi) only: shape (nb, 1, 2, 2)
    ainv = [stage_inverse(diag[l], xi, b_grid)[:, None, :, :] for l in range(s)]

    applied = []  # A_l^{-1} E_l, each (nb, nk, 2, 2)
    for l in range(s):
        free = 1.0 - w[l, :l].sum()
        bl = free * _phase_pair(c[l] * kdt_grid)          # (nk, 2)
        e_l = np.zeros((nb, nk, 2, 2), dtype=complex)
        e_l[..., 0, 0] = bl[..., 0]
        e_l[..., 1, 1] = bl[..., 1]
        for j in range(l):
            clj = w[l, j] * _phase_pair((c[l] - c[j]) * kdt_grid)  # (nk, 2)
            e_l += clj[None, :, :, None] * applied[j]
        applied.append(ainv[l] @ e_l)
    return applied[-1]


def amplification(t: ButcherTableau, p: StabilityPoint) -> AmplificationMatrix:
    """One-step amplification matrix of tableau ``t`` at point ``p``."""
    so = to_shu_osher(t)
    m = _amplification_grid(so, [p.b], [p.k_dt], p.xi)[0, 0]
    return AmplificationMatrix(m=m, tableau_name=t.name, point=p)


def eigenvalues_2x2(m):
    """Eigenvalues of stacked 2x2 complex matrices, sorted by magnitude.

    Uses the quadratic formula with a cancellation-safe branch: the root
    aligned with the trace is computed first, the other as det / lambda_1.
    Returns (small, large) arrays of shape m.shape[:-2].
    """
    m = np.asarray(m)
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    sq = np.sqrt(tr * tr - 4.0 * det + 0j)
    # flip sq where it opposes tr so tr + sq never cancels
    align = np.real(np.conj(tr) * sq)
    sq = np.where(align < 0.0, -sq, sq)
    lam_big = 0.5 * (tr + sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_small = np.where(lam_big != 0.0, det / np.where(lam_big != 0.0, lam_big, 1.0), 0.0)
    big = np.abs(lam_big)
    small = np.abs(lam_small)
    lo = np.minimum(small, big)
    hi = np.maximum(small, big)
    return lo, hi


def spectral_radius(m) -> float:
    """Largest eigenvalue magnitude of a 2x2 complex matrix."""
    arr = m.m if isinstance(m, AmplificationMatrix) else np.asarray(m)
    _, hi = eigenvalues_2x2(arr)
    return float(hi) if np.ndim(hi) == 0 else hi


# ---------------------------------------------------------------------------
# grid scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityScan:
    """Spectral radii over a (b, k_dt, xi) grid.

    Arrays have shape (nb, nk, nxi); ``lam_small``/``lam_large`` are the
    eigenvalue magnitudes sorted per point and ``rho`` equals ``lam_large``.
    """
    tableau_name: str
    b: np.ndarray
    k_dt: np.ndarray
    xi: np.ndarray
    lam_small: np.ndarray
    lam_large: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return self.lam_large

    def max_point(self):
        """(rho_max, b, k_dt, xi) at the grid point of largest radius."""
        idx = np.unravel_index(np.argmax(self.lam_large), self.lam_large.shape)
        return (float(self.lam_large[idx]), float(self.b[idx[0]]),
                float(self.k_dt[idx[1]]), float(self.xi[idx[2]]))


def scan(t: ButcherTableau, b_grid, kdt_grid, xi_grid) -> StabilityScan:
    """Evaluate both eigenvalue magnitudes over the full parameter grid.

    xi entries may include ``inf``; each xi slice is evaluated vectorized
    over the (b, k_dt) plane, so points are independent and the output is
    deterministic regardless of execution order.
    """
    b_grid = np.atleast_1d(np.asarray(b_grid, dtype=float))
    kdt_grid = np.atleast_1d(np.asarray(kdt_grid, dtype=float))
    xi_grid = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    if b_grid.size == 0 or kdt_grid.size == 0 or xi_grid.size == 0:
        raise ValueError("scan grids must be nonempty")
    so = to_shu_osher(t)
    lo = np.empty((len(b_grid), len(kdt_grid), len(xi_grid)))
    hi = np.empty_like(lo)
    for i, xi in enumerate(xi_grid):
        m = _amplification_grid(so, b_grid, kdt_grid, float(xi))
        lo[:, :, i], hi[:, :, i] = eigenvalues_2x2(m)
    return StabilityScan(tableau_name=t.name, b=b_grid, k_dt=kdt_grid,
                         xi=xi_grid, lam_small=lo, lam_large=hi)


#: default grids mirror the ranges used for the contour plots
DEFAULT_B_GRID = np.linspace(0.0, 1.0, 101)
DEFAULT_KDT_GRID = np.linspace(0.0, 2.0 * np.pi, 401)
DEFAULT_XI_GRID = np.concatenate([np.linspace(0.0, 10.0, 101), [XI_INF]])
