"""Kinetic relaxation models: collision invariants, moments, equilibria.

All models share the relaxation structure df/dt = (M[U] - f) / eps along
characteristics, where U are the conserved moments of f and M[U] the local
equilibrium.  Distribution arrays carry the velocity index on the leading
axis, so f has shape (n_v, ...) and the moment vector U has shape (K, ...)
with K the number of collision invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnphysicalStateError(ValueError):
    """Moments left the physical region (nonpositive density or temperature)."""


@dataclass(frozen=True)
class VelocitySet:
    """Discrete velocities with positive quadrature weights."""
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float).ravel()
        if v.shape != w.shape:
            raise ValueError("velocities and weights must have equal length")
        if np.any(w <= 0.0):
            raise ValueError("quadrature weights must be positive")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return len(self.v)

    @property
    def max_speed(self) -> float:
        return float(np.max(np.abs(self.v)))

    @classmethod
    def two_velocity(cls) -> "VelocitySet":
        """The set {+1, -1} with unit weights (moments are plain sums)."""
        return cls(v=np.array([1.0, -1.0]), w=np.array([1.0, 1.0]))

    @classmethod
    def uniform(cls, v_min: float, v_max: float, n_v: int) -> "VelocitySet":
        """Uniform grid with equal weights dv.

        For equilibria that decay below machine epsilon at the endpoints
        this quadrature is spectrally accurate, so the grid doubles as a
        trapezoid/midpoint rule.
        """
        if n_v < 2:
            raise ValueError("need at least two velocity points")
        v = np.linspace(v_min, v_max, n_v)
        dv = (v_max - v_min) / (n_v - 1)
        return cls(v=v, w=np.full(n_v, dv))


@dataclass(frozen=True)
class MacroState:
    """Moment vector plus derived hydrodynamic fields.

    ``U`` has shape (K, ...): K = 1 holds the scalar density of the
    two-velocity models, K = 3 holds (rho, rho*u, E) for the gas model,
    with temperature recovered from E = rho*u^2/2 + rho*T/2 in 1V.
    """
    U: np.ndarray

    @property
    def n_invariants(self) -> int:
        return self.U.shape[0]

    @property
    def rho(self):
        return self.U[0]

    @property
    def u(self):
        if self.n_invariants < 3:
            raise ValueError("mean velocity is defined only for the 3-moment state")
        return self.U[1] / self.U[0]

    @property
    def temperature(self):
        if self.n_invariants < 3:
            raise ValueError("temperature is defined only for the 3-moment state")
        u = self.u
        return 2.0 * self.U[2] / self.U[0] - u * u


class KineticModel:
    """Common relaxation machinery; subclasses supply the equilibrium map.

    Subclasses define ``name``, ``velocity_set``, ``n_invariants``,
    ``invariant_names``, and implement ``moments`` / ``equilibrium``.
    """

    name: str
    velocity_set: VelocitySet
    n_invariants: int
    invariant_names: tuple[str, ...]

    def moments(self, f) -> np.ndarray:
        raise NotImplementedError

    def equilibrium(self, U) -> np.ndarray:
        raise NotImplementedError

    def macro_state(self, f) -> MacroState:
        return MacroState(U=self.moments(f))

    def relaxation(self, f, eps: float) -> np.ndarray:
        """(M[U[f]] - f) / eps, the stiff right-hand side."""
        if eps <= 0.0:
            raise ValueError("relaxation rate requires eps > 0")
        return (self.equilibrium(self.moments(f)) - f) / eps


class LinearTwoVelocity(KineticModel):
    """Two opposite unit velocities with a linear equilibrium.

    Components (f_1, f_2) move at v = +1 / -1; the single conserved moment
    is U = f_1 + f_2 and the equilibrium splits it ((1+b)/2, (1-b)/2).
    The relaxation term is then (b*(f_1+f_2) - (f_1-f_2)) / 2 with opposite
    signs on the two components.
    """

    def __init__(self, b: float):
        if not abs(b) < 1.0:
            raise ValueError(f"coupling b = {b} must satisfy |b| < 1")
        self.b = float(b)
        self.name = "linear-two-velocity"
        self.velocity_set = VelocitySet.two_velocity()
        self.n_invariants = 1
        self.invariant_names = ("mass",)

    def moments(self, f):
        return (f[0] + f[1])[None, ...]

    def equilibrium(self, U):
        u = U[0]
        return np.stack([0.5 * (1.0 + self.b) * u,
                         0.5 * (1.0 - self.b) * u])


class NonlinearTwoVelocity(KineticModel):
    """Two-velocity model whose relaxation limit is a quadratic-flux law.

    Written in the (f_1, f_2) variables of the linear model but with the
    equilibrium ((b*u^2 + u)/2, (-b*u^2 + u)/2) for u = f_1 + f_2, so the
    limiting conservation law transports u with flux b*u^2.
    """

    def __init__(self, b: float):
        self.b = float(b)
        self.name = "nonlinear-two-velocity"
        self.velocity_set = VelocitySet.two_velocity()
        self.n_invariants = 1
        self.invariant_names = ("mass",)

    def moments(self, f):
        return (f[0] + f[1])[None, ...]

    def equilibrium(self, U):
        u = U[0]
        flux = self.b * u * u
        return np.stack([0.5 * (flux + u), 0.5 * (-flux + u)])


def maxwellian(v, rho, u, T):
    """1V Maxwellian rho / sqrt(2 pi T) * exp(-(v-u)^2 / (2T)).

    ``v`` has shape (n_v,); rho/u/T broadcast against each other and become
    the trailing field axes, producing shape (n_v,) + field shape.
    """
    v = np.asarray(v, dtype=float)
    rho, u, T = np.broadcast_arrays(np.asarray(rho, dtype=float),
                                    np.asarray(u, dtype=float),
                                    np.asarray(T, dtype=float))
    vv = v.reshape((v.shape[0],) + (1,) * rho.ndim)
    return rho / np.sqrt(2.0 * np.pi * T) * np.exp(-((vv - u) ** 2) / (2.0 * T))


class BGK1D(KineticModel):
    """1D1V gas model relaxing toward a local Maxwellian.

    Conserved moments are (rho, rho*u, E) against (1, v, v^2/2).  With
    ``conservative=True`` (default) the equilibrium is the *discrete*
    Maxwellian: its parameters are Newton-corrected so that the quadrature
    moments match U exactly, making the relaxation term conserve mass,
    momentum and energy to machine precision instead of quadrature
    accuracy.  Set ``conservative=False`` for the analytic Maxwellian
    evaluated at (rho, u, T).
    """

    def __init__(self, velocity_set: VelocitySet | None = None, conservative: bool = True,
                 newton_tol: float = 1e-13, newton_max_iter: int = 50):
        self.velocity_set = velocity_set if velocity_set is not None \
            else VelocitySet.uniform(-15.0, 15.0, 100)
        self.conservative = bool(conservative)
        self.newton_tol = float(newton_tol)
        self.newton_max_iter = int(newton_max_iter)
        self.name = "bgk-1d1v"
        self.n_invariants = 3
        self.invariant_names = ("mass", "momentum", "energy")
        v = self.velocity_set.v
        # weighted invariants (3, n_v): rows w, w*v, w*v^2/2
        self._wphi = np.stack([self.velocity_set.w,
                               self.velocity_set.w * v,
                               0.5 * self.velocity_set.w * v * v])

    def moments(self, f):
        U = np.tensordot(self._wphi, f, axes=(1, 0))
        rho = U[0]
        T = 2.0 * U[2] / rho - (U[1] / rho) ** 2
        bad = (rho <= 0.0) | (T <= 0.0)
        if np.any(bad):
            exc = UnphysicalStateError(
                f"moments left the physical region: min rho = {np.min(rho):.3e}, "
                f"min T = {np.min(T):.3e}")
            exc.flat_index = int(np.argmax(np.ravel(bad)))
            raise exc
        return U

    def _params_from_moments(self, U):
        rho = U[0]
        u = U[1] / rho
        T = 2.0 * U[2] / rho - u * u
        if np.any(rho <= 0.0) or np.any(T <= 0.0):
            raise UnphysicalStateError(
                f"equilibrium needs rho > 0 and T > 0: min rho = {np.min(rho):.3e}, "
                f"min T = {np.min(T):.3e}")
        return rho, u, T

    def equilibrium(self, U):
        rho, u, T = self._params_from_moments(U)
        if self.conservative:
            rho, u, T = self._fit_discrete_parameters(U, rho, u, T)
        return maxwellian(self.velocity_set.v, rho, u, T)

    def _fit_discrete_parameters(self, U, rho, u, T):
        """Newton-correct (rho, u, T) until the discrete Maxwellian moments
        equal U.  Warm-started at the analytic parameters, which are already
        within quadrature error, so usually 0-2 iterations run."""
        v = self.velocity_set.v
        scale = np.maximum(np.abs(U[0]), 1e-300)
        for _ in range(self.newton_max_iter):
            M = maxwellian(v, rho, u, T)
            res = np.tensordot(self._wphi, M, axes=(1, 0)) - U
            if np.max(np.abs(res) / scale) <= self.newton_tol:
                return rho, u, T
            # columns of the 3x3 Jacobian: moments of dM/drho, dM/du, dM/dT
            vshape = (v.shape[0],) + (1,) * np.ndim(rho)
            dv = v.reshape(vshape) - u
            dM = np.stack([M / rho,
                           M * dv / T,
                           M * (dv * dv / (2.0 * T * T) - 0.5 / T)], axis=-1)
            J = np.tensordot(self._wphi, dM, axes=(1, 0))      # (3, ..., 3)
            J = np.moveaxis(J, 0, -2)                          # (..., 3, 3)
            rhs = np.moveaxis(res, 0, -1)[..., None]           # (..., 3, 1)
            step = np.linalg.solve(J, rhs)[..., 0]
            rho = rho - step[..., 0]
            u = u - step[..., 1]
            # keep temperature positive; the warm start makes this guard
            # a no-op in practice
            T = np.maximum(T - step[..., 2], 0.05 * T)
            if np.any(rho <= 0.0):
                raise UnphysicalStateError("discrete Maxwellian fit drove rho <= 0")
        raise RuntimeError("discrete Maxwellian fit did not converge "
                           f"within {self.newton_max_iter} iterations")


def make_model(name: str, b: float | None = None, velocity_set: VelocitySet | None = None,
               conservative: bool = True) -> KineticModel:
    """Factory used by the CLI and the study harness."""
    if name == "linear":
        return LinearTwoVelocity(b=0.6 if b is None else b)
    if name == "nonlinear":
        return NonlinearTwoVelocity(b=0.2 if b is None else b)
    if name == "bgk":
        return BGK1D(velocity_set=velocity_set, conservative=conservative)
    raise ValueError(f"unknown model {name!r}; expected linear, nonlinear or bgk")
