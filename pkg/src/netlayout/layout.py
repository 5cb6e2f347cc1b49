"""Graph layout by damped N-body dynamics.

Every node is a unit point mass carrying a positive charge; all pairs repel
through an inverse-square Coulomb force (Barnes-Hut summed), every edge is a
Hookean spring, and a velocity-proportional friction drains energy until the
system settles into a quasi-equilibrium. The equations of motion are advanced
with semi-implicit Euler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .bhtree import build_tree, coulomb_forces, default_softening, direct_coulomb_all
from .graph import Graph

__all__ = [
    "SimParams",
    "BodyState",
    "RelaxResult",
    "DivergenceError",
    "random_init",
    "pair_spacing",
    "spring_force",
    "spring_forces",
    "friction_force",
    "total_force",
    "step",
    "relax",
    "energies",
]


class DivergenceError(RuntimeError):
    """Raised when the integration blows up."""


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical constants of a layout run.

    Physical defaults are the published large-graph parameter set; ``C`` is
    not part of that set and defaults to 1. ``dt``, ``eps`` and ``v_stop``
    left as ``None`` are derived by :meth:`resolved`. Systems of at most
    ``direct_max`` bodies skip the tree and sum Coulomb forces exactly, which
    is both cheaper and more accurate at that size.
    """

    C: float = 1.0
    K: float = 8.4e-2
    ell: float = 7.2e-6
    gamma: float = 2.7
    mass: float = 1.0
    charge: float = 2.7e-3
    dt: float | None = None
    theta: float = 0.5
    direct_max: int = 1000
    eps: float | None = None
    max_steps: int = 50_000
    v_stop: float | None = None
    box_width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        for name in ("gamma", "K", "ell", "C", "theta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if not self.charge > 0:
            raise ValueError("charge must be > 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.direct_max < 0:
            raise ValueError("direct_max must be >= 0")

    def resolved(self, n: int, dim: int) -> "SimParams":
        """Fill in derived defaults for ``n`` bodies in ``dim`` dimensions."""
        dt = self.dt
        if dt is None:
            dt = 0.01 * math.sqrt(self.mass / self.K) if self.K > 0 else 1e-2
        eps = self.eps
        if eps is None:
            eps = default_softening(self.box_width, n, dim)
        v_stop = self.v_stop if self.v_stop is not None else 1e-4 * self.box_width
        return replace(self, dt=dt, eps=eps, v_stop=v_stop)


@dataclass
class BodyState:
    x: np.ndarray
    v: np.ndarray
    m: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        self.m = np.ascontiguousarray(self.m, dtype=np.float64)
        self.q = np.ascontiguousarray(self.q, dtype=np.float64)
        n = len(self.x)
        if self.x.ndim != 2 or self.x.shape[1] not in (1, 2, 3):
            raise ValueError("positions must be an N x d array")
        if self.v.shape != self.x.shape or self.m.shape != (n,) or self.q.shape != (n,):
            raise ValueError("state arrays disagree on N or d")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("non-finite entries in body state")

    @classmethod
    def at_rest(cls, x, p: SimParams) -> "BodyState":
        x = np.asarray(x, dtype=np.float64)
        n = len(x)
        return cls(x.copy(), np.zeros_like(x), np.full(n, p.mass), np.full(n, p.charge))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def copy(self) -> "BodyState":
        return BodyState(self.x.copy(), self.v.copy(), self.m.copy(), self.q.copy())

    def max_speed(self) -> float:
        return float(np.sqrt((self.v**2).sum(axis=1).max())) if self.n else 0.0


@dataclass
class RelaxResult:
    state: BodyState
    kinetic: np.ndarray
    steps: int
    converged: bool
    energy_trace: list[tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def max_speed(self) -> float:
        return self.state.max_speed()


def random_init(n: int, dim: int, box_width: float = 1.0, seed: int = 0) -> np.ndarray:
    """Uniform i.i.d. positions in the centered cube of side ``box_width``."""
    if n < 1:
        raise ValueError("need at least one node")
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5 * box_width, 0.5 * box_width, size=(n, dim))


def pair_spacing(p: SimParams) -> float:
    """Separation at which one spring balances the Coulomb push of its two
    endpoints, the root of ``K (d - ell) = C q^2 / d^2``.

    A natural length scale for initial layouts: the largest real root of the
    cubic ``K d^3 - K ell d^2 - C q^2 = 0`` (unique for positive d).
    """
    if p.K == 0.0 or p.C == 0.0:
        return 1.0
    roots = np.roots([p.K, -p.K * p.ell, 0.0, -p.C * p.charge**2])
    real = roots[np.abs(roots.imag) < 1e-12 * np.abs(roots).max()].real
    return float(real.max())


@njit(cache=True)
def _hash_direction(a, b, d, out):
    # splitmix64 on the ordered pair; antisymmetry is handled by the caller
    h = np.uint64(a) * np.uint64(0x9E3779B97F4A7C15) ^ np.uint64(b)
    norm = 0.0
    for k in range(d):
        h += np.uint64(0x9E3779B97F4A7C15)
        z = h
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        out[k] = (z >> np.uint64(11)) * (1.0 / 9007199254740992.0) * 2.0 - 1.0
        norm += out[k] * out[k]
    if norm == 0.0:
        out[0] = 1.0
        norm = 1.0
    norm = np.sqrt(norm)
    for k in range(d):
        out[k] /= norm


@njit(cache=True)
def _spring_all(x, indptr, indices, K, ell, guard, out):
    n, d = x.shape
    u = np.empty(d)
    for i in range(n):
        for k in range(d):
            out[i, k] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            r2 = 0.0
            for k in range(d):
                r2 += (x[j, k] - x[i, k]) ** 2
            r = np.sqrt(r2)
            if r <= guard:
                # coincident endpoints: push apart along a fixed pseudo-random axis
                a, b = (i, j) if i < j else (j, i)
                _hash_direction(a, b, d, u)
                sign = 1.0 if i > j else -1.0
                mag = K * (r - ell)
                for k in range(d):
                    out[i, k] -= sign * mag * u[k]
            else:
                mag = K * (r - ell) / r
                for k in range(d):
                    out[i, k] += mag * (x[j, k] - x[i, k])


def spring_forces(g: Graph, x, K: float, ell: float, guard: float = 0.0) -> np.ndarray:
    """Hooke forces on all nodes: ``K (|x_i - x_j| - ell)`` along each edge.

    Endpoints closer than ``guard`` use a deterministic pseudo-random direction
    derived from the pair's indices instead of the ill-defined edge direction.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    _spring_all(x, g.indptr, g.indices, float(K), float(ell), float(guard), out)
    return out


def spring_force(g: Graph, x, K: float, ell: float, i: int, guard: float = 0.0) -> np.ndarray:
    """Spring force on node ``i`` alone (see :func:`spring_forces`)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    nbrs = g.neighbors(i)
    sub = np.vstack([x[i : i + 1], x[nbrs]])
    out = np.empty_like(sub)
    # node i sits at row 0 of the gathered block; keep its hash identity
    _spring_pair_rows(sub, nbrs, i, float(K), float(ell), float(guard), out)
    return out[0]


@njit(cache=True)
def _spring_pair_rows(sub, nbrs, i, K, ell, guard, out):
    d = sub.shape[1]
    u = np.empty(d)
    for k in range(d):
        out[0, k] = 0.0
    for t in range(len(nbrs)):
        j = nbrs[t]
        r2 = 0.0
        for k in range(d):
            r2 += (sub[t + 1, k] - sub[0, k]) ** 2
        r = np.sqrt(r2)
        if r <= guard:
            a, b = (i, j) if i < j else (j, i)
            _hash_direction(a, b, d, u)
            sign = 1.0 if i > j else -1.0
            mag = K * (r - ell)
            for k in range(d):
                out[0, k] -= sign * mag * u[k]
        else:
            mag = K * (r - ell) / r
            for k in range(d):
                out[0, k] += mag * (sub[t + 1, k] - sub[0, k])


def friction_force(v, gamma: float) -> np.ndarray:
    return -gamma * np.asarray(v, dtype=np.float64)


def coulomb_all(x, q, p: SimParams) -> np.ndarray:
    """Coulomb forces on all bodies under ``p``: tree code for large systems,
    exact pairwise sums for small ones (or in 1-d), zero when ``C == 0``."""
    if p.C == 0.0 or len(x) < 2:
        return np.zeros_like(x)
    if x.shape[1] == 1 or len(x) <= p.direct_max:
        return direct_coulomb_all(p.C, q, x, p.eps)
    tree = build_tree(x, q)
    return coulomb_forces(tree, p.theta, p.C, p.eps)


def total_force(state: BodyState, g: Graph, p: SimParams) -> np.ndarray:
    """Coulomb + spring + friction forces; ``p`` must be resolved."""
    f = coulomb_all(state.x, state.q, p)
    if p.K != 0.0 and g.m:
        f += spring_forces(g, state.x, p.K, p.ell, p.eps)
    if p.gamma != 0.0:
        f -= p.gamma * state.v
    return f


def _advance(state: BodyState, force: np.ndarray, dt: float) -> BodyState:
    if not np.all(np.isfinite(force)):
        bad = np.flatnonzero(~np.isfinite(force).all(axis=1))
        raise DivergenceError(
            f"non-finite force on {len(bad)} node(s), first {bad[0]}; try a smaller dt (now {dt:g})"
        )
    v = state.v + dt * force / state.m[:, None]
    x = state.x + dt * v
    return BodyState(x, v, state.m, state.q)


def step(state: BodyState, g: Graph, p: SimParams) -> BodyState:
    """One semi-implicit Euler step: ``v += dt F(x, v) / m``, then ``x += dt v``."""
    p = p.resolved(state.n, state.dim)
    return _advance(state, total_force(state, g, p), p.dt)


def relax(g: Graph, init, p: SimParams, v0=None, energy_every: int = 0) -> RelaxResult:
    """Integrate from rest (or ``v0``) until the layout settles.

    The run stops when every speed is below ``v_stop`` both now and after the
    next step would be taken (so a resting but unbalanced start keeps going),
    or after ``max_steps`` steps. Kinetic energy is recorded before each step
    and once at the end. With ``energy_every > 0`` the full energy split is
    recorded every that many steps as ``(step, kinetic, spring, coulomb)``.

    Raises :class:`DivergenceError` when kinetic energy reaches a new maximum
    that is more than ten times its value 100 steps earlier.
    """
    x0 = np.asarray(init, dtype=np.float64)
    if x0.shape[0] != g.n:
        raise ValueError(f"init has {x0.shape[0]} rows, graph has {g.n} nodes")
    p = p.resolved(g.n, x0.shape[1])
    state = BodyState.at_rest(x0, p)
    if v0 is not None:
        state = BodyState(state.x, np.asarray(v0, dtype=np.float64).copy(), state.m, state.q)

    kinetic: list[float] = []
    etrace: list[tuple[int, float, float, float]] = []
    peak = 0.0
    converged = False
    steps = 0
    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            # an overflowing energy is exactly what the divergence check is for
            ke = 0.5 * float(np.sum(state.m[:, None] * state.v**2))
        kinetic.append(ke)
        if energy_every and steps % energy_every == 0:
            etrace.append((steps, *energies(state, g, p)))
        if steps >= 200 and ke > peak and ke > 10.0 * kinetic[-101]:
            raise DivergenceError(
                f"kinetic energy grew {ke / kinetic[-101]:.3g}x over 100 steps "
                f"at step {steps}; try a smaller dt (now {p.dt:g})"
            )
        peak = max(peak, ke)
        force = total_force(state, g, p)
        nxt = _advance(state, force, p.dt)
        if state.max_speed() < p.v_stop and nxt.max_speed() < p.v_stop:
            converged = True
            break
        if steps >= p.max_steps:
            break
        state = nxt
        steps += 1
    if energy_every and etrace[-1][0] != steps:
        etrace.append((steps, *energies(state, g, p)))
    return RelaxResult(state, np.asarray(kinetic), steps, converged, etrace)


@njit(cache=True)
def _coulomb_potential(x, q, eps2):
    n, d = x.shape
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r2 = eps2
            for k in range(d):
                r2 += (x[i, k] - x[j, k]) ** 2
            total += q[i] * q[j] / np.sqrt(r2)
    return total


def energies(state: BodyState, g: Graph, p: SimParams) -> tuple[float, float, float]:
    """Kinetic, spring and Coulomb energies (Coulomb summed exactly, O(N^2))."""
    p = p.resolved(state.n, state.dim)
    kinetic = 0.5 * float(np.sum(state.m[:, None] * state.v**2))
    if g.m:
        e = g.edges
        lengths = np.linalg.norm(state.x[e[:, 0]] - state.x[e[:, 1]], axis=1)
        spring = 0.5 * p.K * float(np.sum((lengths - p.ell) ** 2))
    else:
        spring = 0.0
    coulomb = p.C * _coulomb_potential(state.x, state.q, p.eps**2) if p.C else 0.0
    return kinetic, spring, coulomb
