"""Discrete differential geometry of a single sampled planar curve.

A curve is sampled on the uniform grid x_j = j/N, j = 0..N.  Spatial
derivatives are obtained from second-order finite differences (centred in
the interior, one-sided at the two boundary nodes so that junction data
is also second-order accurate).  Curvature and its arclength derivatives
are evaluated through closed-form expressions in the derivative arrays,
which keeps algebraic identities between different assemblies of the same
geometric quantity exact at the discrete level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_GRID = 16
SPEED_FLOOR = 1e-6  # below this min |gamma_x| a curve counts as degenerate


class GridError(ValueError):
    """Grid too small for the requested stencil."""


class RegularityError(ValueError):
    """The sampled curve violates the regularity condition min|gamma_x| > 0."""


def rot90(v):
    """Anticlockwise rotation by pi/2: (a, b) -> (-b, a).  Works on (..., 2) arrays."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def cross2(a, b):
    """Scalar cross product a_x b_y - a_y b_x on (..., 2) arrays."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def dot2(a, b):
    return np.sum(a * b, axis=-1)


# ---------------------------------------------------------------------------
# grid functions and finite differences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Values of a (possibly vector valued) function on the uniform grid on [0,1].

    ``values`` has shape (N+1,) for scalars or (N+1, d) for vector data.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape[0] < MIN_GRID + 1:
            raise GridError(f"grid needs at least {MIN_GRID + 1} nodes, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function contains non-finite entries")

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)


def stencil_weights(offsets, order):
    """Finite-difference weights (in units of h**-order) for integer node offsets."""
    offsets = np.asarray(offsets, dtype=float)
    p = len(offsets)
    if p <= order:
        raise GridError("stencil has too few points for derivative order")
    vand = np.vander(offsets, p, increasing=True).T  # vand[m, k] = offsets[k]**m
    rhs = np.zeros(p)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vand, rhs)


# interior centred half-widths per derivative order (all second-order accurate)
_HALF_WIDTH = {1: 1, 2: 1, 3: 2, 4: 2}


def finite_difference(g: GridFunction, order: int) -> GridFunction:
    """Second-order finite difference of derivative order 1..4.

    Interior nodes use centred stencils; the first/last ``hw`` nodes use
    stencils anchored at the boundary with order+2 points, which keeps
    second-order accuracy one-sidedly.
    """
    if order not in _HALF_WIDTH:
        raise ValueError(f"derivative order must be 1..4, got {order}")
    hw = _HALF_WIDTH[order]
    n = g.n
    if n < 2 * order + 4:
        raise GridError(f"grid too small for derivative order {order}")
    v = g.values
    scale = g.h ** (-order)
    out = np.empty_like(v)

    # subtract the anchor value inside each stencil: a no-op analytically
    # (the weights annihilate constants) but it keeps the h**-order scaling
    # from amplifying the constant-mode rounding error
    w = stencil_weights(np.arange(-hw, hw + 1), order)
    center = v[hw : n + 1 - hw]
    acc = w[0] * (v[0 : n + 1 - 2 * hw] - center)
    for m in range(1, 2 * hw + 1):
        acc = acc + w[m] * (v[m : n + 1 - 2 * hw + m] - center)
    out[hw : n + 1 - hw] = acc

    p = order + 2
    for j in range(hw):
        wl = stencil_weights(np.arange(p) - j, order)
        out[j] = np.tensordot(wl, v[:p] - v[j], axes=(0, 0))
        wr = stencil_weights(np.arange(-p + 1, 1) + (hw - 1 - j), order)
        out[n - hw + 1 + j] = np.tensordot(
            wr, v[n - p + 1 :] - v[n - hw + 1 + j], axes=(0, 0)
        )
    out *= scale
    return GridFunction(out)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveSample:
    """A planar curve on [0,1] with cached derivatives up to fourth order."""

    position: GridFunction
    derivatives: tuple  # GridFunctions of orders 1..4
    speed: GridFunction

    @classmethod
    def from_position(cls, values) -> "CurveSample":
        pos = values if isinstance(values, GridFunction) else GridFunction(np.asarray(values, dtype=float))
        if pos.values.ndim != 2 or pos.values.shape[1] != 2:
            raise ValueError("curve positions must have shape (N+1, 2)")
        derivs = tuple(finite_difference(pos, k) for k in range(1, 5))
        speed = GridFunction(np.linalg.norm(derivs[0].values, axis=1))
        return cls(pos, derivs, speed)

    @property
    def n(self) -> int:
        return self.position.n

    @property
    def h(self) -> float:
        return self.position.h

    def deriv(self, order: int) -> np.ndarray:
        if order == 0:
            return self.position.values
        return self.derivatives[order - 1].values

    def min_speed(self) -> float:
        return float(np.min(self.speed.values))

    def require_regular(self, floor: float = SPEED_FLOOR):
        ms = self.min_speed()
        if ms < floor:
            raise RegularityError(f"min |gamma_x| = {ms:.3e} below floor {floor:.1e}")


@dataclass(frozen=True)
class EnergyParams:
    """Parameters of the bending-plus-length energy; mu is the length weight."""

    mu: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise ValueError("mu must be finite")


def _curvature_chain(gx, gxx, gxxx, gxxxx):
    """Speed, frame, curvature and its first two x-derivatives from derivative data.

    All inputs have shape (..., 2).  Returns (w, tau, nu, k, k_x, k_xx)
    evaluated through closed-form differentiation of k = (gx x gxx)/|gx|^3,
    so that the same formulas apply to sampled arrays and endpoint jets.
    """
    w = np.sqrt(dot2(gx, gx))
    tau = gx / w[..., None]
    nu = rot90(tau)
    c2 = cross2(gx, gxx)
    c3 = cross2(gx, gxxx)
    b = dot2(gx, gxx)
    k = c2 / w**3
    k_x = c3 / w**3 - 3.0 * c2 * b / w**5
    a_x = cross2(gxx, gxxx) + cross2(gx, gxxxx)
    b_x = dot2(gxx, gxx) + dot2(gx, gxxx)
    k_xx = (
        a_x / w**3
        - 6.0 * c3 * b / w**5
        - 3.0 * c2 * b_x / w**5
        + 15.0 * c2 * b**2 / w**7
    )
    return w, tau, nu, k, k_x, k_xx


@dataclass(frozen=True)
class Frame:
    tau: GridFunction
    nu: GridFunction
    k: GridFunction
    k_s: GridFunction
    k_ss: GridFunction


def frame(curve: CurveSample, floor: float = SPEED_FLOOR) -> Frame:
    """Unit tangent/normal, curvature, and arclength derivatives k_s, k_ss.

    Sign convention: tau_s = k nu with nu the anticlockwise rotation of tau,
    so the anticlockwise unit circle has k = +1.
    """
    curve.require_regular(floor)
    w, tau, nu, k, k_x, k_xx = _curvature_chain(
        curve.deriv(1), curve.deriv(2), curve.deriv(3), curve.deriv(4)
    )
    b = dot2(curve.deriv(1), curve.deriv(2))
    k_s = k_x / w
    k_ss = k_xx / w**2 - k_x * b / w**4
    return Frame(
        tau=GridFunction(tau),
        nu=GridFunction(nu),
        k=GridFunction(k),
        k_s=GridFunction(k_s),
        k_ss=GridFunction(k_ss),
    )


def elastic_energy(curve: CurveSample, params: EnergyParams) -> float:
    """Integral of (k^2 + mu) ds by composite trapezoid on the grid."""
    fr = frame(curve)
    integrand = (fr.k.values**2 + params.mu) * curve.speed.values
    return float(np.trapezoid(integrand, dx=curve.h))


def curve_length(curve: CurveSample) -> float:
    return float(np.trapezoid(curve.speed.values, dx=curve.h))


# ---------------------------------------------------------------------------
# endpoint jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveJet:
    """Derivatives of order 0..4 of a curve at one parameter value.

    Carries exactly the data the junction conditions see.  Jets may come
    from analytic constructions (exact) or be extracted from the sampled
    derivative arrays (second-order accurate).
    """

    point: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    _geo: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("point", "d1", "d2", "d3", "d4"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        geo = _curvature_chain(self.d1, self.d2, self.d3, self.d4)
        object.__setattr__(self, "_geo", geo)

    @property
    def speed(self) -> float:
        return float(self._geo[0])

    @property
    def tau(self) -> np.ndarray:
        return self._geo[1]

    @property
    def nu(self) -> np.ndarray:
        return self._geo[2]

    @property
    def k(self) -> float:
        return float(self._geo[3])

    @property
    def k_s(self) -> float:
        return float(self._geo[4] / self.speed)

    @property
    def k_ss(self) -> float:
        w, _, _, _, k_x, k_xx = self._geo
        b = float(np.dot(self.d1, self.d2))
        return float(k_xx / w**2 - k_x * b / w**4)


def endpoint_jet(curve: CurveSample, end: int) -> CurveJet:
    """Jet of the sampled curve at end 0 (x=0) or end 1 (x=1)."""
    j = 0 if end == 0 else curve.n
    return CurveJet(
        point=curve.deriv(0)[j],
        d1=curve.deriv(1)[j],
        d2=curve.deriv(2)[j],
        d3=curve.deriv(3)[j],
        d4=curve.deriv(4)[j],
    )


# ---------------------------------------------------------------------------
# parabolic Hoelder seminorms (diagnostics)
# ---------------------------------------------------------------------------

def holder_seminorm(times, values, rho: float, direction: str = "time") -> float:
    """Discrete parabolic Hoelder seminorm of a time-indexed grid family.

    ``values`` has shape (n_times, n_nodes); ``times`` the corresponding
    time stamps.  direction="time" takes the sup of |u(t,x)-u(s,x)|/|t-s|^rho
    over slice pairs, direction="space" the sup of |u(t,x)-u(t,y)|/|x-y|^rho
    over node pairs.  Diagnostic only.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    nt, nx = values.shape
    if direction == "time":
        if nt < 2:
            raise ValueError("need at least two time slices")
        best = 0.0
        for i in range(nt):
            for j in range(i + 1, nt):
                dt = abs(times[j] - times[i])
                if dt == 0.0:
                    continue
                diff = np.max(np.abs(values[j] - values[i]))
                best = max(best, diff / dt**rho)
        return best
    if direction == "space":
        if nx < 2:
            raise ValueError("need at least two nodes")
        xs = np.linspace(0.0, 1.0, nx)
        dx = np.abs(xs[:, None] - xs[None, :])
        best = 0.0
        for t in range(nt):
            diff = np.abs(values[t][:, None] - values[t][None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                quot = np.where(dx > 0.0, diff / dx**rho, 0.0)
            best = max(best, float(np.max(quot)))
        return best
    raise ValueError("direction must be 'time' or 'space'")
