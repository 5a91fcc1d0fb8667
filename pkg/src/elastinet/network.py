"""Triple-junction networks: topology, junction conditions, admissibility.

A network consists of three curves.  For the Theta topology the curves meet
in triple junctions at both parameter ends; for the Triod they meet at x=0
and have fixed outer endpoints at x=1 (Navier conditions: prescribed
position, zero curvature).

All junction conditions are evaluated on endpoint jets.  Analytically
constructed networks carry exact jets and their residuals are limited only
by rounding; networks known through samples alone fall back on the
finite-difference jets of the geometry layer, which are second-order
accurate (hence the looser default tolerance for grid-derived data).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .geometry import (
    SPEED_FLOOR,
    CurveJet,
    CurveSample,
    EnergyParams,
    GridFunction,
    endpoint_jet,
)
from .velocity import jet_normal_scalar, jet_tangential_scalar

THETA = "theta"
TRIOD = "triod"

TOL_ANALYTIC = 1e-8   # admissibility tolerance for exact (jet-carrying) data
TOL_GRID = 1e-6       # tolerance for purely grid-derived data
SPAN_FLOOR = 1e-6     # smallest admissible normal-span singular value


class TopologyError(ValueError):
    """Operation applied to the wrong network topology."""


class ReparametrizationError(RuntimeError):
    """The admissible reparametrization cannot be constructed."""


@dataclass(frozen=True)
class NetworkState:
    """Three curves plus topology; optionally exact endpoint jets.

    ``jets[(i, end)]`` overrides the finite-difference jet of curve i at the
    given end (0 or 1) with exact Taylor data from an analytic construction.
    """

    curves: tuple
    topology: str
    fixed_endpoints: np.ndarray | None = None
    jets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.jets is None:
            object.__setattr__(self, "jets", {})
        if len(self.curves) != 3:
            raise ValueError("a network consists of exactly three curves")
        if self.topology not in (THETA, TRIOD):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == TRIOD:
            if self.fixed_endpoints is None:
                ends = np.array([c.deriv(0)[-1] for c in self.curves])
                object.__setattr__(self, "fixed_endpoints", ends)
            else:
                object.__setattr__(
                    self, "fixed_endpoints", np.asarray(self.fixed_endpoints, dtype=float)
                )

    def jet(self, i: int, end: int) -> CurveJet:
        exact = self.jets.get((i, end))
        return exact if exact is not None else endpoint_jet(self.curves[i], end)

    def junction_ends(self):
        return (0, 1) if self.topology == THETA else (0,)

    def min_speed(self) -> float:
        return min(c.min_speed() for c in self.curves)

    def positions(self):
        return [c.deriv(0) for c in self.curves]


def transform_network(net: NetworkState, rotation=None, translation=None) -> NetworkState:
    """Apply a rigid motion to the whole network (positions and jets)."""
    rot = np.eye(2) if rotation is None else np.asarray(rotation, dtype=float)
    shift = np.zeros(2) if translation is None else np.asarray(translation, dtype=float)
    curves = tuple(
        CurveSample.from_position(c.deriv(0) @ rot.T + shift) for c in net.curves
    )
    jets = {
        key: CurveJet(rot @ j.point + shift, rot @ j.d1, rot @ j.d2, rot @ j.d3, rot @ j.d4)
        for key, j in net.jets.items()
    }
    fixed = None
    if net.fixed_endpoints is not None:
        fixed = net.fixed_endpoints @ rot.T + shift
    return NetworkState(curves, net.topology, fixed, jets)


# ---------------------------------------------------------------------------
# junction angles
# ---------------------------------------------------------------------------

def vector_angle(u, v) -> float:
    """Unsigned angle in [0, pi] between two nonzero plane vectors."""
    cross = u[0] * v[1] - u[1] * v[0]
    return float(np.arctan2(abs(cross), float(np.dot(u, v))))


@dataclass(frozen=True)
class JunctionAngles:
    """Sector angles at a junction, each named opposite its curve.

    alpha1 is the sector between tau2 and tau3 not containing tau1, and so
    on cyclically; the three angles sum to 2 pi.  With this convention the
    junction identity sin(a1) tau1 + sin(a2) tau2 + sin(a3) tau3 = 0 holds
    for any three distinct directions.
    """

    alpha1: float
    alpha2: float
    alpha3: float

    @classmethod
    def from_tangents(cls, taus) -> "JunctionAngles":
        thetas = [float(np.arctan2(t[1], t[0])) for t in taus]
        two_pi = 2.0 * np.pi

        def sector(a, b, other):
            """Angle of the arc from direction a to b excluding `other`."""
            d = (thetas[b] - thetas[a]) % two_pi
            inside = (thetas[other] - thetas[a]) % two_pi
            return two_pi - d if inside < d else d

        return cls(
            alpha1=sector(1, 2, 0),
            alpha2=sector(2, 0, 1),
            alpha3=sector(0, 1, 2),
        )

    @property
    def sines(self):
        return np.array([np.sin(self.alpha1), np.sin(self.alpha2), np.sin(self.alpha3)])


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityReport:
    """Named residuals (want <= tolerance) and named minima (want >= floor)."""

    residuals: dict
    tolerance: float
    minima: dict = field(default_factory=dict)
    floor: float = SPAN_FLOOR

    @property
    def passed(self) -> bool:
        ok_res = all(v <= self.tolerance for v in self.residuals.values())
        ok_min = all(v >= self.floor for v in self.minima.values())
        return ok_res and ok_min

    def worst(self):
        if not self.residuals:
            return None
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]

    def merged(self, other: "AdmissibilityReport") -> "AdmissibilityReport":
        res = dict(self.residuals)
        res.update(other.residuals)
        mins = dict(self.minima)
        mins.update(other.minima)
        return AdmissibilityReport(res, min(self.tolerance, other.tolerance), mins, self.floor)

    def lines(self):
        out = []
        for name in sorted(self.residuals):
            v = self.residuals[name]
            flag = "ok" if v <= self.tolerance else "FAIL"
            out.append(f"  {name:<28s} {v:12.4e}  [{flag}]")
        for name in sorted(self.minima):
            v = self.minima[name]
            flag = "ok" if v >= self.floor else "FAIL"
            out.append(f"  {name:<28s} {v:12.4e}  [{flag}, floor]")
        return out


def _default_tol(net: NetworkState) -> float:
    return TOL_ANALYTIC if net.jets else TOL_GRID


# ---------------------------------------------------------------------------
# junction residuals
# ---------------------------------------------------------------------------

def _concurrency(jets) -> float:
    pts = [j.point for j in jets]
    return max(
        float(np.linalg.norm(pts[i] - pts[j])) for i in range(3) for j in range(i + 1, 3)
    )


def _third_order_c0(jets, mu: float) -> float:
    s = sum(2.0 * j.k_s * j.nu - mu * j.tau for j in jets)
    return float(np.linalg.norm(s))


def _third_order_c1(jets) -> float:
    s = sum(2.0 * j.k_s * j.nu - j.k**2 * j.tau for j in jets)
    return float(np.linalg.norm(s))


def junction_residuals_c0(net: NetworkState, params: EnergyParams, tol=None) -> AdmissibilityReport:
    """Residuals of the concurrency/second/tangential-second/third order
    conditions of the Theta flow at both junctions."""
    if net.topology != THETA:
        raise TopologyError("C0 junction residuals require a Theta network")
    res = {}
    for end in (0, 1):
        jets = [net.jet(i, end) for i in range(3)]
        res[f"concurrency@{end}"] = _concurrency(jets)
        res[f"curvature@{end}"] = max(abs(j.k) for j in jets)
        res[f"second_order@{end}"] = max(float(np.linalg.norm(j.d2)) for j in jets)
        res[f"tangential_second@{end}"] = max(
            abs(float(np.dot(j.d2, j.tau))) for j in jets
        )
        res[f"third_order@{end}"] = _third_order_c0(jets, params.mu)
    return AdmissibilityReport(res, tol if tol is not None else _default_tol(net))


def junction_residuals_c1(net: NetworkState, params: EnergyParams, tol=None) -> AdmissibilityReport:
    """Residuals of the Triod flow conditions: junction at x=0, Navier at x=1."""
    if net.topology != TRIOD:
        raise TopologyError("C1 junction residuals require a Triod")
    res = {}
    jets = [net.jet(i, 0) for i in range(3)]
    res["concurrency@0"] = _concurrency(jets)
    res["angle@0"] = float(np.linalg.norm(sum(j.tau for j in jets)))
    res["curvature_sum@0"] = abs(sum(j.k for j in jets))
    res["tangential_second@0"] = max(abs(float(np.dot(j.d2, j.tau))) for j in jets)
    res["third_order@0"] = _third_order_c1(jets)
    end_jets = [net.jet(i, 1) for i in range(3)]
    res["endpoint@1"] = max(
        float(np.linalg.norm(j.point - p)) for j, p in zip(end_jets, net.fixed_endpoints)
    )
    res["second_order@1"] = max(float(np.linalg.norm(j.d2)) for j in end_jets)
    return AdmissibilityReport(res, tol if tol is not None else _default_tol(net))


def normal_span_measure(net: NetworkState, end: int) -> float:
    """Smallest singular value of the 2x3 matrix of junction normals.

    Zero exactly when all three normals are parallel (the degenerate
    geometric situation in which the C0 problem loses well-posedness).
    """
    mat = np.column_stack([net.jet(i, end).nu for i in range(3)])
    return float(np.linalg.svd(mat, compute_uv=False)[-1])


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

def geometric_admissibility(net: NetworkState, params: EnergyParams, flavor: str,
                            tol=None) -> AdmissibilityReport:
    """Residuals of the geometric admissibility definitions.

    flavor "c0" (Theta): positive-angle/span, per-curve zero curvature,
    third order condition, sine-weighted balance of the normal velocities.
    flavor "c1" (Triod): 120-degree angles, curvature sum, third order
    condition, plain balance of the normal velocities, zero curvature at
    the fixed endpoints.
    """
    flavor = flavor.lower()
    tol = tol if tol is not None else _default_tol(net)
    res, mins = {}, {}
    if flavor == "c0":
        if net.topology != THETA:
            raise TopologyError("flavor c0 applies to Theta networks")
        for end in (0, 1):
            jets = [net.jet(i, end) for i in range(3)]
            res[f"concurrency@{end}"] = _concurrency(jets)
            res[f"curvature@{end}"] = max(abs(j.k) for j in jets)
            res[f"third_order@{end}"] = _third_order_c0(jets, params.mu)
            angles = JunctionAngles.from_tangents([j.tau for j in jets])
            a_vals = np.array([jet_normal_scalar(j, params) for j in jets])
            res[f"velocity_balance@{end}"] = abs(float(angles.sines @ a_vals))
            mins[f"normal_span@{end}"] = normal_span_measure(net, end)
    elif flavor == "c1":
        if net.topology != TRIOD:
            raise TopologyError("flavor c1 applies to Triods")
        jets = [net.jet(i, 0) for i in range(3)]
        res["concurrency@0"] = _concurrency(jets)
        res["angle@0"] = float(np.linalg.norm(sum(j.tau for j in jets)))
        res["curvature_sum@0"] = abs(sum(j.k for j in jets))
        res["third_order@0"] = _third_order_c1(jets)
        a_vals = [jet_normal_scalar(j, params) for j in jets]
        res["velocity_balance@0"] = abs(sum(a_vals))
        end_jets = [net.jet(i, 1) for i in range(3)]
        res["curvature@1"] = max(abs(j.k) for j in end_jets)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    mins["regularity"] = net.min_speed()
    return AdmissibilityReport(res, tol, mins)


def junction_velocity_split(jets, a_vals):
    """Common junction velocity V and tangential speeds solving
    A^i nu^i + T^i tau^i = V in the least-squares sense.

    Returns (V, T, residual); the system is consistent exactly when the
    (sine-weighted) balance of the A^i holds.
    """
    mat = np.zeros((6, 5))
    rhs = np.zeros(6)
    for i, j in enumerate(jets):
        mat[2 * i : 2 * i + 2, 0:2] = -np.eye(2)
        mat[2 * i : 2 * i + 2, 2 + i] = j.tau
        rhs[2 * i : 2 * i + 2] = -a_vals[i] * j.nu
    sol, _, _, _ = np.linalg.lstsq(mat, rhs, rcond=None)
    resid = float(np.linalg.norm(mat @ sol - rhs))
    return sol[0:2], sol[2:5], resid


def compatibility_residual(net: NetworkState, params: EnergyParams) -> float:
    """Maximal junction mismatch of the initial velocities A nu + T tau."""
    worst = 0.0
    for end in net.junction_ends():
        vecs = []
        for i in range(3):
            j = net.jet(i, end)
            a = jet_normal_scalar(j, params)
            t = jet_tangential_scalar(j, params)
            vecs.append(a * j.nu + t * j.tau)
        for i in range(3):
            for jdx in range(i + 1, 3):
                worst = max(worst, float(np.linalg.norm(vecs[i] - vecs[jdx])))
    return worst


def parametric_admissibility(net: NetworkState, params: EnergyParams, flavor: str,
                             tol=None) -> AdmissibilityReport:
    """Admissibility of the parametrisation: regularity, span/angle, the
    flavor's junction residuals, and the velocity compatibility condition."""
    flavor = flavor.lower()
    if flavor not in ("c0", "c1"):
        raise ValueError(f"unknown flavor {flavor!r}")
    if (flavor == "c0") != (net.topology == THETA):
        raise TopologyError(f"flavor {flavor} does not match topology {net.topology}")
    tol = tol if tol is not None else _default_tol(net)
    base = (
        junction_residuals_c0(net, params, tol)
        if flavor == "c0"
        else junction_residuals_c1(net, params, tol)
    )
    res = dict(base.residuals)
    res["compatibility"] = compatibility_residual(net, params)
    mins = {"regularity": net.min_speed()}
    if flavor == "c0":
        for end in (0, 1):
            mins[f"normal_span@{end}"] = normal_span_measure(net, end)
    return AdmissibilityReport(res, tol, mins)


# ---------------------------------------------------------------------------
# reparametrization (geometrically admissible -> admissible parametrisation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReparamMap:
    """Orientation-preserving reparametrizations theta^i of [0,1] with the
    endpoint Taylor data (theta, theta_x, theta_xx, theta_xxx, theta_xxxx)."""

    thetas: tuple           # three GridFunctions on the curve grids
    taylor: tuple           # per curve: {end: (t0, t1, t2, t3, t4)}
    radius: float

    def min_slope(self) -> float:
        slopes = []
        for th in self.thetas:
            slopes.append(np.min(np.diff(th.values)) / th.h)
        return float(min(slopes))


def _smoothstep(s):
    """C^4 step: 0 at 0, 1 at 1, derivatives 1..4 vanish at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s**5 * (126.0 - 420.0 * s + 540.0 * s**2 - 315.0 * s**3 + 70.0 * s**4)


def _theta_values(xs, taylor0, taylor1, radius):
    """Blend the two endpoint Taylor polynomials of theta into the identity."""
    def poly(ts, y):
        u = xs - y
        return ts[0] + ts[1] * u + ts[2] * u**2 / 2.0 + ts[3] * u**3 / 6.0 + ts[4] * u**4 / 24.0

    w0 = 1.0 - _smoothstep(xs / radius)
    w1 = 1.0 - _smoothstep((1.0 - xs) / radius)
    return xs + w0 * (poly(taylor0, 0.0) - xs) + w1 * (poly(taylor1, 1.0) - xs)


def _compose_jet(jet: CurveJet, ts) -> CurveJet:
    """Jet of sigma o theta at an endpoint with theta_x = 1 (Faa di Bruno)."""
    _, t1, t2, t3, t4 = ts
    assert abs(t1 - 1.0) < 1e-12
    d1 = jet.d1
    d2 = jet.d2 + jet.d1 * t2
    d3 = jet.d3 + 3.0 * jet.d2 * t2 + jet.d1 * t3
    d4 = jet.d4 + 6.0 * jet.d3 * t2 + jet.d2 * (3.0 * t2**2 + 4.0 * t3) + jet.d1 * t4
    return CurveJet(jet.point, d1, d2, d3, d4)


def _endpoint_taylor(net, params, i, end, t_target):
    """Taylor data of theta^i at one end: theta_x=1, theta_xx kills the
    tangential second derivative, theta_xxx=1, theta_xxxx matched to the
    target tangential velocity."""
    jet = net.jet(i, end)
    w = jet.speed
    tau = jet.tau
    t2 = -float(np.dot(jet.d2, tau)) / w
    t3 = 1.0
    partial = float(
        np.dot(
            jet.d4 + 6.0 * jet.d3 * t2 + jet.d2 * (3.0 * t2**2 + 4.0 * t3),
            tau,
        )
    )
    t4 = (t_target * w**4 / 2.0 - partial) / w
    return (float(end), 1.0, t2, t3, t4)


def build_reparametrization(net: NetworkState, params: EnergyParams,
                            flavor: str = "c0", balance_tol: float = 1e-8):
    """Construct reparametrizations turning a geometrically admissible
    network into an admissible parametrisation.

    Returns (reparametrized NetworkState, ReparamMap).  Raises
    ReparametrizationError when the velocity balance fails (the tangential
    compatibility system then has no solution) or no blending radius gives
    monotone maps.
    """
    flavor = flavor.lower()
    geo = geometric_admissibility(net, params, flavor)
    if not geo.passed:
        name, val = geo.worst()
        raise ReparametrizationError(
            f"input is not geometrically admissible ({name} = {val:.3e})"
        )

    # target tangential velocities at each junction end
    targets = {}
    for end in net.junction_ends():
        jets = [net.jet(i, end) for i in range(3)]
        a_vals = [jet_normal_scalar(j, params) for j in jets]
        scale = max(1.0, max(abs(a) for a in a_vals))
        _, t_vals, resid = junction_velocity_split(jets, a_vals)
        if resid > balance_tol * scale:
            raise ReparametrizationError(
                f"velocity balance violated at junction {end} (residual {resid:.3e})"
            )
        for i in range(3):
            targets[(i, end)] = float(t_vals[i])

    taylor = []
    for i in range(3):
        per_curve = {}
        for end in (0, 1):
            if (i, end) in targets:
                per_curve[end] = _endpoint_taylor(net, params, i, end, targets[(i, end)])
            else:
                # Triod fixed end: only kill the tangential second derivative
                jet = net.jet(i, end)
                t2 = -float(np.dot(jet.d2, jet.tau)) / jet.speed
                per_curve[end] = (float(end), 1.0, t2, 1.0, 0.0)
        taylor.append(per_curve)

    # shrink the blending radius until all three maps are strictly monotone
    radius = 0.25
    dense = np.linspace(0.0, 1.0, 4097)
    for _ in range(30):
        ok = True
        for i in range(3):
            th = _theta_values(dense, taylor[i][0], taylor[i][1], radius)
            if np.min(np.diff(th)) <= 1e-10:
                ok = False
                break
        if ok:
            break
        radius *= 0.5
    else:
        raise ReparametrizationError("no blending radius yields monotone maps")

    thetas, curves, jets = [], [], {}
    for i in range(3):
        curve = net.curves[i]
        xs = curve.position.nodes
        th = _theta_values(xs, taylor[i][0], taylor[i][1], radius)
        th[0], th[-1] = 0.0, 1.0
        spline = make_interp_spline(xs, curve.deriv(0), k=5, axis=0)
        new_pos = spline(np.clip(th, 0.0, 1.0))
        new_pos[0] = curve.deriv(0)[0]
        new_pos[-1] = curve.deriv(0)[-1]
        curves.append(CurveSample.from_position(new_pos))
        thetas.append(GridFunction(th))
        for end in (0, 1):
            jets[(i, end)] = _compose_jet(net.jet(i, end), taylor[i][end])

    new_net = NetworkState(tuple(curves), net.topology, net.fixed_endpoints, jets)
    rep = ReparamMap(tuple(thetas), tuple(taylor), radius)
    if rep.min_slope() <= 0.0:
        raise ReparametrizationError("composed map lost monotonicity on the grid")
    return new_net, rep
