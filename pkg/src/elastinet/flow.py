"""Time integration of the network flows.

Each step relinearizes at the current state (phi = gamma^n) and solves the
implicit-Euler system of the linear module.  The bulk right hand side f is
the lower-order remainder of the motion law (the principal fourth-order
term is treated implicitly with frozen coefficient 2/|gamma^n_x|^4); the
boundary data b are the lagged nonlinear parts of the junction conditions,
so the nonlinear conditions are the fixed points of the imposed linearized
rows.

Step control is energy based: the energy is a Lyapunov function of the
continuous flow, so a step that increases it beyond tolerance is rejected
and retried with dt/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import EnergyParams, elastic_energy
from .linear import SolveError, assemble, solve
from .network import (
    NetworkState,
    junction_residuals_c0,
    junction_residuals_c1,
    normal_span_measure,
)
from .velocity import motion_rhs


@dataclass(frozen=True)
class FlowState:
    time: float
    net: NetworkState
    energy: float


@dataclass(frozen=True)
class SchemeConfig:
    dt_init: float = 1e-5
    dt_min: float = 1e-12
    t_final: float = 0.1
    energy_tol: float = 1e-8       # allowed relative energy increase per unit dt
    energy_slack: float = 1e-11    # absolute slack for solver roundoff near stationarity
    speed_floor: float = 1e-3      # regularity floor for termination
    max_steps: int = 100000
    snapshot_every: int = 0        # 0: no intermediate snapshots

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init):
            raise ValueError("need 0 < dt_min <= dt_init")
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")


@dataclass
class FlowTrace:
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)   # (time, NetworkState)
    termination: str = ""

    def rows(self):
        """CSV rows: t, energy, residuals, min_speed."""
        out = []
        for t, e, rep in zip(self.times, self.energies, self.reports):
            out.append(
                (
                    t,
                    e,
                    rep["res_concurrency"],
                    rep["res_angle"],
                    rep["res_curvature"],
                    rep["res_second"],
                    rep["res_third"],
                    rep["min_speed"],
                )
            )
        return out


def network_energy(net: NetworkState, params: EnergyParams) -> float:
    return sum(elastic_energy(c, params) for c in net.curves)


def boundary_data(net: NetworkState, params: EnergyParams, flavor: str) -> dict:
    """Lagged boundary right hand sides b(gamma^n) of the linearization.

    Chosen so that the exact nonlinear junction conditions are fixed points
    of the linearized rows: the third-order row
    -sum <g_xxx, nu> nu / w^3 = b matches sum(2 k_s nu - mu tau) = 0 (C0)
    resp. sum(2 k_s nu - k^2 tau) = 0 (C1) via
    <g_xxx, nu>/w^3 = k_s + 3 k <g_x,g_xx>/w^3.
    """
    b = {}
    mu = params.mu
    if flavor == "c0":
        for end in (0, 1):
            jets = [net.jet(i, end) for i in range(3)]
            acc = np.zeros(2)
            for j in jets:
                bb = float(np.dot(j.d1, j.d2))
                acc += 3.0 * j.k * bb / j.speed**3 * j.nu + 0.5 * mu * j.tau
            b[("third", end)] = -acc
    else:
        jets = [net.jet(i, 0) for i in range(3)]
        acc = np.zeros(2)
        for j in jets:
            bb = float(np.dot(j.d1, j.d2))
            acc += 3.0 * j.k * bb / j.speed**3 * j.nu + 0.5 * j.k**2 * j.tau
        b[("third", 0)] = -acc
        b[("angle", 0)] = sum(j.tau for j in jets)
        b[("curvature", 0)] = 0.0
        b[("tangential", 0)] = np.zeros(3)
    return b


def step(state: FlowState, dt: float, params: EnergyParams, flavor: str,
         iterations: int = 1) -> FlowState:
    """One semi-implicit step; raises SolveError on solver failure.

    iterations > 1 re-evaluates the lagged data f, b at the new state and
    resolves (fixed-point sweeps), removing the O(dt) lag of the boundary
    data; the default is the plain linearized step.
    """
    net = state.net
    psi = [c.deriv(0) for c in net.curves]
    lin_net = net
    for _ in range(max(1, iterations)):
        f = [motion_rhs(c, params).remainder.values for c in lin_net.curves]
        b = boundary_data(lin_net, params, flavor)
        system = assemble(lin_net, params, flavor, dt, f=f, b=b, psi=psi)
        new_net = solve(system)
        lin_net = new_net
    energy = network_energy(new_net, params)
    return FlowState(state.time + dt, new_net, energy)


def monitor(state: FlowState, params: EnergyParams, flavor: str) -> dict:
    """Energy, junction residuals, span measure, and minimal speed."""
    net = state.net
    rep = {"t": state.time, "energy": state.energy, "min_speed": net.min_speed()}
    if flavor == "c0":
        r = junction_residuals_c0(net, params).residuals
        rep["res_concurrency"] = max(r["concurrency@0"], r["concurrency@1"])
        rep["res_angle"] = 0.0
        rep["res_curvature"] = max(r["curvature@0"], r["curvature@1"])
        rep["res_second"] = max(r["second_order@0"], r["second_order@1"])
        rep["res_third"] = max(r["third_order@0"], r["third_order@1"])
        rep["normal_span"] = min(
            normal_span_measure(net, 0), normal_span_measure(net, 1)
        )
    else:
        r = junction_residuals_c1(net, params).residuals
        rep["res_concurrency"] = r["concurrency@0"]
        rep["res_angle"] = r["angle@0"]
        rep["res_curvature"] = r["curvature_sum@0"]
        rep["res_second"] = max(r["tangential_second@0"], r["second_order@1"])
        rep["res_third"] = r["third_order@0"]
        rep["res_endpoint"] = r["endpoint@1"]
    return rep


def run(initial: NetworkState, config: SchemeConfig, params: EnergyParams,
        flavor: str) -> FlowTrace:
    """Advance to t_final with adaptive step halving."""
    flavor = flavor.lower()
    trace = FlowTrace()
    state = FlowState(0.0, initial, network_energy(initial, params))
    e0 = state.energy
    trace.times.append(state.time)
    trace.energies.append(state.energy)
    trace.dts.append(0.0)
    trace.reports.append(monitor(state, params, flavor))
    if config.snapshot_every:
        trace.snapshots.append((state.time, state.net))

    dt = config.dt_init
    accepted = 0
    for _ in range(config.max_steps):
        if state.time >= config.t_final - 1e-14:
            trace.termination = "t_final"
            return trace
        dt = min(dt, config.t_final - state.time)
        try:
            candidate = step(state, dt, params, flavor)
            bound = config.energy_tol * dt * abs(e0) + config.energy_slack * max(1.0, abs(e0))
            ok = candidate.energy <= state.energy + bound
            ok = ok and candidate.net.min_speed() > 0.0
        except SolveError:
            ok = False
            candidate = None
        if not ok:
            dt *= 0.5
            if dt < config.dt_min:
                trace.termination = "dt_min"
                return trace
            continue
        state = candidate
        accepted += 1
        trace.times.append(state.time)
        trace.energies.append(state.energy)
        trace.dts.append(dt)
        trace.reports.append(monitor(state, params, flavor))
        if config.snapshot_every and accepted % config.snapshot_every == 0:
            trace.snapshots.append((state.time, state.net))
        if state.net.min_speed() < config.speed_floor:
            trace.termination = "regularity floor"
            return trace
    trace.termination = "max_steps"
    return trace
