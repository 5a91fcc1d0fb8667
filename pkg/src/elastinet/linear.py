"""Linearized implicit-Euler systems and the well-posedness verifier.

The semi-implicit step solves, for each curve,

    (gamma^{n+1} - psi)/dt + c^i gamma^{n+1}_xxxx = f^i,   c^i = 2/|phi^i_x|^4,

with the 24 linearized boundary rows of the chosen flavor (12 per endpoint)
replacing the motion rows near the ends.  The frozen frames tau0, nu0 and
speeds |phi_x| come from the linearization state phi.

The Lopatinskii-Shapiro verifier assembles the 12x12 matrix of the boundary
conditions applied to the decaying solutions of lambda gamma +
gamma_xxxx/|phi_x|^4 = 0 on the half line and checks its smallest singular
value; the boundary conditions are well posed iff only the trivial decaying
solution exists, i.e. the matrix is nonsingular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import CurveSample, EnergyParams, stencil_weights
from .network import THETA, TRIOD, NetworkState, TopologyError

SOLVE_TOL = 1e-10


class SolveError(RuntimeError):
    """The assembled system could not be solved to tolerance."""


# unknown layout: scalar index of (curve i, component c, node j)
def _idx(i, c, j, npts):
    return (2 * i + c) * npts + j


_W4 = np.array([1.0, -4.0, 6.0, -4.0, 1.0])  # centred 4th derivative stencil


def _boundary_stencil(order, end, npts):
    """(node indices, weights in units h^-order) of the one-sided stencil."""
    p = order + 2
    if end == 0:
        nodes = np.arange(p)
        w = stencil_weights(nodes, order)
    else:
        nodes = npts - 1 - np.arange(p)[::-1]
        w = stencil_weights(np.arange(-p + 1, 1), order)
    return nodes, w


@dataclass(frozen=True)
class LinearizedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    npts: int
    flavor: str
    net0: NetworkState
    coeff: np.ndarray        # (3, N+1) implicit coefficients 2/|phi_x|^4
    dt: float

    def unknowns(self) -> int:
        return 6 * self.npts


def _frozen_frames(net0: NetworkState, end: int):
    jets = [net0.jet(i, end) for i in range(3)]
    speeds = np.array([j.speed for j in jets])
    taus = np.array([j.tau for j in jets])
    nus = np.array([j.nu for j in jets])
    return speeds, taus, nus


def assemble(net0: NetworkState, params: EnergyParams, flavor: str, dt: float,
             f=None, b=None, psi=None) -> LinearizedSystem:
    """Assemble one implicit-Euler step linearized at net0.

    f: per-curve (N+1, 2) bulk right hand sides (default 0).
    b: dict of boundary data; recognised keys
       ("third", end): (2,)  third order rhs,
       ("angle", 0): (2,), ("curvature", 0): float, ("tangential", 0): (3,)
       for the Triod junction.  Missing keys default to zero.
    psi: per-curve (N+1, 2) previous positions (default: net0 positions).
    """
    flavor = flavor.lower()
    if (flavor == "c0") != (net0.topology == THETA):
        raise TopologyError(f"flavor {flavor} does not match topology {net0.topology}")
    npts = net0.curves[0].n + 1
    n = npts - 1
    h = 1.0 / n
    if any(c.n != n for c in net0.curves):
        raise ValueError("all three curves must share one grid")
    if f is None:
        f = [np.zeros((npts, 2)) for _ in range(3)]
    if b is None:
        b = {}
    if psi is None:
        psi = [c.deriv(0) for c in net0.curves]

    coeff = np.array([2.0 / net0.curves[i].speed.values**4 for i in range(3)])

    rows, cols, vals = [], [], []
    rhs = np.zeros(6 * npts)
    row = 0

    def add(r, i, c, j, v):
        rows.append(r)
        cols.append(_idx(i, c, j, npts))
        vals.append(v)

    def add_deriv(r, i, c, end, order, scale):
        """Add scale * (d^order gamma^i_c / dx^order)(end) to row r."""
        nodes, w = _boundary_stencil(order, end, npts)
        for node, wt in zip(nodes, w):
            add(r, i, c, int(node), scale * wt / h**order)

    # motion rows: interior nodes 2..n-2
    for i in range(3):
        for c in range(2):
            for j in range(2, n - 1):
                add(row, i, c, j, 1.0 / dt)
                ci = coeff[i, j]
                for m in range(5):
                    add(row, i, c, j - 2 + m, ci * _W4[m] / h**4)
                rhs[row] = f[i][j, c] + psi[i][j, c] / dt
                row += 1

    def concurrency_rows(end):
        nonlocal row
        j = 0 if end == 0 else n
        for other in (1, 2):
            for c in range(2):
                add(row, 0, c, j, 1.0)
                add(row, other, c, j, -1.0)
                rhs[row] = 0.0
                row += 1

    def third_order_rows(end, speeds, nus):
        nonlocal row
        b3 = np.asarray(b.get(("third", end), np.zeros(2)), dtype=float)
        for r in range(2):
            for i in range(3):
                for c in range(2):
                    scale = -nus[i, c] * nus[i, r] / speeds[i] ** 3
                    add_deriv(row, i, c, end, 3, scale)
            rhs[row] = b3[r]
            row += 1

    if flavor == "c0":
        for end in (0, 1):
            speeds, taus, nus = _frozen_frames(net0, end)
            concurrency_rows(end)
            j = 0 if end == 0 else n
            for i in range(3):           # second order: gamma_xx = 0
                for c in range(2):
                    add_deriv(row, i, c, end, 2, 1.0)
                    rhs[row] = 0.0
                    row += 1
            third_order_rows(end, speeds, nus)
    else:
        # junction at x=0
        speeds, taus, nus = _frozen_frames(net0, 0)
        concurrency_rows(0)
        b_angle = np.asarray(b.get(("angle", 0), np.zeros(2)), dtype=float)
        for r in range(2):               # angle: -sum <g_x, nu> nu / |phi_x| = b1
            for i in range(3):
                for c in range(2):
                    add_deriv(row, i, c, 0, 1, -nus[i, c] * nus[i, r] / speeds[i])
            rhs[row] = b_angle[r]
            row += 1
        # curvature: sum <g_xx, nu>/|phi_x|^2 = b2
        for i in range(3):
            for c in range(2):
                add_deriv(row, i, c, 0, 2, nus[i, c] / speeds[i] ** 2)
        rhs[row] = float(b.get(("curvature", 0), 0.0))
        row += 1
        b_tang = np.asarray(b.get(("tangential", 0), np.zeros(3)), dtype=float)
        for i in range(3):               # tangential second order per curve
            for c in range(2):
                add_deriv(row, i, c, 0, 2, taus[i, c])
            rhs[row] = b_tang[i]
            row += 1
        third_order_rows(0, speeds, nus)
        # fixed endpoints and second order at x=1
        for i in range(3):
            for c in range(2):
                add(row, i, c, n, 1.0)
                rhs[row] = net0.fixed_endpoints[i, c]
                row += 1
        for i in range(3):
            for c in range(2):
                add_deriv(row, i, c, 1, 2, 1.0)
                rhs[row] = 0.0
                row += 1

    assert row == 6 * npts, f"row count {row} != {6 * npts}"
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(6 * npts, 6 * npts)
    )
    return LinearizedSystem(matrix, rhs, npts, flavor, net0, coeff, dt)


def imposed_residual(system: LinearizedSystem, net: NetworkState) -> float:
    """Max residual of the imposed (non-motion) rows at the solved network.

    The unknown vector is exactly the stacked node positions, so the row
    residuals can be recomputed from any NetworkState on the same grid.
    """
    npts = system.npts
    x = np.empty(6 * npts)
    for i in range(3):
        pos = net.curves[i].deriv(0)
        for c in range(2):
            x[_idx(i, c, 0, npts) : _idx(i, c, 0, npts) + npts] = pos[:, c]
    r = system.matrix @ x - system.rhs
    return float(np.max(np.abs(r[6 * (npts - 4) :])))


def solve(system: LinearizedSystem) -> NetworkState:
    """Direct sparse solve with iterative refinement."""
    try:
        lu = splu(system.matrix.tocsc())
    except RuntimeError as exc:
        raise SolveError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(system.rhs)
    for _ in range(2):  # refinement: boundary rows should hold to ~machine level
        r = system.rhs - system.matrix @ x
        x = x + lu.solve(r)
    if not np.all(np.isfinite(x)):
        raise SolveError("linear solve produced non-finite values (singular system?)")
    # backward error: the attainable residual scales with ||A|| ||x||
    resid = np.linalg.norm(system.matrix @ x - system.rhs)
    anorm = np.max(np.abs(system.matrix).sum(axis=1))
    scale = anorm * np.linalg.norm(x) + np.linalg.norm(system.rhs)
    if resid > SOLVE_TOL * max(1.0, scale):
        raise SolveError(f"linear solve backward error {resid / scale:.3e} above tolerance")
    npts = system.npts
    curves = []
    for i in range(3):
        pos = np.column_stack(
            [x[_idx(i, 0, 0, npts) : _idx(i, 0, 0, npts) + npts],
             x[_idx(i, 1, 0, npts) : _idx(i, 1, 0, npts) + npts]]
        )
        curves.append(CurveSample.from_position(pos))
    return NetworkState(tuple(curves), system.net0.topology, system.net0.fixed_endpoints)


# ---------------------------------------------------------------------------
# Lopatinskii-Shapiro verifier
# ---------------------------------------------------------------------------

def symbol_roots(lam: complex, speed: float):
    """The four roots p of p^4 = -lambda speed^4 with the decaying pair flagged.

    For Re(lambda) > 0 exactly two roots have Re(p) < 0; these are the decay
    rates of the half-line solutions e^{px}.
    """
    if lam.real <= 0.0:
        raise ValueError("need Re(lambda) > 0")
    if speed <= 0.0:
        raise ValueError("need positive speed")
    target = -lam * speed**4
    r = abs(target) ** 0.25
    base = np.angle(target) / 4.0
    roots = r * np.exp(1j * (base + 0.5 * np.pi * np.arange(4)))
    decaying = roots.real < 0.0
    assert int(decaying.sum()) == 2
    return roots, decaying


@dataclass(frozen=True)
class LSQuery:
    lam: complex
    speeds: np.ndarray     # (3,)
    taus: np.ndarray       # (3, 2)
    nus: np.ndarray        # (3, 2)
    flavor: str            # "c0" | "c1"
    endpoint: int          # 0 | 1 (only distinguishes the Triod cases)

    def __post_init__(self):
        if complex(self.lam).real <= 0.0:
            raise ValueError("need Re(lambda) > 0")


def ls_matrix(query: LSQuery) -> np.ndarray:
    """Boundary conditions applied to the 12 decaying basis solutions.

    Column (i, r, m): curve i following e^{p_{i,r} x} e_m with the other two
    curves zero.  Rows: the 12 boundary conditions of the flavor/endpoint.
    Nonsingularity of this matrix is the Lopatinskii-Shapiro condition.
    """
    lam = complex(query.lam)
    ps = []
    for i in range(3):
        roots, decaying = symbol_roots(lam, float(query.speeds[i]))
        ps.append(roots[decaying])
    # column data: value, first, second, third derivative at x=0
    cols = []
    for i in range(3):
        for r in range(2):
            p = ps[i][r]
            for m in range(2):
                e = np.zeros(2)
                e[m] = 1.0
                cols.append((i, e, p))
    mat = np.zeros((12, 12), dtype=complex)

    def fill(row, entries):
        """entries: function column -> scalar contribution."""
        for cidx, (i, e, p) in enumerate(cols):
            mat[row, cidx] = entries(i, e, p)

    row = 0
    w = np.asarray(query.speeds, dtype=float)
    nus = np.asarray(query.nus, dtype=float)
    taus = np.asarray(query.taus, dtype=float)

    if query.flavor == "c1" and query.endpoint == 1:
        # fixed endpoint and second order, per curve
        for j in range(3):
            for c in range(2):
                fill(row, lambda i, e, p, j=j, c=c: e[c] if i == j else 0.0)
                row += 1
        for j in range(3):
            for c in range(2):
                fill(row, lambda i, e, p, j=j, c=c: p**2 * e[c] if i == j else 0.0)
                row += 1
        return mat

    # concurrency (both flavors, junction end)
    for other in (1, 2):
        for c in range(2):
            fill(
                row,
                lambda i, e, p, other=other, c=c: (
                    e[c] if i == 0 else (-e[c] if i == other else 0.0)
                ),
            )
            row += 1

    if query.flavor == "c0":
        for j in range(3):           # second order, full vector
            for c in range(2):
                fill(row, lambda i, e, p, j=j, c=c: p**2 * e[c] if i == j else 0.0)
                row += 1
    else:
        for r in range(2):           # angle: sum <g_x, nu> nu / |phi_x|
            fill(
                row,
                lambda i, e, p, r=r: p * np.dot(e, nus[i]) * nus[i, r] / w[i],
            )
            row += 1
        fill(row, lambda i, e, p: p**2 * np.dot(e, nus[i]) / w[i] ** 2)  # curvature
        row += 1
        for j in range(3):           # tangential second order
            fill(row, lambda i, e, p, j=j: p**2 * np.dot(e, taus[i]) if i == j else 0.0)
            row += 1

    for r in range(2):               # third order (same form both flavors)
        fill(row, lambda i, e, p, r=r: p**3 * np.dot(e, nus[i]) * nus[i, r] / w[i] ** 3)
        row += 1
    assert row == 12
    return mat


DEFAULT_MODULI = (1e-2, 1.0, 1e2)
DEFAULT_ARGS = (-np.pi / 2 + 0.1, -np.pi / 4, 0.0, np.pi / 4, np.pi / 2 - 0.1)
LS_THRESHOLD = 1e-6


@dataclass(frozen=True)
class LSReport:
    lambdas: tuple
    sigma_min: dict        # (endpoint, lambda index) -> relative sigma_min
    verdict: bool
    threshold: float = LS_THRESHOLD

    def min_sigma(self) -> float:
        return min(self.sigma_min.values())

    def to_json(self) -> dict:
        return {
            "lambdas": [[lam.real, lam.imag] for lam in self.lambdas],
            "sigma_min": [
                {"endpoint": ep, "lambda_index": k, "value": v}
                for (ep, k), v in sorted(self.sigma_min.items())
            ],
            "threshold": self.threshold,
            "verdict": "pass" if self.verdict else "fail",
        }


def ls_verify(net0: NetworkState, params: EnergyParams, flavor: str,
              moduli=DEFAULT_MODULI, args=DEFAULT_ARGS,
              threshold: float = LS_THRESHOLD) -> LSReport:
    """Sample lambda over the default grid and check all boundary matrices."""
    flavor = flavor.lower()
    lambdas = tuple(
        complex(m * np.exp(1j * a)) for m in moduli for a in args
    )
    endpoints = (0, 1)
    sigma = {}
    for ep in endpoints:
        speeds, taus, nus = _frozen_frames(net0, ep)
        for k, lam in enumerate(lambdas):
            q = LSQuery(lam, speeds, taus, nus, flavor, ep)
            mat = ls_matrix(q)
            svals = np.linalg.svd(mat, compute_uv=False)
            sigma[(ep, k)] = float(svals[-1] / svals[0])
    verdict = min(sigma.values()) > threshold
    return LSReport(lambdas, sigma, verdict, threshold)
