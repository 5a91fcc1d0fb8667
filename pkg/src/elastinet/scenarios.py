"""Built-in initial networks with exactly solved junction data.

Each builder prescribes derivative data of orders 0..4 at both ends of each
curve so that the junction conditions of the chosen flavor hold in exact
arithmetic, then fills the curves with degree-9 Hermite polynomials matching
that data.  The exact endpoint jets are attached to the returned
NetworkState, so admissibility residuals are limited only by rounding.

Parametrization of an end: with unit frame (tau, nu) and speed w,
    sigma_x = w tau,  sigma_xx = beta tau,  sigma_xxx = p tau + q nu,
    sigma_xxxx = u tau + v nu,
which gives k = 0, k_s = q/w^3, normal velocity A = 2(wv - 6 beta q)/w^5
and tangential velocity T = (2u - 20 p beta/w + 30 beta^3/w^2 - mu beta w^2)/w^4.
The third-order condition fixes q, a chosen common junction velocity V fixes
v (via A = <V,nu>) and u (via T = <V,tau>), which makes the velocity
compatibility condition hold by construction.
"""

from __future__ import annotations

import numpy as np

from .geometry import CurveJet, CurveSample, rot90
from .network import THETA, TRIOD, NetworkState


def _hermite_coeffs(jet0, jet1):
    """Degree-9 polynomial coefficients matching derivatives 0..4 at 0 and 1.

    jet0/jet1: sequences of five (2,) arrays (value, d1..d4).  Returns a
    (10, 2) coefficient array in the monomial basis.
    """
    import math

    coeffs = np.zeros((10, 2))
    for m in range(5):
        coeffs[m] = np.asarray(jet0[m], dtype=float) / math.factorial(m)
    # remaining 5 coefficients from the derivative conditions at x=1
    mat = np.zeros((5, 5))
    rhs = np.zeros((5, 2))
    for m in range(5):
        for j in range(5, 10):
            mat[m, j - 5] = math.factorial(j) / math.factorial(j - m)
        acc = np.zeros(2)
        for j in range(m, 5):
            acc += math.factorial(j) / math.factorial(j - m) * coeffs[j]
        rhs[m] = np.asarray(jet1[m], dtype=float) - acc
    coeffs[5:] = np.linalg.solve(mat, rhs)
    return coeffs


def _poly_curve(jet0, jet1, n) -> CurveSample:
    coeffs = _hermite_coeffs(jet0, jet1)
    xs = np.linspace(0.0, 1.0, n + 1)
    pos = np.polynomial.polynomial.polyval(xs, coeffs)  # (2, N+1)
    return CurveSample.from_position(pos.T)


def _jet(data) -> CurveJet:
    return CurveJet(data[0], data[1], data[2], data[3], data[4])


def _network_from_jets(jet_data, topology, n, fixed=None) -> NetworkState:
    curves, jets = [], {}
    for i, (j0, j1) in enumerate(jet_data):
        curves.append(_poly_curve(j0, j1, n))
        jets[(i, 0)] = _jet(j0)
        jets[(i, 1)] = _jet(j1)
    return NetworkState(tuple(curves), topology, fixed, jets)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _quantize(x, bits: int = 46):
    """Round to ``bits`` significant bits so small integer multiples stay exact."""
    m, e = np.frexp(np.asarray(x, dtype=float))
    return np.ldexp(np.round(np.ldexp(m, bits)), e - bits)


def triod_straight(n: int = 128) -> NetworkState:
    """Three unit segments from the origin at 120 degrees: exactly stationary.

    The per-node step vector is quantized so every stored position is an
    exact multiple of it: the sampled data is exactly collinear, which keeps
    the h**-4-scaled difference stencils from manufacturing spurious velocity
    out of position round-off.
    """
    z = np.zeros(2)
    ks = np.arange(n + 1, dtype=float)
    curves, jets = [], {}
    for i, ang in enumerate(
        (np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 - 2 * np.pi / 3)
    ):
        step = _quantize(np.array([np.cos(ang), np.sin(ang)]) / n)
        curves.append(CurveSample.from_position(ks[:, None] * step[None, :]))
        d = n * step
        jets[(i, 0)] = CurveJet(z, d, z, z, z)
        jets[(i, 1)] = CurveJet(n * step, d, z, z, z)
    fixed = np.array([jets[(i, 1)].point for i in range(3)])
    return NetworkState(tuple(curves), TRIOD, fixed, jets)


def triod_perturbed(n: int = 128, amplitude: float = 0.05) -> NetworkState:
    """Straight Triod with a normal bump on curve 1.

    The bump profile (4x(1-x))^5 vanishes to fifth order at both ends, so
    all endpoint jets - hence all junction conditions - are unchanged.
    """
    base = triod_straight(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    bump = amplitude * (4.0 * xs * (1.0 - xs)) ** 5
    tau = base.jets[(0, 0)].d1
    nu = rot90(tau)
    pos = base.curves[0].deriv(0) + bump[:, None] * nu
    curves = (CurveSample.from_position(pos),) + tuple(base.curves[1:])
    return NetworkState(curves, TRIOD, base.fixed_endpoints, dict(base.jets))


def theta_symmetric(n: int = 128, mu: float = 1.0,
                    angle: float = np.pi / 3) -> NetworkState:
    """Reflection-symmetric Theta between junctions (0,0) and (1,0).

    The middle curve is the straight segment; the outer pair are sine arches
    y = a sin(pi x) + b sin(3 pi x) over [0, 1] leaving the junctions at
    +-angle.  Second and fourth derivatives vanish at the ends, the third is
    solved from the third-order condition, so the configuration is an
    admissible parametrisation with common junction velocity V = 0.  The
    low-frequency filler keeps higher derivatives moderate, so the discrete
    curvature chain stays accurate on coarse grids.
    """
    slope = np.tan(angle)
    w = np.hypot(1.0, slope)
    # third-order condition gives k_s(0) = -mu (2 cos + 1)/(4 sin) on the
    # upper curve, i.e. y'''(0) = -mu w^4 (2 + w) / (4 slope)
    k3 = slope / np.pi                                     # a + 3 b
    k27 = mu * w**4 * (2.0 + w) / (4.0 * slope * np.pi**3)  # a + 27 b
    b_coef = (k27 - k3) / 24.0
    a_coef = k3 - 3.0 * b_coef

    xs = np.linspace(0.0, 1.0, n + 1)
    arch = a_coef * np.sin(np.pi * xs) + b_coef * np.sin(3.0 * np.pi * xs)
    z = np.zeros(2)
    o0, o1 = np.zeros(2), np.array([1.0, 0.0])
    y1, y3 = np.pi * (a_coef + 3.0 * b_coef), -np.pi**3 * (a_coef + 27.0 * b_coef)

    curves, jets = [], {}
    for i, sgn in enumerate((1.0, 0.0, -1.0)):
        pos = np.column_stack([xs, sgn * arch])
        curves.append(CurveSample.from_position(pos))
        jets[(i, 0)] = CurveJet(o0, np.array([1.0, sgn * y1]), z,
                                np.array([0.0, sgn * y3]), z)
        jets[(i, 1)] = CurveJet(o1, np.array([1.0, -sgn * y1]), z,
                                np.array([0.0, -sgn * y3]), z)
    return NetworkState(tuple(curves), THETA, None, jets)


def theta_degenerate(n: int = 128) -> NetworkState:
    """Theta whose junction tangents are all horizontal (parallel normals).

    The degenerate geometric situation in which the C0 boundary conditions
    lose well-posedness; not admissible, intended for the LS verifier.
    """
    xs = np.linspace(0.0, 1.0, n + 1)
    bump = (4.0 * xs * (1.0 - xs)) ** 5
    e = np.array([1.0, 0.0])
    z = np.zeros(2)
    o0, o1 = np.zeros(2), np.array([1.0, 0.0])
    offsets = (0.4, 0.0, -0.4)
    curves, jets = [], {}
    for i, a in enumerate(offsets):
        pos = np.column_stack([xs, a * bump])
        curves.append(CurveSample.from_position(pos))
        jets[(i, 0)] = CurveJet(o0, e, z, z, z)
        jets[(i, 1)] = CurveJet(o1, e, z, z, z)
    return NetworkState(tuple(curves), THETA, None, jets)


def theta_random(n: int = 128, mu: float = 1.0, seed: int = 0,
                 beta_scale: float = 0.25) -> NetworkState:
    """Random geometrically admissible Theta with tangential gamma_xx.

    The second derivatives at the junctions are tangential but nonzero
    (random beta), so the network is geometrically admissible yet not an
    admissible parametrisation until reparametrized.
    """
    rng = np.random.default_rng(seed)
    for _ in range(64):
        net = _theta_random_attempt(n, mu, rng, beta_scale)
        if net is not None and net.min_speed() > 0.2:
            return net
    raise RuntimeError("could not draw a regular random Theta")


def _theta_random_attempt(n, mu, rng, beta_scale):
    o0, o1 = np.zeros(2), np.array([1.0, 0.0])
    base0 = np.array([0.9, 0.0, -0.9])
    base1 = np.array([-0.9, 0.0, 0.9])
    jet_data = [[None, None] for _ in range(3)]
    for end, (origin, base) in enumerate(((o0, base0), (o1, base1))):
        angles = base + rng.uniform(-0.25, 0.25, size=3)
        taus = np.column_stack([np.cos(angles), np.sin(angles)])
        nus = rot90(taus)
        speeds = rng.uniform(0.85, 1.2, size=3)
        betas = rng.uniform(-beta_scale, beta_scale, size=3)
        # avoid accidentally parallel normals (keeps the span measure healthy)
        if np.linalg.svd(nus.T, compute_uv=False)[-1] < 0.3:
            return None
        # third order: 2 sum (q_i/w_i^3) nu_i = mu sum tau_i, minimum norm
        mat = 2.0 * (nus / speeds[:, None] ** 3).T      # (2, 3)
        q, *_ = np.linalg.lstsq(mat, mu * taus.sum(axis=0), rcond=None)
        ps = rng.uniform(-0.5, 0.5, size=3)
        v_junc = rng.uniform(-0.5, 0.5, size=2)         # common junction velocity
        for i in range(3):
            w, beta, p = speeds[i], betas[i], ps[i]
            a_i = float(np.dot(v_junc, nus[i]))
            t_i = float(np.dot(v_junc, taus[i]))
            v = (a_i * w**5 / 2.0 + 6.0 * beta * q[i]) / w
            u = (t_i + 20.0 * p * beta / w**5 - 30.0 * beta**3 / w**6
                 + mu * beta / w**2) * w**4 / 2.0
            jet_data[i][end] = (
                origin,
                w * taus[i],
                beta * taus[i],
                p * taus[i] + q[i] * nus[i],
                u * taus[i] + v * nus[i],
            )
    return _network_from_jets([tuple(jd) for jd in jet_data], THETA, n)


BUILTIN_SCENARIOS = {
    "triod-straight": triod_straight,
    "triod-perturbed": triod_perturbed,
    "theta-symmetric": theta_symmetric,
    "theta-degenerate": theta_degenerate,
    "theta-random": theta_random,
}


def build_scenario(name: str, n: int = 128, mu: float = 1.0,
                   amplitude: float = 0.05, seed: int = 0) -> NetworkState:
    if name not in BUILTIN_SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}")
    if name == "triod-straight":
        return triod_straight(n)
    if name == "triod-perturbed":
        return triod_perturbed(n, amplitude)
    if name == "theta-symmetric":
        return theta_symmetric(n, mu)
    if name == "theta-degenerate":
        return theta_degenerate(n)
    return theta_random(n, mu, seed)
