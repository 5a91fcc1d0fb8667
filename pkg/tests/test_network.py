import numpy as np
import pytest
from scipy.interpolate import make_interp_spline
from scipy.spatial import cKDTree

from elastinet.geometry import CurveSample, EnergyParams
from elastinet.network import (
    THETA,
    TRIOD,
    JunctionAngles,
    NetworkState,
    ReparametrizationError,
    TopologyError,
    build_reparametrization,
    compatibility_residual,
    geometric_admissibility,
    junction_residuals_c0,
    junction_residuals_c1,
    junction_velocity_split,
    normal_span_measure,
    parametric_admissibility,
    transform_network,
    vector_angle,
)
from elastinet.scenarios import (
    theta_degenerate,
    theta_random,
    theta_symmetric,
    triod_perturbed,
    triod_straight,
)


def test_vector_angle():
    assert vector_angle([1, 0], [0, 1]) == pytest.approx(np.pi / 2)
    assert vector_angle([1, 0], [-1, 0]) == pytest.approx(np.pi)


@pytest.mark.parametrize("seed", range(8))
def test_sector_angle_identity(seed):
    # sin(a1) tau1 + sin(a2) tau2 + sin(a3) tau3 = 0 for any three directions
    rng = np.random.default_rng(seed)
    while True:
        th = rng.uniform(0, 2 * np.pi, size=3)
        if np.min(np.abs(np.diff(np.sort(th)))) > 1e-3:
            break
    taus = np.column_stack([np.cos(th), np.sin(th)])
    ang = JunctionAngles.from_tangents(taus)
    assert ang.alpha1 + ang.alpha2 + ang.alpha3 == pytest.approx(2 * np.pi)
    combo = ang.sines @ taus
    assert np.linalg.norm(combo) < 1e-12


def test_symmetric_triple_junction_angles():
    taus = np.array(
        [[np.cos(a), np.sin(a)] for a in (0.0, 2 * np.pi / 3, -2 * np.pi / 3)]
    )
    ang = JunctionAngles.from_tangents(taus)
    assert ang.alpha1 == pytest.approx(2 * np.pi / 3)
    assert ang.alpha2 == pytest.approx(2 * np.pi / 3)
    assert ang.alpha3 == pytest.approx(2 * np.pi / 3)


def test_network_state_validation():
    c = triod_straight(32).curves
    with pytest.raises(ValueError):
        NetworkState(c[:2], TRIOD)
    with pytest.raises(ValueError):
        NetworkState(c, "tetra")


def test_triod_fixed_endpoints_default():
    net = triod_straight(32)
    ends = np.array([c.deriv(0)[-1] for c in net.curves])
    assert np.allclose(net.fixed_endpoints, ends)


def test_exact_jets_override_fd():
    net = theta_symmetric(64)
    exact = net.jet(0, 0)
    bare = NetworkState(net.curves, net.topology, None, None)
    fd = bare.jet(0, 0)
    assert np.allclose(exact.d1, fd.d1, atol=1e-3)
    assert not np.array_equal(exact.d3, fd.d3)


def test_scenarios_are_admissible():
    for net, params, flavor in (
        (theta_symmetric(64), EnergyParams(1.0), "c0"),
        (triod_straight(64), EnergyParams(1.0), "c1"),
        (triod_perturbed(64), EnergyParams(1.0), "c1"),
        (theta_random(64, 1.0, seed=1), EnergyParams(1.0), "c0"),
    ):
        rep = geometric_admissibility(net, params, flavor)
        assert rep.passed, rep.lines()


def test_parametric_admissibility_of_builders():
    params = EnergyParams(1.0)
    rep = parametric_admissibility(theta_symmetric(64), params, "c0")
    assert rep.passed, rep.lines()
    rep = parametric_admissibility(triod_straight(64), params, "c1")
    assert rep.passed, rep.lines()


def test_flavor_topology_mismatch():
    params = EnergyParams(1.0)
    with pytest.raises(TopologyError):
        geometric_admissibility(triod_straight(32), params, "c0")
    with pytest.raises(TopologyError):
        parametric_admissibility(theta_symmetric(32), params, "c1")


def test_degenerate_theta_span():
    net = theta_degenerate(64)
    assert normal_span_measure(net, 0) < 1e-12
    rep = geometric_admissibility(net, EnergyParams(1.0), "c0")
    assert not rep.passed


def test_junction_residual_reports():
    params = EnergyParams(1.0)
    r0 = junction_residuals_c0(theta_symmetric(64), params)
    assert max(r0.residuals.values()) < 1e-12
    r1 = junction_residuals_c1(triod_straight(64), params)
    assert max(r1.residuals.values()) < 1e-12


def test_transform_equivariance():
    params = EnergyParams(1.0)
    ang = 0.8
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    net = theta_random(64, 1.0, seed=2)
    moved = transform_network(net, rotation=rot, translation=[0.4, -1.2])
    r0 = geometric_admissibility(net, params, "c0").residuals
    r1 = geometric_admissibility(moved, params, "c0").residuals
    for key in r0:
        assert r1[key] == pytest.approx(r0[key], abs=1e-10)


def test_junction_velocity_split_consistent():
    params = EnergyParams(1.0)
    net = theta_random(64, 1.0, seed=4)
    from elastinet.velocity import jet_normal_scalar

    jets = [net.jet(i, 0) for i in range(3)]
    a_vals = [jet_normal_scalar(j, params) for j in jets]
    v, t, resid = junction_velocity_split(jets, a_vals)
    assert resid < 1e-9
    for i, j in enumerate(jets):
        assert np.allclose(a_vals[i] * j.nu + t[i] * j.tau, v, atol=1e-9)


def test_compatibility_residual_exact_scenarios():
    params = EnergyParams(1.0)
    assert compatibility_residual(theta_symmetric(64), params) < 1e-10
    assert compatibility_residual(theta_random(64, 1.0, seed=5), params) < 1e-9


# reparametrization -----------------------------------------------------------

def image_hausdorff(curve_a, curve_b, dense=4096):
    """Deviation between the image sets of two sampled curves."""
    xs = np.linspace(0.0, 1.0, dense)
    worst = 0.0
    for p, q in ((curve_a, curve_b), (curve_b, curve_a)):
        nodes = np.linspace(0.0, 1.0, p.n + 1)
        spl = make_interp_spline(nodes, p.deriv(0), k=5)
        tree = cKDTree(spl(xs))
        d, _ = tree.query(q.deriv(0))
        worst = max(worst, float(np.max(d)))
    return worst


def test_reparametrization_produces_admissible_parametrisation():
    params = EnergyParams(1.0)
    net = theta_random(128, 1.0, seed=0)
    new_net, rep = build_reparametrization(net, params)
    report = parametric_admissibility(new_net, params, "c0", tol=1e-6)
    assert report.passed, report.lines()
    assert rep.min_slope() > 0.0
    h = 1.0 / 128
    for old, new in zip(net.curves, new_net.curves):
        assert image_hausdorff(old, new) <= 10.0 * h**2


def test_reparametrization_rejects_degenerate():
    params = EnergyParams(1.0)
    with pytest.raises((ReparametrizationError, TopologyError)):
        build_reparametrization(theta_degenerate(64), params)


def test_reparametrization_fixes_tangential_second_order():
    params = EnergyParams(1.0)
    net = theta_random(128, 1.0, seed=6)
    before = junction_residuals_c0(net, params).residuals["tangential_second@0"]
    assert before > 1e-3  # scenario deliberately has tangential gamma_xx
    new_net, _ = build_reparametrization(net, params)
    after = junction_residuals_c0(new_net, params).residuals["tangential_second@0"]
    assert after < 1e-10
