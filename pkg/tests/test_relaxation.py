import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ribbonlab import relaxation
from ribbonlab.material import Bilayer, ConstantDirector, MaterialParams, SplayBend, Twist
from ribbonlab.relaxation import Quadratic2, ThicknessProfile

K = 6 / math.pi**2
BETA_T = (math.pi**4 - 4 * math.pi**2 - 48) / (4 * math.pi**4)
# independent oracle value (see README); differs from the printed splay-bend constant
BETA_SB = 1.3 * (math.pi**4 - 96) / (16 * math.pi**4)

entries = st.floats(-3, 3)
mat2 = st.tuples(*[entries] * 4).map(lambda v: np.array(v).reshape(2, 2))
sym3 = st.tuples(*[st.floats(-0.2, 0.2)] * 6).map(
    lambda v: np.array([[v[0], v[5], v[4]], [v[5], v[1], v[3]], [v[4], v[3], v[2]]]))


@pytest.fixture
def form(params):
    return Quadratic2.from_params(params)


def random_bilayer(rng):
    def one():
        a = rng.normal(scale=0.1, size=(3, 3))
        return 0.5 * (a + a.T)
    return Bilayer(one(), one())


def test_q2_values(form):
    assert relaxation.q2(np.zeros((2, 2)), form) == 0
    assert relaxation.q2(np.eye(2), form) == pytest.approx(6.4, abs=1e-14)


@given(mat2)
def test_q2_nonnegative_and_blind_to_skew(G):
    form = Quadratic2(1.0, 0.3)
    W = np.array([[0, 1.7], [-1.7, 0]])
    v = relaxation.q2(G, form)
    assert v >= 0
    assert relaxation.q2(G + W, form) == pytest.approx(v, abs=1e-12)


def test_q2_matches_q3_relaxation(params, form, rng):
    G = rng.normal(size=(1000, 2, 2))
    closed = relaxation.q2(G, form)
    oracle = np.array([relaxation.q2_oracle(g, params) for g in G])
    assert np.max(np.abs(closed - oracle)) < 1e-12


def test_q2_oracle_examples(params):
    val, x = relaxation.q2_oracle(np.zeros((2, 2)), params, return_argmin=True)
    assert val == 0 and np.allclose(x, 0)
    assert relaxation.q2_oracle(np.eye(2), params) == pytest.approx(6.4, abs=1e-12)
    assert relaxation.q2_oracle(np.array([[0, 2.0], [-2.0, 0]]), params) == pytest.approx(0, abs=1e-14)


def test_twist_constants(params):
    m = relaxation.plate_model(Twist(), params)
    assert m.alpha_coeff == 1 / 12
    assert np.allclose(m.target_curvature, K * np.diag([-1, 1]), atol=1e-10)
    assert m.residual == pytest.approx(BETA_T, abs=1e-10)
    assert m.residual == pytest.approx(0.0254870, abs=1e-7)


@pytest.mark.parametrize("gamma", [0.1, 0.3, 0.45, 0.8])
def test_twist_residual_independent_of_gamma(gamma):
    m = relaxation.plate_model(Twist(), MaterialParams.from_gamma(gamma))
    assert m.residual == pytest.approx(BETA_T, abs=1e-10)


def test_splaybend_constants(params, form):
    m = relaxation.plate_model(SplayBend(), params)
    assert np.allclose(m.target_curvature, K * np.diag([-1, 0]), atol=1e-10)
    assert m.residual == pytest.approx(BETA_SB, abs=1e-10)
    orc = relaxation.relax_thickness_oracle(ThicknessProfile.from_texture(SplayBend(), params), form)
    assert orc.residual == pytest.approx(m.residual, abs=1e-8)


def test_constant_director_e3(params):
    m = relaxation.plate_model(ConstantDirector(np.array([0, 0, 1.0])), params)
    assert np.allclose(m.target_curvature, -np.eye(2) / 6, atol=1e-12)
    assert abs(m.residual) < 1e-14


def test_bilayer_example(params):
    m = relaxation.plate_model(Bilayer(np.diag([0.1, 0, 0]), np.zeros((3, 3))), params)
    assert np.allclose(m.target_curvature, np.diag([-0.15, 0]), atol=1e-12)
    assert m.residual == pytest.approx(0.001625, abs=1e-12)


def test_bilayer_closed_forms(params, form, rng):
    for _ in range(10):
        tex = random_bilayer(rng)
        m = relaxation.plate_model(tex, params)
        d = tex.M1[:2, :2] - tex.M2[:2, :2]
        assert np.allclose(m.target_curvature, -1.5 * d, atol=1e-12)
        assert m.residual == pytest.approx(relaxation.q2(d, form) / 16, abs=1e-12)


def test_equal_layers_reduce_to_plain_bending(params, form, rng):
    M = random_bilayer(rng).M1
    prof = ThicknessProfile.from_texture(Bilayer(M, M), params)
    orc = relaxation.relax_thickness_oracle(prof, form)
    assert np.max(np.abs(orc.target_curvature)) < 1e-12 and abs(orc.residual) < 1e-12
    G = rng.normal(size=(50, 2, 2))
    assert np.allclose(relaxation.qbar2_oracle(G, prof, form), relaxation.q2(G, form) / 12, atol=1e-12)


def test_constant_profile_gives_plain_bending(form):
    M = np.array([[0.3, -0.1], [-0.1, 0.2]])
    m = relaxation.relax_thickness(ThicknessProfile(lambda t: np.broadcast_to(M, np.shape(t) + (2, 2))), form)
    assert np.max(np.abs(m.target_curvature)) < 1e-14 and abs(m.residual) < 1e-14


@pytest.mark.parametrize("tex", [Twist(), SplayBend(), ConstantDirector(np.array([0.6, 0, 0.8])),
                                 Bilayer(np.diag([0.1, -0.05, 0.02]), np.zeros((3, 3)))])
def test_closed_form_matches_oracle(tex, params, form, rng):
    m = relaxation.plate_model(tex, params)
    prof = ThicknessProfile.from_texture(tex, params)
    orc = relaxation.relax_thickness_oracle(prof, form)
    assert np.allclose(orc.target_curvature, m.target_curvature, atol=1e-8)
    assert orc.residual == pytest.approx(m.residual, abs=1e-8)
    assert orc.alpha_coeff == pytest.approx(1 / 12, abs=1e-10)
    G = rng.normal(size=(1000, 2, 2))
    assert np.max(np.abs(relaxation.qbar2(G, m, form) - relaxation.qbar2_oracle(G, prof, form))) < 1e-8


def test_random_bilayers_match_oracle(params, form, rng):
    for _ in range(10):
        tex = random_bilayer(rng)
        m = relaxation.plate_model(tex, params)
        orc = relaxation.relax_thickness_oracle(ThicknessProfile.from_texture(tex, params), form)
        assert np.allclose(orc.target_curvature, m.target_curvature, atol=1e-8)
        assert orc.residual == pytest.approx(m.residual, abs=1e-8)


@given(sym3, sym3, mat2)
def test_oracle_density_nonnegative(M1, M2, G):
    params = MaterialParams()
    form = Quadratic2.from_params(params)
    prof = ThicknessProfile.from_texture(Bilayer(M1, M2), params)
    assert relaxation.qbar2_oracle(G, prof, form) >= -1e-12


@given(mat2, mat2)
def test_shift_covariance(C, S):
    params = MaterialParams()
    form = Quadratic2.from_params(params)
    C, S = 0.5 * (C + C.T), 0.5 * (S + S.T)
    prof = ThicknessProfile.from_texture(Twist(), params)
    base = relaxation.relax_thickness(prof, form)
    a = relaxation.relax_thickness(prof.shifted(const=C), form)
    b = relaxation.relax_thickness(prof.shifted(slope=S), form)
    assert np.allclose(a.target_curvature, base.target_curvature, atol=1e-10)
    assert a.residual == pytest.approx(base.residual, abs=1e-10)
    assert np.allclose(b.target_curvature, base.target_curvature - S, atol=1e-10)
    assert b.residual == pytest.approx(base.residual, abs=1e-10)


@pytest.mark.parametrize("tex", [Twist(), SplayBend(), ConstantDirector(np.array([0, 0, 1.0]))])
def test_density_at_target_is_residual(tex, params, form):
    m = relaxation.plate_model(tex, params)
    assert relaxation.qbar2(m.target_curvature, m, form) == pytest.approx(m.residual, abs=1e-10)
    assert m.residual >= -1e-12


def test_twist_density_at_zero(params, form):
    # (1/12) q2(diag(-k, k)) + beta_T = k^2/3 + beta_T
    m = relaxation.plate_model(Twist(), params)
    expected = K**2 / 3 + BETA_T
    assert expected == pytest.approx(0.1486788, abs=1e-7)
    assert relaxation.qbar2(np.zeros((2, 2)), m, form) == pytest.approx(expected, abs=1e-12)
    prof = ThicknessProfile.from_texture(Twist(), params)
    assert relaxation.qbar2_oracle(np.zeros((2, 2)), prof, form) == pytest.approx(expected, abs=1e-10)


def test_comparison_flags(params):
    twist = relaxation.paper_comparison(relaxation.plate_model(Twist(), params))
    assert not twist["any_discrepancy"]
    beta = next(e for e in twist["entries"] if e["quantity"] == "residual")
    assert beta["abs_gap"] < 1e-10
    director = relaxation.paper_comparison(relaxation.plate_model(ConstantDirector(np.array([0, 0, 1.0])), params))
    assert not director["any_discrepancy"]
    bil = relaxation.paper_comparison(relaxation.plate_model(Bilayer(np.diag([0.1, 0, 0]), np.zeros((3, 3))), params))
    flags = {e["quantity"]: e["discrepancy"] for e in bil["entries"]}
    assert flags == {"alpha_coeff": False, "target_curvature": False, "residual": True}
    sb = relaxation.paper_comparison(relaxation.plate_model(SplayBend(), params))
    res = next(e for e in sb["entries"] if e["quantity"] == "residual")
    assert res["discrepancy"] and res["oracle_value"] == pytest.approx(BETA_SB, abs=1e-10)


def test_bilayer_flag_tracks_sum_versus_difference(params):
    # printed residual uses the sum of the layers; it only agrees in magnitude when one layer's
    # in-plane block vanishes, and never in sign
    M = np.diag([0.1, 0.0, 0.0])
    cmp = relaxation.paper_comparison(relaxation.plate_model(Bilayer(M, np.zeros((3, 3))), params))
    res = next(e for e in cmp["entries"] if e["quantity"] == "residual")
    assert res["printed_value"] == pytest.approx(-res["oracle_value"], rel=1e-12)
