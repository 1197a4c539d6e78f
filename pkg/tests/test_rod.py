import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ribbonlab import rod
from ribbonlab.errors import InvalidFrameError
from ribbonlab.geometry import integrate_frame
from ribbonlab.material import MaterialParams
from ribbonlab.rod import RodDensity, RodRegion

K = 6 / math.pi**2
MIN_VALUE = 0.0506486
thetas = st.floats(0, math.pi, exclude_max=True)


@pytest.fixture(scope="module")
def d0():
    return RodDensity.from_params(0.0, MaterialParams())


@given(thetas)
def test_rotated_target_matches_printed_form(theta):
    d = RodDensity(theta=theta, k=K, gamma=0.3, mu=1.0, beta_T=0.0254870)
    assert d.a_theta**2 + d.b_theta**2 == pytest.approx(1, abs=1e-12)
    assert np.allclose(d.rotated_target(), d.printed_target(), atol=1e-12)


def test_classification_examples(d0):
    assert rod.classify(0.2, 0.0, d0) is RodRegion.D
    assert rod.classify(0.0, 0.0, d0.with_theta(math.pi / 4)) is RodRegion.U
    for th in (0.0, 0.3, math.pi / 4, 2.0):
        assert rod.classify(0.0, 10.0, d0.with_theta(th)) is RodRegion.U
    assert rod.classify(K, 0.0, d0) is RodRegion.V


def test_classify_vectorized(d0):
    r = rod.classify(np.array([0.2, 0.0, K]), np.array([0.0, 10.0, 0.0]), d0)
    assert list(r) == ["D", "U", "V"]


@pytest.mark.parametrize("alpha, beta, value", [(-0.467636, 0.0, 0.0506486), (0.2, 0.0, 0.0911771),
                                                (K, 0.0, 0.175973)])
def test_density_examples(d0, alpha, beta, value):
    assert rod.rod_density(alpha, beta, d0) == pytest.approx(value, abs=1e-6)


def test_d_empty_at_diagonal_cuts():
    for th in (math.pi / 4, 3 * math.pi / 4):
        d = RodDensity.from_params(th, MaterialParams())
        A, B = np.meshgrid(np.linspace(-2, 2, 201), np.linspace(-2, 2, 201))
        assert not np.any(rod.classify(A, B, d) == "D")


@given(st.floats(-2, 2), st.floats(-2, 2), thetas)
def test_density_bounded_below_by_minimum(alpha, beta, theta):
    d = RodDensity.from_params(theta, MaterialParams())
    assert rod.rod_density(alpha, beta, d) >= rod.rod_min_set(d).value - 1e-12


@given(thetas, st.floats(0, 1))
def test_minimum_attained_on_whole_set(theta, frac):
    d = RodDensity.from_params(theta, MaterialParams())
    ms = rod.rod_min_set(d)
    a, b = ms.point(frac)
    assert rod.rod_density(a, b, d) == pytest.approx(ms.value, abs=1e-12)


def test_min_set_examples(d0):
    ms = rod.rod_min_set(d0)
    assert ms.alpha_interval == pytest.approx((-0.467636, 0.0), abs=1e-6)
    assert ms.beta == 0 and ms.value == pytest.approx(MIN_VALUE, abs=1e-7)
    ms = rod.rod_min_set(d0.with_theta(math.pi / 4))
    assert ms.alpha_interval == pytest.approx((-0.233818, 0.233818), abs=1e-6)
    assert ms.beta == pytest.approx(0.233818, abs=1e-6)


def test_min_value_identity(d0):
    # (mu/12) k^2 = 3 mu / pi^4
    g = 0.3
    assert rod.rod_min_set(d0).value == pytest.approx(3 / math.pi**4 * (1 + 2 * g) / (1 + g) + d0.beta_T / 2,
                                                      abs=1e-15)


@pytest.mark.parametrize("theta", [0.0, math.pi / 8, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
def test_brute_force_reproduces_minimum(theta):
    d = RodDensity.from_params(theta, MaterialParams())
    ms = rod.rod_min_set(d)
    br = rod.rod_min_brute(d)
    assert br.value == pytest.approx(ms.value, abs=1e-6)
    assert br.coverage(ms.alpha_interval) >= 0.95
    assert np.all(np.abs(br.argmin_beta - ms.beta) <= 2 * br.step)


def test_brute_force_respects_reflection():
    p = MaterialParams()
    b0 = rod.rod_min_brute(RodDensity.from_params(0.0, p))
    b90 = rod.rod_min_brute(RodDensity.from_params(math.pi / 2, p))
    assert b0.value == pytest.approx(b90.value, abs=1e-12)
    assert np.allclose(np.sort(-b0.argmin_alpha), np.sort(b90.argmin_alpha), atol=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 2.0])
def test_density_continuous_across_boundaries(theta):
    d = RodDensity.from_params(theta, MaterialParams())
    assert rod.continuity_jump(d) < 1e-5


def test_wrong_d_branch_constant_breaks_continuity():
    d = RodDensity.from_params(0.0, MaterialParams(), d_branch_ratio=0.5)
    assert rod.continuity_jump(d) > 1e-3


@given(st.floats(-2, 2), st.floats(-2, 2), thetas)
def test_symmetries(alpha, beta, theta):
    d = RodDensity.from_params(theta, MaterialParams())
    v = rod.rod_density(alpha, beta, d)
    assert rod.rod_density(-alpha, beta, d.with_theta(math.pi / 2 - theta)) == pytest.approx(v, abs=1e-12)
    assert rod.rod_density(-alpha, -beta, d.with_theta((theta + math.pi / 2) % math.pi)) == pytest.approx(v, abs=1e-12)


def test_branch_shapes(d0):
    h = 1e-3
    # affine in D: vanishing second differences
    a, b = 0.2, 0.01
    for da, db in ((h, 0), (0, h), (h, h)):
        second = (rod.rod_density(a + da, b + db, d0) - 2 * rod.rod_density(a, b, d0)
                  + rod.rod_density(a - da, b - db, d0))
        assert abs(second) < 1e-12
    # quadratic in beta and independent of alpha in U
    a, b = -0.1, 0.8
    assert rod.rod_density(a + h, b, d0) == pytest.approx(rod.rod_density(a, b, d0), abs=1e-14)
    third = (rod.rod_density(a, b + 2 * h, d0) - 3 * rod.rod_density(a, b + h, d0)
             + 3 * rod.rod_density(a, b, d0) - rod.rod_density(a, b - h, d0))
    assert abs(third) < 1e-12


def test_rod_energy_of_constant_frame(d0):
    s = np.linspace(-1, 1, 21)
    frame = rod.FrameField(s, np.broadcast_to(np.eye(3), (21, 3, 3)).copy())
    assert rod.rod_energy(frame, d0) == pytest.approx(2 * rod.rod_density(0.0, 0.0, d0), abs=1e-14)


def test_pure_torsion_band_at_diagonal_cut():
    d = RodDensity.from_params(math.pi / 4, MaterialParams())
    traj = integrate_frame(0.0, 0.233818116, length=2.0, n_samples=201)
    assert rod.rod_energy(traj.to_frame_field(), d) == pytest.approx(2 * MIN_VALUE, abs=1e-6)


@given(st.floats(-1, 1), st.floats(-1, 1), thetas)
def test_rod_energy_never_below_minimum(a, b, theta):
    d = RodDensity.from_params(theta, MaterialParams())
    traj = integrate_frame(lambda s: a * np.cos(s), b, length=2.0, n_samples=101)
    assert rod.rod_energy(traj.to_frame_field(), d) >= 2 * rod.rod_min_set(d).value - 1e-8


def test_inadmissible_frame_rejected(d0):
    s = np.linspace(-1, 1, 101)
    c, sn = np.cos(0.5 * s), np.sin(0.5 * s)
    # rotation about d3: in-plane bending d1'.d2 = 0.5
    R = np.zeros((101, 3, 3))
    R[:, 0, 0], R[:, 1, 0], R[:, 0, 1], R[:, 1, 1], R[:, 2, 2] = c, sn, -sn, c, 1
    with pytest.raises(InvalidFrameError):
        rod.rod_energy(rod.FrameField(s, R), d0)
    with pytest.raises(InvalidFrameError):
        rod.FrameField(s, 2 * R)
