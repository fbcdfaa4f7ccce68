"""Affine blender model: certificates, strip dichotomy, map consistency."""

import numpy as np
import pytest

from kan3.blender import (
    BlenderModel,
    CenterInterval,
    certify_cones,
    certify_geometry,
    consistency_with_kan,
    model_from_kan,
    model_map,
    strip_step,
    superposition_member,
    termination_bound,
    verify_dichotomy,
)
from kan3.errors import InvalidInterval, OutOfWindow, OutsideBranches, TooFewSamples
from kan3.kanmap import make_kan_map


@pytest.fixture(scope="module")
def m():
    return BlenderModel()


@pytest.fixture(scope="module")
def K():
    return make_kan_map(0.1)


def test_default_parameters(m):
    lam6 = (3.0 + 2.0 * np.sqrt(2.0)) ** 6
    assert m.lambda_pow == pytest.approx(lam6, rel=1e-12)
    assert m.mu == pytest.approx(np.exp(0.6), rel=1e-12)
    assert m.lam_prime == pytest.approx((m.mu + 1.0) / 2.0, rel=1e-12)
    assert 1.0 < m.lam_prime < m.mu


def test_saddles_are_fixed(m):
    for which, saddle in ((1, m.saddle_p), (2, m.saddle_o)):
        out = m.branch(saddle[None, :], which)
        assert np.max(np.abs(out - saddle)) < 1e-10


def test_branch_boxes_map_onto_cube(m):
    for which, box in ((1, m.gamma1), (2, m.gamma2)):
        corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(3, -1).T
        img = m.branch(corners, which)
        assert np.max(np.abs(img)) <= m.half + 1e-9
        # s and c coordinates contract strictly inside, u fills the cube
        assert np.max(np.abs(img[:, 1])) == pytest.approx(m.half, abs=1e-9)


def test_model_map_requires_a_branch(m):
    with pytest.raises(OutsideBranches):
        model_map(m, np.array([[0.0, 0.5, 0.5]]))  # u between the two slabs


def test_certify_geometry_default(m):
    rep = certify_geometry(m)
    assert rep["ok"]
    assert rep["two_components"]
    assert rep["branch_boxes_disjoint"]


def test_certify_geometry_degenerate_center():
    rep = certify_geometry(BlenderModel(mu=0.9))
    assert not rep["ok"]


def test_certify_geometry_degenerate_base():
    rep = certify_geometry(BlenderModel(lambda_pow=1.0))
    assert not rep["ok"]


def test_certify_cones(m):
    assert certify_cones(m)
    assert certify_cones(m, eps0=0.05)
    assert not certify_cones(m, eps0=10.0)
    assert not certify_cones(BlenderModel(lambda_pow=1.0))


def test_cone_certificate_monotone(m):
    for eps0 in (0.02, 0.1, 0.4):
        if certify_cones(m, eps0=eps0):
            assert certify_cones(m, eps0=eps0 / 2)


def test_strip_step_small_interval_grows(m):
    out = strip_step(m, CenterInterval(0.1, 0.2))
    assert out.status == "Grown"
    assert out.interval.a == pytest.approx(0.1 * m.mu)
    assert out.interval.width == pytest.approx(0.1 * m.mu)


def test_strip_step_right_interval_uses_second_branch(m):
    out = strip_step(m, CenterInterval(0.9, 0.95))
    assert out.status == "Grown"
    assert out.interval.a == pytest.approx(m.mu * (0.9 - 1.0) + 1.0)


def test_strip_step_wide_interval_hits_p(m):
    out = strip_step(m, CenterInterval(0.3, 0.9))
    assert out.status == "HitsP"
    assert out.image[0] < 0.0 < out.image[1]


def test_strip_step_rejects_bad_intervals(m):
    with pytest.raises(InvalidInterval):
        CenterInterval(0.5, 0.5)
    with pytest.raises(InvalidInterval):
        strip_step(m, CenterInterval(-0.1, 0.5))


def test_termination_bound_is_respected(m):
    for w0 in (1e-6, 1e-3, 0.1, 0.5):
        iv = CenterInterval(0.2, min(0.2 + w0, 0.999))
        bound = termination_bound(m, iv.width)
        steps = 0
        while True:
            out = strip_step(m, iv)
            steps += 1
            if out.status == "HitsP":
                break
            iv = out.interval
        assert steps <= bound


def test_verify_dichotomy_clean(m):
    rep = verify_dichotomy(m, n_samples=500)
    assert rep["ok"]
    assert rep["n_failures"] == 0
    assert rep["grown_ratio_min"] >= m.lam_prime


def test_superposition_member(m):
    u = np.linspace(-m.half, m.half, 100)
    flat = np.column_stack([np.zeros_like(u), u, np.full_like(u, 0.5)])
    assert superposition_member(m, flat)
    tilted = flat.copy()
    tilted[:, 2] = 0.5 + 0.2 * u  # tangent leaves the narrow cone
    assert not superposition_member(m, tilted)
    assert superposition_member(m, tilted, eps0=0.5)
    short = flat[:40]
    assert not superposition_member(m, short)  # does not span in u
    outside = flat.copy()
    outside[:, 2] = 1.5  # footprint outside (0, 1)
    assert not superposition_member(m, outside)
    with pytest.raises(TooFewSamples):
        superposition_member(m, flat[:1])


def test_consistency_with_kan(K):
    m = model_from_kan(K)
    sup = consistency_with_kan(K, m, n_samples=200)
    assert sup <= 1e-6


def test_consistency_rejects_wrong_mu(K):
    with pytest.raises(OutOfWindow):
        consistency_with_kan(K, BlenderModel(), n_samples=10)


def test_consistency_detects_missing_correction(K):
    # a model with the center translation removed must disagree by about nu
    m = model_from_kan(K)
    bad = BlenderModel(lambda_pow=m.lambda_pow, mu=m.mu)
    object.__setattr__(bad, "mu", m.mu)  # same parameters, then zero the shift
    K2 = make_kan_map(0.1)
    object.__setattr__(K2, "nu", 0.0)
    sup = consistency_with_kan(K2, m, n_samples=100)
    assert sup == pytest.approx(m.nu, rel=0.2)
