import numpy as np
import pytest

from opscale import quasimetric as qm
from opscale.covariance import FieldModel
from opscale.errors import CertificationError, DomainError
from opscale.psi import HomogeneousPsi, certify, make_custom_psi, make_tau_dual_psi
from opscale.specs import named_spec


def test_tau_dual_is_homogeneous_under_transpose(rng):
    spec = named_spec("S5")
    psi = make_tau_dual_psi(spec)
    x = rng.normal(size=(50, 2))
    r = 3.7
    scaled = x @ spec.transpose().exp_E(np.log(r)).T
    assert np.allclose(psi(scaled), r * psi(x), rtol=1e-10)
    assert psi.m_psi == psi.M_psi == 1.0


def test_certify_tau_dual_bounds():
    rep = certify(make_tau_dual_psi(named_spec("S4")), 1000, rng=0, starts=16)
    assert rep.passed
    assert rep.m_psi == pytest.approx(1.0, rel=1e-8)
    assert rep.M_psi == pytest.approx(1.0, rel=1e-8)


def test_certify_scaled_tau_dual():
    spec = named_spec("S2")
    base = make_tau_dual_psi(spec)
    psi = make_custom_psi(spec, lambda xi: 2.0 * base(xi))
    rep = certify(psi, 1000, rng=0, starts=16)
    assert rep.m_psi == pytest.approx(2.0, rel=1e-6)
    assert rep.M_psi == pytest.approx(2.0, rel=1e-6)
    assert psi.certified


def test_euclidean_norm_fails_homogeneity():
    spec = named_spec("S2")
    psi = make_custom_psi(spec, lambda xi: np.linalg.norm(xi, axis=1))
    with pytest.raises(CertificationError) as err:
        certify(psi, 1000, rng=0)
    assert err.value.prop == "homogeneity"


def test_asymmetric_psi_is_rejected():
    spec = named_spec("S1")
    dual = spec.transpose()
    psi = make_custom_psi(spec, lambda xi: qm.tau(dual, xi) * np.where(xi[:, 0] > 0, 1.0, 2.0))
    with pytest.raises(CertificationError) as err:
        certify(psi, 1000, rng=0)
    assert err.value.prop == "symmetry"


def test_model_refuses_uncertifiable_psi():
    spec = named_spec("S2")
    with pytest.raises(CertificationError):
        FieldModel(spec, make_custom_psi(spec, lambda xi: np.linalg.norm(xi, axis=1)))


def test_variant_validation():
    with pytest.raises(DomainError):
        HomogeneousPsi("other", named_spec("S1"))
    with pytest.raises(DomainError):
        HomogeneousPsi("custom", named_spec("S1"))
    with pytest.raises(DomainError):
        certify(make_tau_dual_psi(named_spec("S1")), 10)
