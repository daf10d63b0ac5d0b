import dataclasses
import json

import pytest
import sympy as sp
from sympy import Matrix

from denseorbit.core.certificate import STATUS_OK, Certificate, verify_certificate
from denseorbit.core.search import SearchConfig, approximate_plane
from denseorbit.errors import SpecError
from denseorbit.models.presets import preset

NEAR_TARGET = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.3333333]]


@pytest.fixture(scope="module")
def certificate():
    lattice, generators = preset("minkowski-3-1")
    problem = (lattice.ambient, lattice, generators, [0, 0, 1, 0], NEAR_TARGET)
    return approximate_plane(problem, SearchConfig(epsilon=0.01, orbit_node_cap=500, max_word_length=4))


def test_certificate_is_accepted(certificate):
    assert certificate.status == STATUS_OK
    report = verify_certificate(certificate)
    assert report.accepted
    assert bool(report)
    assert report.reasons == []


def test_json_round_trip(certificate):
    text = certificate.to_json()
    data = json.loads(text)
    assert data["kind"] == "++"
    assert data["status"] == "ok"
    assert data["word"] == []
    restored = Certificate.from_json(text)
    assert restored.gram == certificate.gram
    assert restored.gamma == certificate.gamma
    assert restored.achieved_plane == certificate.achieved_plane
    assert restored.provenance == certificate.provenance
    assert restored.target == NEAR_TARGET
    assert verify_certificate(restored).accepted


def test_tampered_gamma_is_rejected(certificate):
    tampered = dataclasses.replace(certificate, gamma=sp.diag(2, 1, 1, 1))
    report = verify_certificate(tampered)
    assert not report.accepted
    assert any(r.startswith("(a)") for r in report.reasons)
    assert any(r.startswith("(b)") for r in report.reasons)


def test_plane_not_orthogonal_to_l_is_rejected(certificate):
    plane = Matrix([[1, 0], [0, 0], [0, 1], [0, 0]])
    report = verify_certificate(dataclasses.replace(certificate, achieved_plane=plane))
    assert any(r.startswith("(c)") for r in report.reasons)


def test_distance_above_epsilon_is_rejected(certificate):
    report = verify_certificate(dataclasses.replace(certificate, epsilon=1e-12))
    assert not report.accepted
    assert len(report.reasons) == 1
    assert report.reasons[0].startswith("(e)")


def test_misreported_distance_is_rejected(certificate):
    report = verify_certificate(dataclasses.replace(certificate, distance=0.0))
    assert [r[:3] for r in report.reasons] == ["(e)"]
    assert "recorded distance" in report.reasons[0]


def test_unknown_letter_is_rejected(certificate):
    report = verify_certificate(dataclasses.replace(certificate, word=[(len(certificate.generators), 1)]))
    assert any(r.startswith("(a)") and "does not name a generator" in r for r in report.reasons)


def test_incomplete_certificate_lists_missing_fields():
    with pytest.raises(SpecError) as info:
        Certificate.from_dict({"gram": [["1", "0"], ["0", "-1"]], "l": ["1", "0"]})
    assert "word: field required" in info.value.diagnostics
    assert "gamma: field required" in info.value.diagnostics
