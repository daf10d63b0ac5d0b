import json

import pandas as pd
import pytest
from click.testing import CliRunner
from loguru import logger

from denseorbit.errors import SearchExhaustedError
from denseorbit.services.search_service import SearchService
from run import cli

SPEC = {
    "preset": "minkowski-3-1",
    "l": [0, 0, 1, 0],
    "target": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.3333333]],
    "epsilon": 0.01,
}


@pytest.fixture
def runner():
    yield CliRunner()
    # the CLI points loguru at the runner's stderr
    logger.remove()


def _invoke(runner, *args):
    return runner.invoke(cli, ["--log-level", "ERROR", *args])


@pytest.fixture
def spec_path(tmp_path):
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(SPEC))
    return path


def test_search_then_verify(runner, spec_path, tmp_path):
    cert_path = tmp_path / "cert.json"
    trace_path = tmp_path / "trace.csv"
    result = _invoke(runner, "search", str(spec_path), "--output", str(cert_path), "--trace", str(trace_path))
    assert result.exit_code == 0, result.output
    data = json.loads(cert_path.read_text())
    assert data["status"] == "ok"
    assert trace_path.exists() and trace_path.with_suffix(".json").exists()

    verified = _invoke(runner, "verify", str(cert_path))
    assert verified.exit_code == 0
    assert "accepted" in verified.output


def test_verify_rejects_tampered_certificate(runner, spec_path, tmp_path):
    cert_path = tmp_path / "cert.json"
    assert _invoke(runner, "search", str(spec_path), "--output", str(cert_path)).exit_code == 0
    data = json.loads(cert_path.read_text())
    data["epsilon"] = 1e-12
    cert_path.write_text(json.dumps(data))
    result = _invoke(runner, "verify", str(cert_path))
    assert result.exit_code == 3
    assert "(e)" in result.output


def test_verify_unreadable_certificate(runner, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    result = _invoke(runner, "verify", str(broken))
    assert result.exit_code == 1
    assert "malformed certificate" in result.output
    assert _invoke(runner, "verify", str(tmp_path / "missing.json")).exit_code == 1


def test_search_reports_invalid_specs(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"preset": "minkowski-3-1", "l": [1, 0, 0, 0]}))
    result = _invoke(runner, "search", str(bad))
    assert result.exit_code == 1
    assert "target" in result.output
    assert _invoke(runner, "search", str(tmp_path / "missing.json")).exit_code == 1


def test_classify_hyperbolic(runner):
    result = _invoke(runner, "classify", "--matrix", "[[7,4,-8],[-4,-1,4],[-8,-4,9]]")
    assert result.exit_code == 0
    assert result.output.startswith("Hyperbolic")
    assert "5π/6" in result.output and "=π/6" in result.output


def test_classify_parabolic_and_bad_input(runner):
    result = _invoke(runner, "classify", "--matrix", "[[1,2,-2],[-2,-1,2],[-2,-2,3]]")
    assert result.output.strip() == "Parabolic θ=π/2"
    assert _invoke(runner, "classify", "--matrix", "[[2,0,0],[0,1,0],[0,0,1]]").exit_code == 1
    assert _invoke(runner, "classify", "--matrix", "[[1,0").exit_code == 1


def test_orbit_csv(runner, tmp_path):
    out = tmp_path / "orbit.csv"
    result = _invoke(runner, "orbit", "--depth", "1", "--output", str(out))
    assert result.exit_code == 0
    df = pd.read_csv(out)
    assert list(df.columns) == ["word_length", "word", "theta1", "theta2", "distance_to_target"]
    assert df.loc[0, "word"] == "1"
    assert df.loc[0, "distance_to_target"] == pytest.approx(0.0, abs=1e-9)
    assert set(df["word_length"]) == {0, 1}


def test_classify_identity_and_boost(runner):
    assert _invoke(runner, "classify", "--matrix", "[[1,0,0],[0,1,0],[0,0,1]]").output.strip() == "Identity"
    boost = '[["5/4",0,"3/4"],[0,1,0],["3/4",0,"5/4"]]'
    assert _invoke(runner, "classify", "--matrix", boost).output.strip() == "Hyperbolic θ₊=0 θ₋=π"


def test_search_with_isotropic_l(runner, tmp_path):
    spec = {"preset": "minkowski-2-1", "l": [0, -1, 1], "target": [[1, 0, 1], [4, 3, 5]], "epsilon": 0.1}
    path = tmp_path / "isotropic.json"
    path.write_text(json.dumps(spec))
    cert_path = tmp_path / "cert.json"
    result = _invoke(runner, "search", str(path), "--output", str(cert_path))
    assert result.exit_code == 0, result.output
    data = json.loads(cert_path.read_text())
    assert data["status"] == "ok"
    assert _invoke(runner, "verify", str(cert_path)).exit_code == 0


def test_search_names_a_missing_l(runner, tmp_path):
    bad = tmp_path / "no_l.json"
    bad.write_text(json.dumps({"preset": "minkowski-3-1", "target": SPEC["target"]}))
    result = _invoke(runner, "search", str(bad))
    assert result.exit_code == 1
    assert "l:" in result.output


def test_exhausted_search_reports_best_distance(runner, spec_path, monkeypatch):
    class Partial:
        distance = 0.25

    def exhausted(self, spec, denom_bound=None, **overrides):
        raise SearchExhaustedError("no anchor for the identity plane", best=Partial())

    monkeypatch.setattr(SearchService, "search", exhausted)
    result = _invoke(runner, "search", str(spec_path))
    assert result.exit_code == 2
    assert "best distance achieved 0.25" in result.output
