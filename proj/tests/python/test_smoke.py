import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import schmidt_bench as sb

ROOT = Path(__file__).resolve().parents[2]
SCENARIOS = sorted((ROOT / "scenarios").glob("*.json"))


def test_spectrum_functions():
    w = sb.normalize([1.0, 3.0])
    assert w.tolist() == [0.75, 0.25]
    assert sb.schmidt_number([0.5, 0.5]) == pytest.approx(2.0)
    assert sb.g2_auto(3.1) == pytest.approx(1.3226, abs=1e-4)
    assert sb.g2_cross(1.0, 1.0) == pytest.approx(3.0)
    joint = sb.tensor_spectrum([0.5, 0.5], [0.5, 0.5])
    assert joint.tolist() == [0.25] * 4
    g = sb.gain_transform([0.6, 0.4], 7.3)
    assert g["weights"].sum() == pytest.approx(1.0, abs=1e-12)
    assert g["weights"][0] > 0.6


def test_errors_map_to_python_exceptions():
    with pytest.raises(sb.InvalidSpectrum):
        sb.normalize([0.0, 0.0])
    with pytest.raises(ValueError):
        sb.g2_auto(0.5)
    with pytest.raises(sb.ConfigError):
        sb.run_scenario(json.dumps({"gain_scan": {}, "bogus": 1}))
    with pytest.raises(sb.CalibrationFailed):
        sb.calibrate_kernel(1e6, 7.3)


def test_kernel_matches_closed_form():
    r = 3.0
    w = sb.schmidt_weights(phase_matching_width_um=115.0 / r)
    closed = sb.double_gaussian_weights(r, 20)
    np.testing.assert_allclose(w[:20], closed, atol=1e-8)


def test_sampler_and_estimator():
    s1, s2 = sb.sample_single_beam([1.0], 100.0, pulses=100000, seed=3)
    assert s1.shape == (100000,)
    value, err = sb.estimate_g2(s1, s2)
    assert abs(value - 2.0) < 4 * err
    again = sb.sample_single_beam([1.0], 100.0, pulses=100000, seed=3, workers=3)
    np.testing.assert_array_equal(s1, again[0])

    c1, c2 = sb.sample_twin_beams([1.0], 1.0, pulses=200000, seed=4)
    value, err = sb.estimate_g2(c1, c2)
    assert abs(value - 3.0) < 4 * err


def test_gain_calibration():
    pts = [(p, 2.0 * math.sinh(1.6 * math.sqrt(p)) ** 2) for p in (1.0, 4.0, 9.0, 16.0)]
    fit = sb.calibrate_gain(pts)
    assert fit["coefficient"] == pytest.approx(1.6, abs=1e-3)


def test_run_scenario_gain_scan():
    doc = json.loads((ROOT / "scenarios" / "gain_scan.json").read_text())
    doc["sampler"]["monte_carlo"] = False
    result = sb.run_scenario(json.dumps(doc))
    g2 = result["rows"]["g2_analytic"]
    assert result["control_name"] == "gain"
    assert len(g2) == 12
    assert np.all(np.diff(g2) > 0)
    assert result["csv"].startswith("# schmidt-bench scan-gain")
    assert json.loads(result["metadata"])["command"] == "scan-gain"


@pytest.fixture(scope="module")
def schema():
    doc = json.loads((ROOT / "docs" / "scenario.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(doc)
    return doc


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.name)
def test_scenarios_match_schema(schema, path):
    jsonschema.validate(json.loads(path.read_text()), schema)


def test_schema_rejects_what_the_parser_rejects(schema):
    doc = json.loads((ROOT / "scenarios" / "gain_scan.json").read_text())
    doc["kernel"]["pump_wasit_um"] = 1.0
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, schema)
    with pytest.raises(sb.ConfigError):
        sb.run_scenario(json.dumps(doc))
