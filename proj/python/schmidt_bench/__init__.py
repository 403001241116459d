"""Schmidt-mode and g2 simulation of high-gain parametric down-conversion."""

import json
from pathlib import Path

from ._core import (
    CalibrationFailed,
    ConfigError,
    DomainError,
    InvalidGain,
    InvalidSpectrum,
    SchmidtError,
    calibrate_gain,
    calibrate_kernel,
    double_gaussian_schmidt_number,
    double_gaussian_weights,
    estimate_g2,
    g2_auto,
    g2_cross,
    gain_transform,
    normalize,
    run_scenario,
    sample_single_beam,
    sample_twin_beams,
    schmidt_number,
    schmidt_weights,
    tensor_spectrum,
)

__all__ = [
    "CalibrationFailed",
    "ConfigError",
    "DomainError",
    "InvalidGain",
    "InvalidSpectrum",
    "SchmidtError",
    "calibrate_gain",
    "calibrate_kernel",
    "double_gaussian_schmidt_number",
    "double_gaussian_weights",
    "estimate_g2",
    "g2_auto",
    "g2_cross",
    "gain_transform",
    "normalize",
    "run_scenario",
    "run_scenario_file",
    "sample_single_beam",
    "sample_twin_beams",
    "schmidt_number",
    "schmidt_weights",
    "tensor_spectrum",
]


def run_scenario_file(path, workers=1, **overrides):
    """Run a scenario file; keyword overrides replace top-level config entries."""
    doc = json.loads(Path(path).read_text())
    doc.update(overrides)
    return run_scenario(json.dumps(doc), workers=workers)
