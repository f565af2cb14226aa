import json

import pytest

from faultsig.simlab.detection import DetectionConfig
from faultsig.simlab.pipeline import DetectionReport, PipelineError, run_scenario
from faultsig.simlab.scenario import ControllerSettings, Scenario


def run(bundle, scenario, config=None):
    return run_scenario(scenario, bundle.model, bundle.components, bundle.table, config)


def test_reproducible_byte_for_byte(watertank_bundle):
    sc = Scenario(faults=(0.0, 0.0, 0.7), seed=3)
    assert run(watertank_bundle, sc).dumps() == run(watertank_bundle, sc).dumps()


def test_report_json_roundtrip(watertank_bundle):
    rep = run(watertank_bundle, Scenario(faults=(0.5, 0.0, 0.0)))
    back = DetectionReport.from_json(json.loads(rep.dumps()))
    assert back.dumps() == rep.dumps()
    assert rep.pattern == "{1}" and rep.status == "unique"
    assert "discrimination: {1}" in rep.summary()


def test_horizon_before_injection(watertank_bundle):
    rep = run(watertank_bundle, Scenario(faults=(0.5, 0.0, 0.0), t_inject=60.0, t_end=50.0))
    assert not rep.detected
    assert rep.summary().endswith("no fault detected")


@pytest.mark.parametrize("faults", [(0.0, 0.5, 0.0), (0.5, 0.0, 0.7), (0.0, 0.5, 0.1)])
def test_discrimination_after_detection(watertank_bundle, faults):
    rep = run(watertank_bundle, Scenario(faults=faults))
    assert rep.detected and rep.status == "unique"
    assert rep.discrimination_time >= rep.detection_time + 4 * rep.sampling


def test_noiseless_detection_epoch(watertank_bundle):
    # the newest `edge` knots are left out of each decision, so a fault is seen
    # at most `edge` samples after it enters the data
    cfg = DetectionConfig()
    for faults in [(0.5, 0.0, 0.0), (0.0, 0.5, 0.0), (0.0, 0.0, 0.7)]:
        rep = run(watertank_bundle, Scenario(faults=faults, noise_amp=0.0))
        assert 20.0 <= rep.detection_time <= 20.0 + cfg.edge * rep.sampling


def test_simulation_failure_is_stage_labelled(watertank_bundle):
    sc = Scenario(controller=ControllerSettings(constant_input=10.0), t_end=200.0)
    with pytest.raises(PipelineError) as info:
        run(watertank_bundle, sc)
    assert info.value.stage == "simulate"
    assert str(info.value).startswith("[simulate]")


def test_model_without_estimation_mapping(example1_bundle):
    with pytest.raises(PipelineError) as info:
        run(example1_bundle, Scenario())
    assert info.value.stage == "config"


def test_noise_level_handed_to_detector(watertank_bundle):
    rep = run(watertank_bundle, Scenario(noise_amp=3e-3, t_end=25.0))
    assert rep.config["noise_sigma"] == pytest.approx(1e-3)
    rep = run(watertank_bundle, Scenario(noise_amp=0.0, t_end=25.0))
    assert rep.config["noise_sigma"] == 0.0
