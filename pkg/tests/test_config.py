import numpy as np
import pytest

from rtsim.config import ConfigError, load_scenario, parse_scenario


def minimal_config(**overrides):
    data = {
        "dt": 0.1,
        "max_steps": 50,
        "robots": [{"start": [0.0, 0.0], "targets": [0]}],
        "targets": [
            {"start": [1.0, 0.0], "policy": "constant-control", "value": [0.1, 0.0]}
        ],
    }
    data.update(overrides)
    return data


def test_minimal_config_parses_with_defaults():
    cfg = parse_scenario(minimal_config())
    assert cfg.dt == 0.1
    assert cfg.mode == "resilient"
    assert cfg.planner.w3 == 5.0
    assert cfg.q_scale == 1e-4
    assert cfg.robots[0].model.u_max == cfg.planner.u_max
    assert np.allclose(cfg.robots[0].model.control, 0.1 * np.eye(2))


def test_unknown_key_rejected_with_field_name():
    with pytest.raises(ConfigError) as exc:
        parse_scenario(minimal_config(tyop=1))
    assert "tyop" in str(exc.value)
    with pytest.raises(ConfigError, match="planner.w9"):
        parse_scenario(minimal_config(planner={"w9": 2.0}))
    with pytest.raises(ConfigError, match=r"robots\[0\].foo"):
        parse_scenario(minimal_config(robots=[{"start": [0, 0], "targets": [0], "foo": 1}]))


def test_validation_errors_name_fields():
    with pytest.raises(ConfigError, match="max_steps"):
        parse_scenario(minimal_config(max_steps=0))
    with pytest.raises(ConfigError, match="dt"):
        parse_scenario(minimal_config(dt=0.0))
    with pytest.raises(ConfigError, match="mode"):
        parse_scenario(minimal_config(mode="turbo"))
    with pytest.raises(ConfigError, match="eps1"):
        parse_scenario(minimal_config(planner={"eps1": 0.7}))


def test_assignment_must_cover_all_targets():
    data = minimal_config(
        targets=[
            {"start": [1.0, 0.0], "policy": "constant-control", "value": [0.1, 0.0]},
            {"start": [2.0, 0.0], "policy": "constant-control", "value": [0.1, 0.0]},
        ]
    )
    with pytest.raises(ConfigError, match="cover"):
        parse_scenario(data)


def test_scalar_covariance_reads_isotropic():
    data = minimal_config(
        sensing_zones=[{"mu": [0.0, 0.0], "cov": 0.3, "radius": 0.4}],
        comm_zones=[{"mu": [1.0, 1.0], "cov": [[0.2, 0.0], [0.0, 0.4]], "delta2": 0.5}],
    )
    cfg = parse_scenario(data)
    assert np.allclose(cfg.sensing_zones[0].sigma, 0.3 * np.eye(2))
    assert np.allclose(cfg.comm_zones[0].sigma, [[0.2, 0.0], [0.0, 0.4]])
    # comm zone ids follow sensing zone ids
    assert cfg.sensing_zones[0].id == 0
    assert cfg.comm_zones[0].id == 1


def test_zone_validation_propagates_field():
    data = minimal_config(sensing_zones=[{"mu": [0.0, 0.0], "cov": -0.3, "radius": 0.4}])
    with pytest.raises(ConfigError, match="sensing_zones"):
        parse_scenario(data)


def test_bundled_scenarios_load():
    for name in ("fig4_sensing", "fig6_comm", "fig7_combined", "fig9_benchmark"):
        cfg = load_scenario(name)
        assert cfg.max_steps == 300
        assert len(cfg.robots) == 2


def test_load_overrides():
    cfg = load_scenario("fig4_sensing", seed=7, mode="vanilla", max_steps=10)
    assert cfg.seed == 7
    assert cfg.mode == "vanilla"
    assert cfg.max_steps == 10


def test_missing_scenario_raises_filenotfound():
    with pytest.raises(FileNotFoundError):
        load_scenario("no_such_scenario")


def test_resolved_dict_round_trips_to_json():
    import json

    cfg = load_scenario("fig7_combined")
    doc = json.dumps(cfg.resolved_dict())
    assert "fig7" in doc
    assert json.loads(doc)["dt"] == 0.2
