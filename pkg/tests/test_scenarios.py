import numpy as np
import pytest

from fejerlab.errors import ConfigError
from fejerlab.geometry import Ray
from fejerlab.operators import Negation
from fejerlab.scenarios import (
    CheckDef,
    ScenarioSpec,
    TrajectoryDef,
    alternating_sequence,
    get_scenario,
    harmonic_rotation_sequence,
    list_scenarios,
    run_affine_limit_sweep,
    run_codim1_sweep,
    run_decoupling_sweep,
    run_scalar_averaged_sweep,
    run_scenario,
    run_two_ball_sweep,
)

EXPECTED_NAMES = {
    "alternating-pair",
    "harmonic-rotation",
    "negation-r1",
    "pazy-translation",
    "scalar-averaged-sweep",
    "affine-linear-limit",
    "codim1-reflection",
    "decoupling-demo",
    "dr-two-balls-r3",
    "open-problem-p1",
    "open-problem-p2",
    "open-problem-p3",
    "open-problem-p4",
}


def test_registry_contents():
    entries = list_scenarios()
    names = [name for name, _, _ in entries]
    assert len(entries) >= 13
    assert len(set(names)) == len(names)
    assert EXPECTED_NAMES <= set(names)
    for name, description, topic in entries:
        assert description.strip()
        assert topic.strip()


def test_get_scenario_unknown_name():
    with pytest.raises(ConfigError):
        get_scenario("no-such-scenario")


def test_sequences():
    alt = alternating_sequence(4)
    assert np.array_equal(alt[:, 0], [1.0, -1.0, 1.0, -1.0, 1.0])
    assert np.all(alt[:, 1] == 0.0)
    harm = harmonic_rotation_sequence(3)
    theta = np.array([0.0, 1.0, 1.5, 1.5 + 1.0 / 3.0])
    assert np.allclose(harm, np.column_stack([np.cos(theta), np.sin(theta)]))
    assert np.allclose(np.linalg.norm(harm, axis=1), 1.0)


@pytest.mark.parametrize(
    "name",
    sorted(EXPECTED_NAMES),
)
def test_builtin_scenarios_match_expectations(name):
    artifacts = run_scenario(get_scenario(name))
    assert artifacts.all_matched, [
        (o.name, o.expected, o.actual) for o in artifacts.summary if not o.matched
    ]
    assert len(artifacts.summary) == len(get_scenario(name).checks)


def test_alternating_pair_summary_details():
    artifacts = run_scenario(get_scenario("alternating-pair"))
    outcomes = {o.name: o for o in artifacts.summary}
    assert outcomes["fejer"].actual == "pass"
    assert outcomes["asymptotic-regularity"].actual == "fail"
    assert outcomes["limit"].actual == "oscillating"
    limit_report = artifacts.reports["limit"]
    assert np.isclose(limit_report.metadata["cluster_gap"], 2.0)


def test_two_ball_scenario_has_fixed_ray():
    spec = get_scenario("dr-two-balls-r3")
    assert isinstance(spec.sets["fixed-ray"], Ray)


def test_open_problems_carry_no_convergence_expectations():
    for name in ("open-problem-p1", "open-problem-p2", "open-problem-p3",
                 "open-problem-p4"):
        spec = get_scenario(name)
        for check in spec.checks:
            if check.kind == "limit":
                assert check.expect is None


def test_scenario_validation_errors():
    spec = ScenarioSpec(
        name="broken",
        description="",
        topic="",
        trajectories=[TrajectoryDef("orbit", "raw", operator="missing", start=[0.0])],
    )
    with pytest.raises(ConfigError):
        run_scenario(spec)
    spec2 = ScenarioSpec(
        name="broken2",
        description="",
        topic="",
        operators={"T": Negation()},
        trajectories=[TrajectoryDef("orbit", "raw", operator="T", start=[1.0])],
        checks=[CheckDef("limit", "limit", trajectory="nonexistent")],
    )
    with pytest.raises(ConfigError):
        run_scenario(spec2)


def test_run_overrides():
    spec = get_scenario("negation-r1")
    artifacts = run_scenario(spec, n_steps=17)
    assert len(artifacts.trajectories["orbit"]) == 18


def test_scenario_exports_are_reproducible(tmp_path):
    spec = get_scenario("alternating-pair")
    run_scenario(spec, out_dir=tmp_path / "a")
    run_scenario(get_scenario("alternating-pair"), out_dir=tmp_path / "b")
    dir_a = tmp_path / "a" / "alternating-pair"
    dir_b = tmp_path / "b" / "alternating-pair"
    files_a = sorted(p.name for p in dir_a.iterdir())
    files_b = sorted(p.name for p in dir_b.iterdir())
    assert files_a == files_b
    assert "summary.json" in files_a
    assert "orbit.csv" in files_a
    for name in files_a:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()


def test_small_sweeps_pass():
    assert run_scalar_averaged_sweep(instances=12, max_steps=20000, seed=3).passed
    assert run_affine_limit_sweep(instances=6, seed=3).passed
    assert run_codim1_sweep(instances=8, seed=3).passed
    assert run_decoupling_sweep(instances=10, seed=3).passed
    assert run_two_ball_sweep(pairs=2, n_steps=30000, seed=3).passed


def test_decoupling_sweep_instances_cover_failure_modes():
    # the sweep must exercise both failure directions, not just clean passes
    from fejerlab.scenarios import _decoupling_instance

    rng = np.random.default_rng(5)
    kinds = set()
    for _ in range(30):
        for kind in ("good", "bad_fejer", "bad_cone"):
            inst = _decoupling_instance(rng, kind)
            if inst is not None:
                kinds.add(inst[3])
    assert kinds == {"good", "bad_fejer", "bad_cone"}


def test_expected_outcome_vocabulary_validated():
    spec = ScenarioSpec(
        name="bad-expect",
        description="",
        topic="",
        operators={"T": Negation()},
        trajectories=[TrajectoryDef("orbit", "raw", operator="T", start=[1.0])],
        checks=[CheckDef("limit", "limit", trajectory="orbit", expect="sideways")],
    )
    with pytest.raises(ConfigError, match="unknown expected outcome"):
        run_scenario(spec)


def test_runtime_errors_attach_to_the_failing_check():
    # a tail longer than the trajectory is a runtime error, not a crash
    from fejerlab.geometry import Ball
    from fejerlab.operators import DouglasRachford

    T = DouglasRachford(Ball([0.0, 0.0], 1.0), Ball([5.0, 0.0], 1.0))
    spec = ScenarioSpec(
        name="short-run",
        description="",
        topic="",
        n_steps=10,
        operators={"T": T},
        trajectories=[
            TrajectoryDef("orbit", "raw", operator="T", start=[0.0, 3.0])
        ],
        checks=[
            CheckDef(
                "displacement", "displacement_match", "orbit", "pass",
                {"operator": "T", "tail": 1000},
            )
        ],
    )
    artifacts = run_scenario(spec)
    outcome = artifacts.summary[0]
    assert outcome.actual == "error"
    assert not outcome.matched
    assert "error" in artifacts.reports["displacement"].witness
