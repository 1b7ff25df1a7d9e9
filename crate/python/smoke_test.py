"""Smoke test for the compiled extension: build it with
`pip install --no-build-isolation -e crates/py`, then run this file."""

import tempfile
from pathlib import Path

import cuboid_inspect_py as ci


def check_dynamics():
    alpha, beta = ci.dynamics_coefficients(1.0, 3.35, 0.2)
    assert abs(alpha - 0.8) < 1e-12
    assert abs(beta - 1.0 / 3.35) < 1e-12
    sc = ci.Scenario.reduced()
    p, v = sc.step([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 3.35, 0.0])
    assert p == [1.0, 0.0, 0.0]
    assert abs(v[0] - 0.8) < 1e-12 and abs(v[1] - 1.0) < 1e-12


def check_milp():
    m = ci.MilpModel()
    x = m.add_continuous("x", 0.0, 10.0)
    b = m.add_binary("b")
    m.add_constraint("cap", [(x, 1.0), (b, -4.0)], "<=", 0.0)
    m.set_objective([(x, -1.0), (b, 1.0)])
    status, obj, values = m.solve()
    assert status == "optimal", status
    assert abs(obj + 3.0) < 1e-9, obj
    assert abs(values[x] - 4.0) < 1e-9 and abs(values[b] - 1.0) < 1e-9
    assert "Binaries" in m.to_lp()


def check_mission():
    sc = ci.Scenario.reduced()
    assert sc.horizon == 3 and sc.t_max == 60
    assert len(sc.points()) == 8
    again = ci.Scenario.parse(sc.to_cfg())
    assert again.points() == sc.points()

    log = sc.run()
    assert log.status == "complete", log.abort_reason
    assert log.inspected == log.total_points == 8
    assert log.steps <= 60
    rows = log.trajectory()
    assert len(rows) == log.steps
    assert rows[-1]["inspected_total"] == 8
    failures = [(name, steps) for name, steps in log.validate() if steps]
    assert not failures, failures

    with tempfile.TemporaryDirectory() as d:
        log.write(Path(d))
        for name in ["scenario.cfg", "trajectory.csv", "plans.csv", "footprints.csv", "points.csv", "summary.json"]:
            assert (Path(d) / name).is_file(), name
    return log


def check_errors():
    try:
        ci.Scenario.parse("vehicle.mass = -1.0\n")
    except ValueError as e:
        assert "mass" in str(e)
    else:
        raise AssertionError("negative mass accepted")


if __name__ == "__main__":
    check_dynamics()
    check_milp()
    log = check_mission()
    check_errors()
    print(f"smoke test passed: {log}")
