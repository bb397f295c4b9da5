"""Smoke test for the Python extension: build with `maturin develop` first."""

import os
import tempfile

import urbanedge


def main():
    sc = urbanedge.Scenario()
    assert sc.seed == 42 and sc.count == 5000
    assert sc.pipelines == list(urbanedge.PIPELINES)

    ds = sc.generate()
    assert len(ds) == 5000
    assert 0.015 <= ds.labeled / len(ds) <= 0.025

    small = urbanedge.Scenario.from_toml('pipelines = ["centralized", "adaptive"]\n[dataset]\ncount = 2000\n')
    run = small.run()
    report = run.report()
    names = [p["pipeline"] for p in report["pipelines"]]
    assert names == ["centralized", "adaptive"], names
    central, adaptive = report["pipelines"]
    assert central["reduction"] == 0.0
    assert central["detection"]["recall"] == 1.0
    assert adaptive["reduction"] > 0.5
    assert adaptive["energy"]["total"] < central["energy"]["total"]

    g = run.graph("adaptive")
    assert len(g) > 0
    assert g.query("lookup absent/1") == []
    sensor = next(iter(g.query("traverse location/0 locatedAt in")), None)
    if sensor is not None:
        assert ("locatedAt", "location/0") in g.lookup(sensor)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.nt")
        g.export(path)
        again = urbanedge.Graph.load(path)
        assert len(again) == len(g)
        assert again.query("hops district/central 1 adjacentTo") == g.query("hops district/central 1 adjacentTo")

    try:
        g.query("match ?s p")
    except urbanedge.QueryError as e:
        assert "column" in str(e)
    else:
        raise AssertionError("malformed query accepted")

    rules = urbanedge.parse_rules("WHEN category=vibration AND value>3 THEN escalate")
    assert len(rules) == 1
    try:
        urbanedge.parse_rules("WHEN value>> THEN transmit")
    except urbanedge.RuleError:
        pass
    else:
        raise AssertionError("bad rule accepted")

    try:
        urbanedge.Scenario.from_toml("pipelines = []")
    except urbanedge.ConfigError:
        pass
    else:
        raise AssertionError("empty pipeline list accepted")

    model = small.calibrate()
    assert all(v >= 0 for v in model["energy"].values())
    print("python smoke test passed")


if __name__ == "__main__":
    main()
