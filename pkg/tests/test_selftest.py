from anholo.schemas.conf.run import SelftestConf
from anholo.models.scenarios import selftest_scenario
from anholo.models.scenarios.selftest_scenario import (
    SelftestScenario,
    sphere_fiber_dmetric,
)
from anholo.utils.errors import DegenerateMetricError


def test_sphere_fiber_fixture_fits_its_dims():
    M = sphere_fiber_dmetric()
    assert M.N.N.shape == (1, 2)


def test_every_check_passes():
    table = SelftestScenario(SelftestConf()).run()
    assert len(table) >= 40
    assert table["passed"].all(), table[~table["passed"]].to_string()
    assert table["error"].isna().all()


def test_broken_fixture_fails_only_its_checks(monkeypatch):
    def broken():
        raise DegenerateMetricError("h is singular")

    monkeypatch.setattr(selftest_scenario, "sphere_fiber_dmetric", broken)
    table = SelftestScenario(SelftestConf()).run()
    failed = table[~table["passed"]]
    assert list(failed["check"]) == ["sphere_fiber_v_scalar"]
    assert failed["error"].iloc[0].startswith("DegenerateMetricError")
    assert len(table) == len(SelftestScenario(SelftestConf()).checks())
