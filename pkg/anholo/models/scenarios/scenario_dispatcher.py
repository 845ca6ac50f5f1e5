from anholo.models.scenarios.run_scenario import RunScenario
from anholo.models.scenarios.selftest_scenario import SelftestScenario

from anholo.schemas.conf.run import RunConfig, SelftestConf


def create_scenario(scenario_config, tol_scale: float = 1.0, seed=None):
    if type(scenario_config) is RunConfig:
        return RunScenario(scenario_config, tol_scale=tol_scale, seed=seed)
    elif type(scenario_config) is SelftestConf:
        return SelftestScenario(scenario_config)
    else:
        raise ValueError(f"Invalid scenario config {type(scenario_config)}")
