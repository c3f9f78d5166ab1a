"""Configuration, scenarios and the command line front end."""
from .config import ConfigError, SimConfig, config_from_dict, load_config, load_sweep
from .run import EXIT_BLOWUP, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, RunResult, run
from .scenarios import (
    compare_trajectories,
    scenario_blowup,
    scenario_epsilon_sweep,
    scenario_fast_rotation,
    scenario_well_prepared,
)
