"""Spatial public goods game with M/M/1 queueing and reputation-biased imitation."""
from .analytics import (analyze, empirical_queue_stats, mean_queue_length, mean_sojourn,
                        solve_balance_equations, stationary_distribution, total_enhancement)
from .config import SimConfig, SweepSpec, load_config
from .errors import (ConfigError, ConsistencyError, InvalidInputError, InvalidParameterError,
                     NoNeighborError, SpggError)
from .evolution import (EvolutionParams, Population, fermi_adopt_probability, init_population, run,
                        select_model_neighbor, step, update_reputation)
from .experiment import run_replicates, run_sweep
from .payoff import (GameParams, Strategy, accumulate_round, group_payoff_classic,
                     group_payoff_continuous)
from .queueing import QueueParams, draw_round_schedule, trigger_sequence
from .topology import groups, make_lattice, make_small_world

__version__ = "0.1.0"
