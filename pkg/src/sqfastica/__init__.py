"""Deflation-based, symmetric and squared symmetric FastICA with asymptotic
efficiency tools and a Monte Carlo harness."""

__version__ = "0.1.0"

from .asymptotics import (  # noqa: E402
    are,
    asv,
    asv_sum_theorem,
    check_g_conditions,
    expected_mdi_limit,
    moment_set,
)
from .distributions import (  # noqa: E402
    make_exp_power,
    make_gamma_std,
    make_gauss_mix4,
    parse_dist_spec,
    sample,
    std_normal,
    uniform,
)
from .estimators import (  # noqa: E402
    deflation_fastica,
    fastica,
    initial_rotation,
    squared_symmetric_fastica,
    symmetric_fastica,
    whiten,
)
from .harness import SimulationConfig, are_table, contour_grid, emit, run_simulation  # noqa: E402
from .mdi import minimum_distance_index  # noqa: E402
from .nonlinearities import make_nonlinearity  # noqa: E402
