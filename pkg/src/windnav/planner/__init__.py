"""Receding-horizon MPPI planning and the global graph-search baseline."""

from .graph_search import gs_baseline, straight_line_energy_per_meter
from .mppi import (
    FULLSCALE_CONFIG,
    MppiConfig,
    costs,
    mppi_step,
    project_goal,
    rollout,
    rollout_batch,
    sample_local_wind,
)
