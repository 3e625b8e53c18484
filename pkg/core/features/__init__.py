from .assemble import HOURLY_COLUMNS, assemble_hourly_records, describe_hourly, featurize
from .flow import (
    HourlySeries,
    compute_flow_series,
    extreme_indicator,
    hourly_avg_elapsed,
    hourly_census,
    hourly_phase_count,
    phase_interval,
)
