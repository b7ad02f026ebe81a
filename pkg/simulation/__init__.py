from .mc_harness import (
    ESTIMATORS,
    SUMMARY_COLUMNS,
    CoverageResult,
    DgpSpec,
    SimSummary,
    SimulationConfig,
    coverage_study,
    generate_sample,
    run_grid,
    run_simulation,
    summarize,
    summaries_to_frame,
    write_summaries,
)

__all__ = [
    "ESTIMATORS",
    "SUMMARY_COLUMNS",
    "CoverageResult",
    "DgpSpec",
    "SimSummary",
    "SimulationConfig",
    "coverage_study",
    "generate_sample",
    "run_grid",
    "run_simulation",
    "summarize",
    "summaries_to_frame",
    "write_summaries",
]
