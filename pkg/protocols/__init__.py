# This file makes the 'protocols' directory a Python package.
from .report_schema import ArmMetrics, RunReport, ThresholdCheck
from .scenario_schema import ArmConfig, ScenarioConfig, ScenarioFile
from .trace_schema import RunDiagnostic, SimTrace, trace_columns

__all__ = [
    "ArmMetrics",
    "RunReport",
    "ThresholdCheck",
    "ArmConfig",
    "ScenarioConfig",
    "ScenarioFile",
    "RunDiagnostic",
    "SimTrace",
    "trace_columns",
]
