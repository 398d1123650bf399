from .simulator import (
    CompiledNoc,
    DeadlockDetected,
    SafetyViolation,
    SimResult,
    TightnessResult,
    TrafficSchedule,
    compile_config,
    load_schedule,
    simulate,
    tightness_sweep,
    write_trace_csv,
)
from .kernel import JIT
