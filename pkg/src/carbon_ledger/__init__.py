"""Carbon accounting for LLM-assisted software development.

Embodied carbon comes from LLM inference (tokens x latency x server power),
operational carbon from running the generated code (per-process energy logs),
and both are priced on the same grid carbon intensity.
"""

__version__ = "0.1.0"

from .embodied import (
    EmbodiedSession,
    InferenceProfile,
    PRESETS,
    ServerPowerModel,
    accumulate_dynamic,
    embodied_carbon,
    embodied_energy,
    server_power,
)
from .intensity import (
    BuiltinTable,
    FileTable,
    GridZone,
    RemoteEndpoint,
    fetch_remote_intensity,
    lookup_intensity,
)
from .metrics import (
    MetricSelection,
    SustainabilityMetrics,
    attach_energy,
    pass_rate,
    run_measured,
)
from .operational import (
    EnergyLog,
    EnergyRecord,
    ProcessFilter,
    operational_carbon,
    parse_energy_log,
    sum_process_energy,
)
from .quantities import (
    CarbonIntensityValue,
    CarbonQuantity,
    EnergyQuantity,
    PowerQuantity,
    add_carbon,
    carbon_from_energy,
    joules_to_kwh,
    kwh_to_joules,
)
from .report import FootprintReport, LedgerEntry, append_ledger, build_report, read_ledger, render_report
from .tokens import (
    ConsumptionRateModel,
    CorpusStats,
    Direction,
    TokenLedger,
    consumption_seconds,
    ledger_totals,
    scan_corpus,
    words_to_tokens,
)
