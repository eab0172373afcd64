"""Memory-aware list scheduling for signal flow graphs."""

from .sfg import SFG, SFGError, Vertex, emit_sfg, parse_sfg, validate_sfg
from .timing import InfeasibleError, TimingConfig, TimingAnalysis, timing_analysis
from .generators import gen_fft, gen_fir, gen_lms
from .memmap import (
    MappingEntry,
    MappingError,
    MemoryTable,
    auto_place,
    default_mapping,
    emit_mapping,
    extract_table,
    parse_mapping,
    validate_mapping,
)
from .mcg import (
    MCG,
    PortState,
    W_RAND,
    W_SEQ,
    access_weight,
    begin_access,
    build_mcg,
    fastest_sequence,
    port_accessible,
)
from .scheduler import (
    DeadlineMissError,
    ResourceSet,
    Schedule,
    schedule,
    select_operation,
    verify_schedule,
)
from .binder import (
    AccessReport,
    AddressTrace,
    LifetimeInterval,
    access_accounting,
    address_trace,
    allocate_operators,
    interconnect_estimate,
    register_count,
)
from .report import (
    SynthesisError,
    SynthesisOptions,
    SynthesisReport,
    run_synthesis,
    sweep,
)

__version__ = "0.1.0"
