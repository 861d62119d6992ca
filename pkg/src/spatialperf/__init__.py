"""Analytical performance model for spatial transformer accelerators on FPGAs."""

from .catalog import (
    BUILTIN_DEVICES,
    BUILTIN_MODELS,
    BUILTIN_QUANTS,
    DeviceSpec,
    ModelSpec,
    Phase,
    PhaseWorkload,
    QuantScheme,
    Residency,
    get_device,
    get_model,
    get_quant,
    load_device_spec,
    load_model_spec,
    load_quant_scheme,
    total_compute_power,
)
from .constraints import (
    BandwidthCheck,
    CapacityCheck,
    ComputeCheck,
    ConstraintReport,
    PortCheck,
    blocks_packed,
    blocks_unpacked,
    check_capacity,
    check_compute,
    check_ports,
    constraint_report,
    effective_width,
    required_bandwidth,
)
from .demand import (
    ALL_OPS,
    Allocation,
    BufferPlan,
    OperatorId,
    SDP_OPS,
    WEIGHT_OPS,
    buffer_plan,
    ceil_div,
    op_macs,
    weight_elements,
)
from .distributed import (
    ParallelismPlan,
    comm_time,
    load_parallelism_plan,
    multi_prefill_latency,
    parse_bandwidth,
    scale_memory_constraints,
)
from .errors import (
    InfeasibleError,
    InputError,
    InvalidValueError,
    MissingFieldError,
    SpatialPerfError,
    UnknownFieldError,
    WidthOverflowError,
)
from .estimate import (
    Binding,
    LatencyEstimate,
    balanced_allocation,
    decode_latency,
    gemm_latency,
    prefill_latency,
    search_max_m,
    simplified_prefill,
    steady_state_throughput,
    t_mem_cycles,
)
