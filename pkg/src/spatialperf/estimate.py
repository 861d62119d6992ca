"""Latency estimation and the feasible compute-power search.

A design replicates C layers spatially and streams ceil(N / C) passes
through them.  Latency is the pipeline head time plus C initiation
intervals per pass; the initiation interval is the slowest of the three
compute stages and the weight-streaming time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Mapping

from .catalog import DeviceSpec, ModelSpec, Phase, PhaseWorkload, QuantScheme, Residency
from .constraints import check_capacity, check_compute, check_ports
from .demand import ALL_OPS, Allocation, OperatorId, ceil_div, weight_elements, WEIGHT_OPS
from .errors import InfeasibleError, InvalidValueError, SpatialPerfError


class Binding(str, Enum):
    """Which term sets the initiation interval."""

    QKV = "qkv"
    SDP = "sdp"
    FFN = "ffn"
    MEM = "mem"
    COMM = "comm"


@dataclass
class LatencyEstimate:
    head_cycles: float
    ii_cycles: float
    iterations: int
    total_cycles: float
    seconds: float
    binding_term: Binding

    def as_dict(self) -> dict:
        doc = asdict(self)
        doc["binding_term"] = self.binding_term.value
        return doc


def _dominant(terms: list[tuple[Binding, float]]) -> tuple[Binding, float]:
    best_name, best = terms[0]
    for name, value in terms[1:]:
        if value > best:
            best_name, best = name, value
    return best_name, best


def balanced_allocation(m: int, model: ModelSpec, seq_len: int,
                        reuse: int | Mapping[OperatorId, int] = 8) -> Allocation:
    """Work-balanced MACs/cycle per operator, given m for each projection.

    The score/context and feed-forward operators are scaled so every stage
    finishes a pass in the same number of cycles, rounding up.
    """
    if m < 1:
        raise InvalidValueError("m", f"must be >= 1, got {m}")
    if seq_len < 1:
        raise InvalidValueError("seq_len", f"balancing needs seq_len >= 1, got {seq_len}")
    d = model.hidden_size
    m_sdp = ceil_div(seq_len * m, d)
    m_ffn = ceil_div(model.ffn_size * m, d)
    alloc_m = {
        OperatorId.Q: m,
        OperatorId.K: m,
        OperatorId.V: m,
        OperatorId.A1: m_sdp,
        OperatorId.A2: m_sdp,
        OperatorId.P: m,
        OperatorId.F1: m_ffn,
        OperatorId.F2: m_ffn,
    }
    if isinstance(reuse, Mapping):
        reuse_map = {op: reuse.get(op, 8) for op in ALL_OPS}
    else:
        reuse_map = {op: reuse for op in ALL_OPS}
    return Allocation(m=alloc_m, reuse=reuse_map)


def t_mem_cycles(model: ModelSpec, quant: QuantScheme, device: DeviceSpec,
                 residency: Residency = Residency.OFF_CHIP) -> int:
    """Cycles to stream one layer's weights from off-chip memory; 0 if resident."""
    if Residency(residency) is Residency.ON_CHIP:
        return 0
    weight_bits = sum(weight_elements(model)[op] for op in WEIGHT_OPS) * quant.weight_bits
    return math.ceil(weight_bits / device.offchip_bandwidth * device.freq)


def _stage_terms(model: ModelSpec, alloc: Allocation, phase: Phase, seq_len: int,
                 t_mem: float) -> tuple[float, list[tuple[Binding, float]]]:
    for op in (OperatorId.K, OperatorId.A1, OperatorId.F1):
        if op not in alloc.m:
            raise InvalidValueError("alloc", f"missing allocation for operator {op.value}")
    d = model.hidden_size
    if phase is Phase.PREFILL:
        qkv = seq_len * d * d / alloc.m[OperatorId.K]
        sdp = seq_len * seq_len * d / alloc.m[OperatorId.A1]
        ffn = seq_len * d * model.ffn_size / alloc.m[OperatorId.F1]
    else:
        qkv = d * d / alloc.m[OperatorId.K]
        sdp = (model.max_seq_len + 1) * d / alloc.m[OperatorId.A1]
        ffn = d * model.ffn_size / alloc.m[OperatorId.F1]
    terms = [(Binding.QKV, qkv), (Binding.SDP, sdp), (Binding.FFN, ffn),
             (Binding.MEM, float(t_mem))]
    return qkv, terms


def _assemble(head: float, ii: float, binding: Binding, iterations: int,
              stages: int, freq: float) -> LatencyEstimate:
    total = iterations * (head + stages * ii)
    return LatencyEstimate(
        head_cycles=head,
        ii_cycles=ii,
        iterations=iterations,
        total_cycles=total,
        seconds=total / freq,
        binding_term=binding,
    )


def prefill_latency(model: ModelSpec, alloc: Allocation, workload: PhaseWorkload,
                    device: DeviceSpec, t_mem: float = 0) -> LatencyEstimate:
    """End-to-end prefill latency for one prompt of workload.seq_len tokens."""
    if workload.seq_len < 1:
        raise InvalidValueError("seq_len", "prefill needs at least one token")
    head, terms = _stage_terms(model, alloc, Phase.PREFILL, workload.seq_len, t_mem)
    binding, ii = _dominant(terms)
    c = workload.layers_on_chip
    iterations = ceil_div(model.num_layers, c)
    return _assemble(head, ii, binding, iterations, c, device.freq)


def decode_latency(model: ModelSpec, alloc: Allocation, workload: PhaseWorkload,
                   device: DeviceSpec, t_mem: float = 0) -> LatencyEstimate:
    """Latency of generating one token, with KV buffers sized for max_seq_len."""
    head, terms = _stage_terms(model, alloc, Phase.DECODE, workload.seq_len, t_mem)
    binding, ii = _dominant(terms)
    c = workload.layers_on_chip
    iterations = ceil_div(model.num_layers, c)
    return _assemble(head, ii, binding, iterations, c, device.freq)


def simplified_prefill(model: ModelSpec, m: int, layers_on_chip: int, freq: float,
                       seq_len: int) -> float:
    """Closed-form prefill seconds, N * (1 + 1/C) * l * d^2 / (m * freq).

    Matches prefill_latency exactly when the balanced ratios divide evenly,
    t_mem is zero, and layers_on_chip divides num_layers.
    """
    per_stage = seq_len * model.hidden_size * model.hidden_size / m
    cycles = (model.num_layers / layers_on_chip) * (per_stage + layers_on_chip * per_stage)
    return cycles / freq


CONSTRAINT_FAMILIES = ("compute", "capacity", "ports")


def _feasible(m: int, model: ModelSpec, device: DeviceSpec, quant: QuantScheme,
              workload: PhaseWorkload, reuse, packed: bool,
              families: Iterable[str], tp_size: int) -> bool:
    alloc = balanced_allocation(m, model, max(1, workload.seq_len), reuse)
    if "compute" in families:
        if not check_compute(alloc, workload.layers_on_chip, device, quant).ok:
            return False
    if "capacity" in families:
        if not check_capacity(model, alloc, quant, workload, device, tp_size).ok:
            return False
    if "ports" in families:
        if not check_ports(model, alloc, quant, workload, device, packed, tp_size).ok:
            return False
    return True


def search_max_m(model: ModelSpec, device: DeviceSpec, quant: QuantScheme,
                 workload: PhaseWorkload, reuse: int | Mapping[OperatorId, int] = 8,
                 packed: bool = True,
                 families: Iterable[str] = CONSTRAINT_FAMILIES,
                 stride: int = 1, tp_size: int = 1,
                 m_limit: int = 1_000_000) -> int:
    """Largest per-projection MACs/cycle that satisfies the selected constraints.

    Scans m upward from 1 and returns the last feasible point before the
    first infeasible one.  A stride > 1 jumps in coarse steps first and
    refines inside the final bracket; this matches the unit-stride scan
    whenever feasibility is monotone inside that bracket.
    """
    families = tuple(families)
    unknown = set(families) - set(CONSTRAINT_FAMILIES)
    if unknown or not families:
        raise InvalidValueError(
            "families", f"pick a non-empty subset of {CONSTRAINT_FAMILIES}, got {families}"
        )
    if stride < 1:
        raise InvalidValueError("stride", f"must be >= 1, got {stride}")

    def ok(m: int) -> bool:
        return _feasible(m, model, device, quant, workload, reuse, packed,
                         families, tp_size)

    last_good = 0
    m = 1
    while m <= m_limit:
        if not ok(m):
            break
        last_good = m
        m += stride
    else:
        raise SpatialPerfError(
            f"still feasible at m_limit={m_limit}; raise m_limit to search further"
        )
    if last_good == 0:
        raise InfeasibleError(
            f"m=1 already violates the {'/'.join(families)} constraints "
            f"on {device.name}"
        )
    if stride > 1:
        for fine in range(last_good + 1, m):
            if not ok(fine):
                break
            last_good = fine
    return last_good


def gemm_latency(rows: int, inner: int, cols: int, array_rows: int, array_cols: int,
                 freq: float) -> float:
    """Seconds for one dense (rows x inner) @ (inner x cols) on a systolic array."""
    for name, value in (("rows", rows), ("inner", inner), ("cols", cols),
                        ("array_rows", array_rows), ("array_cols", array_cols)):
        if value < 1:
            raise InvalidValueError(name, f"must be >= 1, got {value}")
    cycles = rows * inner * cols / (array_rows * array_cols)
    return cycles / freq


def steady_state_throughput(ii_cycles: float, layers_on_chip: int, freq: float) -> float:
    """Saturated pipeline rate in passes/s, 1 / (C * II); not the inverse latency."""
    return freq / (layers_on_chip * ii_cycles)
