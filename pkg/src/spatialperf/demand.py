"""Per-layer compute and buffer demand of the eight linear operators.

Every transformer layer is modeled as eight matrix multiplies: the q/k/v
projections, the two score/context products inside scaled dot-product
attention (a1, a2), the output projection p, and the two feed-forward
stages f1/f2.  Prefill processes l tokens per pass; decode processes one
token against a cached context.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .catalog import ModelSpec, Phase, PhaseWorkload, QuantScheme
from .errors import InvalidValueError


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class OperatorId(str, Enum):
    Q = "q"
    K = "k"
    V = "v"
    A1 = "a1"   # attention scores, Q x K^T
    A2 = "a2"   # context, scores x V
    P = "p"     # output projection
    F1 = "f1"
    F2 = "f2"


# Operators that multiply activations by stationary weights; a1/a2 multiply
# two activation tensors and carry no weight buffer.
WEIGHT_OPS = (
    OperatorId.Q,
    OperatorId.K,
    OperatorId.V,
    OperatorId.P,
    OperatorId.F1,
    OperatorId.F2,
)
SDP_OPS = (OperatorId.A1, OperatorId.A2)

ALL_OPS = tuple(OperatorId)

MacDemand = dict[OperatorId, int]


@dataclass
class Allocation:
    """MACs/cycle (m) and per-MAC operand reuse (reuse) granted to each operator."""

    m: dict[OperatorId, int]
    reuse: dict[OperatorId, int]

    def __post_init__(self):
        for op, value in self.m.items():
            if value < 1:
                raise InvalidValueError("m", f"{op.value} must get >= 1 MAC/cycle, got {value}")
        for op, value in self.reuse.items():
            if value < 1:
                raise InvalidValueError("reuse", f"{op.value} reuse must be >= 1, got {value}")


def op_macs(model: ModelSpec, phase: Phase, seq_len: int) -> MacDemand:
    """MAC count of each operator for one layer at sequence position seq_len."""
    phase = Phase(phase)
    min_len = 1 if phase is Phase.PREFILL else 0
    if seq_len < min_len:
        raise InvalidValueError("seq_len", f"must be >= {min_len} for {phase.value}")
    d = model.hidden_size
    d_ffn = model.ffn_size
    l = seq_len
    if phase is Phase.PREFILL:
        proj = l * d * d
        sdp = l * l * d
        ffn = l * d * d_ffn
    else:
        proj = d * d
        sdp = (l + 1) * d
        ffn = d * d_ffn
    return {
        OperatorId.Q: proj,
        OperatorId.K: proj,
        OperatorId.V: proj,
        OperatorId.A1: sdp,
        OperatorId.A2: sdp,
        OperatorId.P: proj,
        OperatorId.F1: ffn,
        OperatorId.F2: ffn,
    }


def weight_elements(model: ModelSpec) -> dict[OperatorId, int]:
    """Weight matrix size of each operator in elements; zero for a1/a2."""
    d = model.hidden_size
    d_ffn = model.ffn_size
    return {
        OperatorId.Q: d * d,
        OperatorId.K: d * d,
        OperatorId.V: d * d,
        OperatorId.A1: 0,
        OperatorId.A2: 0,
        OperatorId.P: d * d,
        OperatorId.F1: d * d_ffn,
        OperatorId.F2: d * d_ffn,
    }


@dataclass
class BufferPlan:
    """Per-layer SRAM demand in bits, before the capacity check's doubling."""

    s_param: int    # all weight matrices of one layer
    s_tile: int     # one streaming tile per weight operator (M_i elements each)
    s_kv: int       # K and V caches sized for max_seq_len
    s_fifo: int     # inter-operator FIFOs plus the residual bypass
    per_op_weights: dict[OperatorId, int]

    def scaled(self, tp_size: int) -> "BufferPlan":
        """Demand per device when weights and caches shard across tp_size devices."""
        if tp_size < 1:
            raise InvalidValueError("tp_size", f"must be >= 1, got {tp_size}")
        if tp_size == 1:
            return self
        return BufferPlan(
            s_param=ceil_div(self.s_param, tp_size),
            s_tile=ceil_div(self.s_tile, tp_size),
            s_kv=ceil_div(self.s_kv, tp_size),
            s_fifo=self.s_fifo,
            per_op_weights={op: ceil_div(n, tp_size) if n else 0
                            for op, n in self.per_op_weights.items()},
        )


def buffer_plan(model: ModelSpec, quant: QuantScheme, workload: PhaseWorkload,
                alloc: Allocation) -> BufferPlan:
    """Size every on-chip buffer class for one layer under the given mapping."""
    d = model.hidden_size
    d_ffn = model.ffn_size
    b_w = quant.weight_bits
    b_a = quant.activation_bits
    s_param = (4 * d * d + 2 * d * d_ffn) * b_w
    s_tile = sum(alloc.m[op] for op in WEIGHT_OPS if op in alloc.m) * b_w
    s_kv = 4 * model.max_seq_len * d * b_a
    s_fifo = 16 * workload.fifo_depth * b_a + workload.seq_len * d * b_a
    return BufferPlan(
        s_param=s_param,
        s_tile=s_tile,
        s_kv=s_kv,
        s_fifo=s_fifo,
        per_op_weights=weight_elements(model),
    )
