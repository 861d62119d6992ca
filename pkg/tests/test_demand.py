"""Operator MAC counts and buffer sizing, checked against closed forms."""

import pytest
from hypothesis import given, strategies as st

from spatialperf import (
    ALL_OPS,
    Allocation,
    BufferPlan,
    InvalidValueError,
    ModelSpec,
    OperatorId,
    Phase,
    PhaseWorkload,
    SDP_OPS,
    WEIGHT_OPS,
    buffer_plan,
    ceil_div,
    load_model_spec,
    op_macs,
    weight_elements,
)

models = st.builds(
    lambda h, mult, ffn_mult, layers, l_max: ModelSpec(
        "gen", num_layers=layers, num_heads=h,
        hidden_size=h * mult, ffn_size=h * mult * ffn_mult, max_seq_len=l_max,
    ),
    h=st.integers(1, 16),
    mult=st.integers(1, 64),
    ffn_mult=st.integers(1, 4),
    layers=st.integers(1, 48),
    l_max=st.integers(1, 2048),
)


def test_ceil_div_matches_float_ceiling():
    import math
    for a in range(0, 200):
        for b in (1, 2, 3, 7, 64):
            assert ceil_div(a, b) == math.ceil(a / b)


def test_operator_partition():
    assert set(WEIGHT_OPS) | set(SDP_OPS) == set(ALL_OPS)
    assert not set(WEIGHT_OPS) & set(SDP_OPS)
    assert len(ALL_OPS) == 8


class TestOpMacs:
    def test_gpt2_prefill_128(self, gpt2):
        macs = op_macs(gpt2, Phase.PREFILL, 128)
        assert macs[OperatorId.Q] == 128 * 1024 * 1024
        assert macs[OperatorId.A1] == 128 * 128 * 1024
        assert macs[OperatorId.F1] == 128 * 1024 * 4096
        for a, b in ((OperatorId.Q, OperatorId.P), (OperatorId.A1, OperatorId.A2),
                     (OperatorId.F1, OperatorId.F2)):
            assert macs[a] == macs[b]

    def test_gpt2_decode(self, gpt2):
        macs = op_macs(gpt2, Phase.DECODE, 128)
        assert macs[OperatorId.Q] == 1024 * 1024
        assert macs[OperatorId.A1] == 129 * 1024
        assert macs[OperatorId.F1] == 1024 * 4096

    def test_decode_empty_context(self, gpt2):
        macs = op_macs(gpt2, Phase.DECODE, 0)
        assert macs[OperatorId.A1] == 1024

    def test_prefill_single_token_sdp(self, gpt2):
        assert op_macs(gpt2, Phase.PREFILL, 1)[OperatorId.A1] == gpt2.hidden_size

    def test_seq_len_validation(self, gpt2):
        with pytest.raises(InvalidValueError):
            op_macs(gpt2, Phase.PREFILL, 0)
        with pytest.raises(InvalidValueError):
            op_macs(gpt2, Phase.DECODE, -1)

    @given(model=models, l=st.integers(1, 512))
    def test_prefill_scaling_in_seq_len(self, model, l):
        base = op_macs(model, Phase.PREFILL, l)
        doubled = op_macs(model, Phase.PREFILL, 2 * l)
        for op in WEIGHT_OPS:
            assert doubled[op] == 2 * base[op]
        for op in SDP_OPS:
            assert doubled[op] == 4 * base[op]

    @given(model=models, l1=st.integers(0, 512), l2=st.integers(0, 512))
    def test_decode_context_only_moves_sdp(self, model, l1, l2):
        m1 = op_macs(model, Phase.DECODE, l1)
        m2 = op_macs(model, Phase.DECODE, l2)
        for op in WEIGHT_OPS:
            assert m1[op] == m2[op]

    @given(model=models, l=st.integers(1, 512))
    def test_layer_total_closed_form(self, model, l):
        d, f = model.hidden_size, model.ffn_size
        total = sum(op_macs(model, Phase.PREFILL, l).values())
        assert total == 4 * l * d * d + 2 * l * l * d + 2 * l * d * f


class TestWeightElements:
    def test_gpt2(self, gpt2):
        w = weight_elements(gpt2)
        assert w[OperatorId.Q] == 1024 * 1024
        assert w[OperatorId.F1] == 1024 * 4096
        assert w[OperatorId.A1] == 0 and w[OperatorId.A2] == 0

    def test_bert_ffn(self, bert):
        assert weight_elements(bert)[OperatorId.F2] == 768 * 3072


class TestAllocation:
    def test_rejects_zero_share(self):
        with pytest.raises(InvalidValueError):
            Allocation(m={OperatorId.Q: 0}, reuse={})

    def test_rejects_zero_reuse(self):
        with pytest.raises(InvalidValueError):
            Allocation(m={OperatorId.Q: 4}, reuse={OperatorId.Q: 0})


def flat_alloc(value, reuse=8):
    return Allocation(m={op: value for op in ALL_OPS},
                      reuse={op: reuse for op in ALL_OPS})


class TestBufferPlan:
    def test_bert_param_bits(self, bert, w4a8):
        w = PhaseWorkload(Phase.PREFILL, seq_len=128)
        plan = buffer_plan(bert, w4a8, w, flat_alloc(16))
        assert plan.s_param == (4 * 768 * 768 + 2 * 768 * 3072) * 4
        assert plan.s_param == 28_311_552

    def test_gpt2_kv_bits(self, gpt2, w8a8):
        w = PhaseWorkload(Phase.DECODE, seq_len=128)
        small = gpt2.to_document()
        small["max_seq_len"] = 512
        model = load_model_spec(small)
        plan = buffer_plan(model, w8a8, w, flat_alloc(16))
        assert plan.s_kv == 4 * 512 * 1024 * 8
        assert plan.s_kv == 16_777_216

    def test_tile_counts_weight_ops_only(self, gpt2, w8a8):
        w = PhaseWorkload(Phase.PREFILL, seq_len=8)
        alloc = Allocation(
            m={OperatorId.Q: 100, OperatorId.A1: 999, OperatorId.F1: 50},
            reuse={},
        )
        plan = buffer_plan(gpt2, w8a8, w, alloc)
        assert plan.s_tile == (100 + 50) * 8

    def test_fifo_bits(self, gpt2, w8a8):
        w = PhaseWorkload(Phase.PREFILL, seq_len=128, fifo_depth=2)
        plan = buffer_plan(gpt2, w8a8, w, flat_alloc(16))
        assert plan.s_fifo == 16 * 2 * 8 + 128 * 1024 * 8

    def test_per_op_weights_mirror_weight_elements(self, gpt2, w8a8):
        w = PhaseWorkload(Phase.PREFILL, seq_len=8)
        plan = buffer_plan(gpt2, w8a8, w, flat_alloc(16))
        assert plan.per_op_weights == weight_elements(gpt2)


class TestScaledPlan:
    def plan(self):
        return BufferPlan(
            s_param=101, s_tile=33, s_kv=7, s_fifo=12,
            per_op_weights={OperatorId.Q: 101, OperatorId.A1: 0},
        )

    def test_identity_at_one(self):
        p = self.plan()
        assert p.scaled(1) is p

    def test_ceiling_division(self):
        s = self.plan().scaled(2)
        assert s.s_param == 51
        assert s.s_tile == 17
        assert s.s_kv == 4
        assert s.per_op_weights[OperatorId.Q] == 51
        assert s.per_op_weights[OperatorId.A1] == 0

    def test_fifo_not_sharded(self):
        assert self.plan().scaled(4).s_fifo == 12

    def test_rejects_zero(self):
        with pytest.raises(InvalidValueError):
            self.plan().scaled(0)

    @given(tp=st.integers(1, 16), bits=st.integers(1, 10**9))
    def test_shards_cover_the_whole(self, tp, bits):
        plan = BufferPlan(s_param=bits, s_tile=1, s_kv=1, s_fifo=0, per_op_weights={})
        assert plan.scaled(tp).s_param * tp >= bits
        assert (plan.scaled(tp).s_param - 1) * tp < bits
