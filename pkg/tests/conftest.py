import pytest

from spatialperf import (
    Phase,
    PhaseWorkload,
    get_device,
    get_model,
    get_quant,
)


@pytest.fixture
def gpt2():
    return get_model("gpt2")


@pytest.fixture
def bert():
    return get_model("bert")


@pytest.fixture
def llama2():
    return get_model("llama2")


@pytest.fixture
def vicuna():
    return get_model("vicuna")


@pytest.fixture
def u280():
    return get_device("u280")


@pytest.fixture
def w4a8():
    return get_quant("w4a8")


@pytest.fixture
def w8a8():
    return get_quant("w8a8")


@pytest.fixture
def prefill_128():
    return PhaseWorkload(Phase.PREFILL, seq_len=128, layers_on_chip=1)


@pytest.fixture
def decode_128():
    return PhaseWorkload(Phase.DECODE, seq_len=128, layers_on_chip=1)
