import numpy as np
import pytest

from gjcodec.context import CausalContextModel, train
from gjcodec.entropy import (Bitstream, ac_decode, ac_encode,
                             sequence_cost_bits)
from gjcodec.errors import (CorruptStreamError, ModelMismatchError,
                            ParameterError)


def _random_model(rng, alphabet, order):
    m = CausalContextModel(alphabet, order=order)
    grid = rng.integers(0, alphabet, (20, 20))
    return train(m, [grid])


def test_uniform_model_costs_eight_bits_per_byte(rng):
    syms = rng.integers(0, 256, 1000)
    stream = ac_encode(syms, CausalContextModel(256, order=0))
    assert 8000 <= stream.payload_bits <= 8032


def test_skewed_frozen_pmf_is_cheap():
    # counts chosen so p(0) quantizes very close to 0.99
    m = CausalContextModel(2, order=0, alpha=2.0 ** -8)
    for _ in range(990):
        m.update((), 0)
    for _ in range(10):
        m.update((), 1)
    syms = [0] * 100
    ideal = sequence_cost_bits(m, syms)
    assert ideal == pytest.approx(-100 * np.log2(0.99), rel=0.05)
    stream = ac_encode(syms, m)
    assert stream.payload_bits <= 40
    np.testing.assert_array_equal(ac_decode(stream, m), syms)


def test_empty_sequence():
    stream = ac_encode([], CausalContextModel(4))
    assert stream.n_symbols == 0
    assert stream.payload == b""
    assert list(ac_decode(stream, CausalContextModel(4))) == []


def test_header_round_trip():
    st = ac_encode([1, 2, 3], CausalContextModel(4, order=1))
    again = Bitstream.from_bytes(st.to_bytes())
    assert (again.alphabet, again.n_symbols, again.model_hash,
            again.payload) == (st.alphabet, st.n_symbols, st.model_hash,
                               st.payload)


@pytest.mark.parametrize("adaptive", [False, True])
@pytest.mark.parametrize("seed", range(10))
def test_round_trip_fuzz(seed, adaptive):
    rng = np.random.default_rng(seed * 2 + adaptive)
    alphabet = int(rng.integers(2, 64))
    order = int(rng.integers(0, 3))
    model = _random_model(rng, alphabet, order)
    syms = rng.integers(0, alphabet, int(rng.integers(0, 400)))
    stream = ac_encode(syms, model.copy(), adaptive=adaptive)
    out = ac_decode(stream, model.copy(), adaptive=adaptive)
    np.testing.assert_array_equal(out, syms)


def test_payload_tracks_model_cost(rng):
    """Actual payload stays within the termination allowance of ideal."""
    model = _random_model(rng, 16, 1)
    syms = rng.integers(0, 16, 3000)
    ideal = sequence_cost_bits(model, syms)
    stream = ac_encode(syms, model)
    assert stream.payload_bits >= ideal - 1e-6
    assert stream.payload_bits - ideal <= 32


def test_adaptive_cost_does_not_mutate(rng):
    model = _random_model(rng, 8, 1)
    h = model.state_hash()
    sequence_cost_bits(model, rng.integers(0, 8, 200), adaptive=True)
    assert model.state_hash() == h


def test_truncated_stream_detected(rng):
    model = _random_model(rng, 16, 1)
    syms = rng.integers(0, 16, 500)
    blob = ac_encode(syms, model).to_bytes()
    with pytest.raises(CorruptStreamError):
        ac_decode(Bitstream.from_bytes(blob[:-1]), model)


def test_model_mismatch_detected(rng):
    model = _random_model(rng, 16, 1)
    stream = ac_encode(rng.integers(0, 16, 100), model)
    other = _random_model(np.random.default_rng(999), 16, 1)
    with pytest.raises(ModelMismatchError):
        ac_decode(stream, other)


def test_symbol_outside_alphabet_rejected():
    with pytest.raises(ParameterError):
        ac_encode([4], CausalContextModel(4))
