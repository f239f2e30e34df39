import numpy as np
import pytest

from gjcodec.context import (ABSENT, PMF_TOTAL, CausalContextModel,
                             NeighborhoodModel, cross_entropy, load_model,
                             neighbor_context, quantize_pmf, train)
from gjcodec.errors import ParameterError


def test_untrained_model_is_uniform():
    m = CausalContextModel(4, order=0, alpha=1.0)
    w = m.pmf(()).weights
    np.testing.assert_array_equal(w, [16384] * 4)
    assert int(w.sum()) == PMF_TOTAL


def test_laplace_estimate_before_quantization():
    """Three observations of symbol 2 under alpha=1: p(2) = 4/7."""
    m = CausalContextModel(4, order=0, alpha=1.0)
    for _ in range(3):
        m.update((), 2)
    counts = m.context_counts(())
    probs = (counts + 1.0) / (counts.sum() + 4.0)
    assert probs[2] == pytest.approx(4 / 7)
    assert probs[0] == pytest.approx(1 / 7)


@pytest.mark.parametrize("seed", range(8))
def test_quantized_pmf_sums_exactly(seed):
    rng = np.random.default_rng(seed)
    a = int(rng.integers(2, 300))
    counts = rng.integers(0, 10_000, a)
    alpha_fp = int(rng.integers(1, 1 << 16))
    w = quantize_pmf(counts, alpha_fp)
    assert int(w.sum()) == PMF_TOTAL
    assert w.min() >= 1


def test_update_strictly_increases_probability():
    m = CausalContextModel(8, order=1, alpha=1.0)
    before = m.pmf((3,)).probabilities()[5]
    m.update((3,), 5)
    after = m.pmf((3,)).probabilities()[5]
    assert after > before


def test_update_counts_accumulate():
    m = CausalContextModel(8, order=1)
    for _ in range(37):
        m.update((2,), 6)
    assert m.context_counts((2,))[6] == 37


def test_updates_are_context_local():
    m = CausalContextModel(8, order=1)
    base = m.pmf((1,)).weights.copy()
    for _ in range(50):
        m.update((0,), 4)
    np.testing.assert_array_equal(m.pmf((1,)).weights, base)


def test_train_constant_corpus_prefers_constant():
    grids = [np.full((6, 6), 5, dtype=np.int64) for _ in range(4)]
    m = train(CausalContextModel(8, order=2), grids)
    assert m.pmf((5, 5)).argmax() == 5


def test_train_single_cell_grid_only_marginal():
    m = train(NeighborhoodModel(4), [np.array([[2]])])
    assert m.marginal().argmax() == 2
    # no neighbours exist, so no directional context can have been seen
    ctx_weights = m.pmf((2, ABSENT, ABSENT, ABSENT)).weights
    np.testing.assert_array_equal(ctx_weights, m.marginal().weights)


def test_order0_training_equals_histogram(rng):
    grid = rng.integers(0, 16, (40, 40))
    m = train(CausalContextModel(16, order=0), [grid])
    np.testing.assert_array_equal(
        m.context_counts(()), np.bincount(grid.ravel(), minlength=16))


def test_cross_entropy_uniform():
    m = CausalContextModel(256, order=0)
    grid = np.arange(64, dtype=np.int64).reshape(8, 8)
    assert cross_entropy(m, grid) == pytest.approx(8.0)


def test_cross_entropy_deterministic_corpus():
    grid = np.zeros((100, 100), dtype=np.int64)
    m = train(CausalContextModel(2, order=1, alpha=1.0), [grid])
    assert cross_entropy(m, grid) < 0.01


def test_cross_entropy_non_negative(rng):
    for _ in range(5):
        grid = rng.integers(0, 7, (12, 12))
        m = train(CausalContextModel(7, order=1), [grid])
        assert cross_entropy(m, grid) >= 0.0


def test_alpha_floor():
    with pytest.raises(ParameterError):
        CausalContextModel(4, alpha=2.0 ** -17)


def test_neighbor_context_borders():
    tokens = np.array([[1, 2], [3, 4]])
    avail = np.ones((2, 2), dtype=bool)
    # top-left cell: up and left are outside the grid
    ctx = neighbor_context(tokens, avail, 0, 0)
    assert ctx == (ABSENT, ABSENT, 2, 3)
    avail[1, 0] = False
    assert neighbor_context(tokens, avail, 0, 0) == (ABSENT, ABSENT, 2, ABSENT)


def test_state_hash_tracks_state():
    a = CausalContextModel(16, order=1)
    b = CausalContextModel(16, order=1)
    assert a.state_hash() == b.state_hash()
    a.update((3,), 7)
    assert a.state_hash() != b.state_hash()
    b.update((3,), 7)
    assert a.state_hash() == b.state_hash()


def test_copy_is_independent():
    m = CausalContextModel(8, order=1)
    c = m.copy()
    c.update((0,), 1)
    assert m.state_hash() != c.state_hash()


@pytest.mark.parametrize("factory", [
    lambda: CausalContextModel(16, order=2, alpha=0.5),
    lambda: NeighborhoodModel(16, alpha=2.0),
])
def test_save_load_round_trip(tmp_path, rng, factory):
    m = factory()
    grid = rng.integers(0, 16, (10, 10))
    train(m, [grid])
    path = tmp_path / "model.bin"
    m.save(path)
    loaded = load_model(path)
    assert type(loaded) is type(m)
    assert loaded.state_hash() == m.state_hash()
