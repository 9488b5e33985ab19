import numpy as np
import pytest

from qclass.numerics import Rng, finite_difference_grad, max_relative_error
from qclass.network import (
    backward,
    forward,
    init_model,
    k_max_pool,
    parameters,
    predict,
    predict_proba,
    wide_convolve,
)
from qclass.training import cross_entropy

from _toolbox import naive_k_max, naive_wide_convolve


def tiny_model(rng, dim=4, classes=3, filters=2, heights=(2, 3), hidden=8, dropout=0.0):
    return init_model(
        dim,
        classes,
        rng,
        filters_per_height=filters,
        heights=heights,
        hidden=hidden,
        pool_size=2,
        dropout_p=dropout,
    )


def test_wide_convolve_output_length():
    rng = Rng(0)
    for m in (1, 2, 5, 9):
        for n in (1, 2, 3, 5):
            sentence = rng.normal(0.0, 1.0, (m, 4))
            kernel = rng.normal(0.0, 1.0, (n, 4))
            out = wide_convolve(sentence, kernel)
            assert out.shape == (m + n - 1,)


def test_wide_convolve_matches_loop_oracle():
    rng = Rng(1)
    for _ in range(60):
        m = rng.integers(1, 9)
        n = rng.integers(1, 6)
        d = rng.integers(1, 7)
        sentence = rng.normal(0.0, 1.0, (m, d))
        kernel = rng.normal(0.0, 1.0, (n, d))
        bias = float(rng.normal(0.0, 1.0))
        expected = naive_wide_convolve(sentence, kernel, bias)
        actual = wide_convolve(sentence, kernel, bias)
        assert max_relative_error(actual, expected) <= 1e-12


def test_wide_convolve_kernel_taller_than_sentence():
    # A one-word sentence under a height-5 kernel still yields 5 positions.
    sentence = np.ones((1, 3))
    kernel = np.ones((5, 3))
    out = wide_convolve(sentence, kernel)
    assert out.shape == (5,)
    assert np.allclose(out, 3.0)


def test_wide_convolve_shape_errors():
    with pytest.raises(ValueError):
        wide_convolve(np.zeros((3, 4)), np.zeros((2, 5)))
    with pytest.raises(ValueError):
        wide_convolve(np.zeros(4), np.zeros((2, 4)))


def test_k_max_pool_keeps_original_order():
    out = k_max_pool(np.array([1.0, 9.0, 3.0, 7.0]), 2)
    assert np.array_equal(out, [9.0, 7.0])
    out = k_max_pool(np.array([7.0, 1.0, 9.0]), 2)
    assert np.array_equal(out, [7.0, 9.0])


def test_k_max_pool_ties_take_earliest():
    out = k_max_pool(np.array([5.0, 2.0, 5.0, 5.0]), 2)
    assert np.array_equal(out, [5.0, 5.0])
    # All equal: the first k positions win.
    out = k_max_pool(np.zeros(4), 3)
    assert np.array_equal(out, np.zeros(3))


def test_k_max_pool_matches_sort_oracle():
    rng = Rng(2)
    for _ in range(100):
        size = rng.integers(1, 12)
        k = rng.integers(1, size + 1)
        # Draw from few distinct values so ties are common.
        values = np.array([float(rng.integers(0, 4)) for _ in range(size)])
        assert np.array_equal(k_max_pool(values, k), naive_k_max(values, k))


def test_k_max_pool_errors():
    with pytest.raises(ValueError):
        k_max_pool(np.zeros(2), 3)
    with pytest.raises(ValueError):
        k_max_pool(np.zeros(2), 0)
    with pytest.raises(ValueError):
        k_max_pool(np.zeros((2, 2)), 1)


def test_init_model_deterministic_and_zero_biased():
    a = tiny_model(Rng(5))
    b = tiny_model(Rng(5))
    for name, tensor in parameters(a).items():
        assert np.array_equal(tensor, parameters(b)[name]), name
    assert np.array_equal(a.fc1.biases, np.zeros(8))
    assert all(np.array_equal(bank.biases, np.zeros(2)) for bank in a.banks)


def test_init_model_rejects_odd_hidden():
    with pytest.raises(ValueError):
        init_model(4, 3, Rng(0), hidden=7)


def test_model_invariants_reject_mismatched_fc1():
    from dataclasses import replace

    from qclass.network import DenseLayer

    model = tiny_model(Rng(0))
    bad_fc1 = DenseLayer(weights=np.zeros((8, 3)), biases=np.zeros(8))
    with pytest.raises(ValueError, match="fc1 input size"):
        replace(model, fc1=bad_fc1)


def test_model_invariants_reject_unordered_heights():
    from dataclasses import replace

    model = tiny_model(Rng(0))
    with pytest.raises(ValueError, match="ascending"):
        replace(model, banks=list(reversed(model.banks)))


def test_forward_probabilities_sum_to_one():
    rng = Rng(6)
    model = tiny_model(rng)
    for _ in range(20):
        m = rng.integers(1, 10)
        sentence = rng.normal(0.0, 1.0, (m, 4))
        cache = forward(model, sentence)
        assert abs(float(cache.probs.sum()) - 1.0) <= 1e-9
        assert np.all(cache.probs >= 0.0)


def test_forward_zero_weights_uniform_probs():
    model = tiny_model(Rng(7), classes=5)
    for tensor in parameters(model).values():
        tensor[...] = 0.0
    cache = forward(model, Rng(8).normal(0.0, 1.0, (6, 4)))
    assert np.allclose(cache.probs, 0.2, atol=1e-12)


def test_forward_eval_mode_is_deterministic_despite_dropout():
    model = tiny_model(Rng(9), dropout=0.5)
    sentence = Rng(10).normal(0.0, 1.0, (5, 4))
    a = forward(model, sentence).probs
    b = forward(model, sentence).probs
    assert np.array_equal(a, b)


def test_forward_train_mode_requires_rng_when_dropout_active():
    model = tiny_model(Rng(11), dropout=0.5)
    sentence = np.zeros((3, 4))
    with pytest.raises(ValueError, match="rng or dropout_masks"):
        forward(model, sentence, train_mode=True)
    # No dropout: train mode needs no rng.
    model0 = tiny_model(Rng(11), dropout=0.0)
    forward(model0, sentence, train_mode=True)


def test_forward_rejects_wrong_sentence_dim():
    model = tiny_model(Rng(12))
    with pytest.raises(ValueError, match="embedding dim"):
        forward(model, np.zeros((3, 5)))


def test_forward_rejects_bad_mask_shapes():
    model = tiny_model(Rng(13), dropout=0.5)
    with pytest.raises(ValueError, match="mask shapes"):
        forward(
            model,
            np.zeros((3, 4)),
            train_mode=True,
            dropout_masks=(np.ones(3), np.ones(4)),
        )


def test_merged_vector_layout():
    # Heights ascending, then filters by index, then pooled positions in
    # original order.
    rng = Rng(14)
    model = tiny_model(rng, filters=2, heights=(2, 3))
    sentence = rng.normal(0.0, 1.0, (6, 4))
    cache = forward(model, sentence)
    expected = []
    for i, bank in enumerate(model.banks):
        act = cache.conv_act[i]
        rows = cache.pool_rows[i]
        for f in range(bank.filter_count):
            for p in range(model.pool_size):
                expected.append(act[rows[p, f], f])
    assert np.array_equal(cache.merged, np.array(expected))


def test_pool_rows_are_sorted_and_maximal():
    rng = Rng(15)
    model = tiny_model(rng)
    sentence = rng.normal(0.0, 1.0, (7, 4))
    cache = forward(model, sentence)
    for i in range(len(model.banks)):
        act = cache.conv_act[i]
        rows = cache.pool_rows[i]
        for f in range(act.shape[1]):
            selected = rows[:, f]
            assert list(selected) == sorted(selected)
            assert np.array_equal(act[selected, f], naive_k_max(act[:, f], 2))


def test_backward_rejects_foreign_cache():
    rng = Rng(16)
    model_a = tiny_model(rng)
    model_b = tiny_model(rng)
    cache = forward(model_a, np.zeros((3, 4)))
    with pytest.raises(ValueError, match="different model"):
        backward(model_b, cache, 0)


def test_backward_rejects_bad_target():
    model = tiny_model(Rng(17))
    cache = forward(model, np.zeros((3, 4)))
    with pytest.raises(ValueError):
        backward(model, cache, 3)
    with pytest.raises(ValueError):
        backward(model, cache, -1)


def test_output_bias_gradient_equals_probs_minus_onehot():
    rng = Rng(18)
    model = tiny_model(rng, classes=4)
    sentence = rng.normal(0.0, 1.0, (5, 4))
    cache = forward(model, sentence)
    grads = backward(model, cache, 2)
    expected = cache.probs.copy()
    expected[2] -= 1.0
    assert np.allclose(grads["out.biases"], expected, atol=1e-15)
    # A class the softmax never targets still gets gradient = its prob.
    assert grads["out.biases"][0] == pytest.approx(cache.probs[0])


def test_unselected_conv_windows_get_zero_gradient():
    # One filter, pool size 1, identity conv activation: the kernel
    # gradient must be a multiple of the single selected window.
    rng = Rng(19)
    model = init_model(
        3,
        2,
        rng,
        filters_per_height=1,
        heights=(2,),
        hidden=4,
        pool_size=1,
        dropout_p=0.0,
        conv_activation="none",
    )
    sentence = rng.normal(0.0, 1.0, (5, 3))
    cache = forward(model, sentence)
    grads = backward(model, cache, 0)
    selected = cache.pool_rows[0][0, 0]
    window = cache.windows[0][selected]
    grad = grads["conv2.kernels"][0]
    # Parallel to the selected window: grad = scale * window exactly.
    scale = grad[np.argmax(np.abs(window))] / window[np.argmax(np.abs(window))]
    assert np.allclose(grad, scale * window, atol=1e-12)


def test_backward_matches_finite_differences_eval_mode():
    rng = Rng(20)
    model = tiny_model(rng, dim=3, classes=3, filters=2, heights=(2, 3), hidden=4)
    sentence = rng.normal(0.0, 1.0, (4, 3))
    target = 1
    cache = forward(model, sentence)
    grads = backward(model, cache, target)
    for name, param in parameters(model).items():
        def loss_at(values, _param=param):
            saved = _param.copy()
            _param[...] = values
            try:
                return cross_entropy(forward(model, sentence).probs, target)
            finally:
                _param[...] = saved
        numeric = finite_difference_grad(loss_at, param)
        assert max_relative_error(grads[name], numeric) < 1e-6, name


def test_gradients_flow_through_frozen_dropout_masks():
    rng = Rng(21)
    model = tiny_model(rng, dropout=0.5)
    sentence = rng.normal(0.0, 1.0, (5, 4))
    masks = (
        (rng.uniform(8) >= 0.5) / 0.5,
        (rng.uniform(4) >= 0.5) / 0.5,
    )
    cache = forward(model, sentence, train_mode=True, dropout_masks=masks)
    grads = backward(model, cache, 0)
    # Dropped fc2 units contribute nothing to the output, so their outgoing
    # weights get zero gradient.
    dropped = np.flatnonzero(masks[1] == 0.0)
    assert dropped.size > 0
    assert np.allclose(grads["out.weights"][:, dropped], 0.0)


def test_predict_tie_takes_lowest_index():
    model = tiny_model(Rng(22), classes=4)
    for tensor in parameters(model).values():
        tensor[...] = 0.0
    assert predict(model, np.ones((3, 4))) == 0


def test_predict_consistent_with_predict_proba():
    rng = Rng(23)
    model = tiny_model(rng)
    for _ in range(10):
        sentence = rng.normal(0.0, 1.0, (rng.integers(1, 8), 4))
        probs = predict_proba(model, sentence)
        assert predict(model, sentence) == int(np.argmax(probs))


def test_sentence_matrix_input_accepted():
    from qclass.embeddings import SentenceMatrix

    rng = Rng(24)
    model = tiny_model(rng)
    values = rng.normal(0.0, 1.0, (4, 4))
    sm = SentenceMatrix(values=values, tokens=("a", "b", "c", "d"))
    assert np.array_equal(forward(model, sm).probs, forward(model, values).probs)
