import numpy as np
import pytest

from src.errors import ShapeError, StaleCacheError
from src.models import network
from src.models.functional import softmax
from src.models.network import NetworkSpec, backward, forward, init_params


def reference_q(params, obs):
    """Straight-line nested-loop evaluator, independent of the engine's einsum path"""
    x = np.asarray(obs, dtype=np.float64)
    for name, conv in zip(network.CONV_LAYERS, params.spec.convs):
        weight, bias = (t.astype(np.float64) for t in params.layer(name))
        k, s = conv.kernel, conv.stride
        h_out = (x.shape[0] - k) // s + 1
        w_out = (x.shape[1] - k) // s + 1
        out = np.zeros((h_out, w_out, weight.shape[-1]))
        for i in range(h_out):
            for j in range(w_out):
                for o in range(weight.shape[-1]):
                    total = bias[o]
                    for di in range(k):
                        for dj in range(k):
                            for c in range(x.shape[2]):
                                total += x[i * s + di, j * s + dj, c] * weight[di, dj, c, o]
                    out[i, j, o] = max(total, 0.0)
        x = out
    flat = x.reshape(-1)
    weight, bias = (t.astype(np.float64) for t in params.layer("dense1"))
    features = np.maximum(flat @ weight + bias, 0.0)
    weight, bias = (t.astype(np.float64) for t in params.layer("head"))
    return features @ weight + bias


def test_init_params_deterministic():
    spec = NetworkSpec()
    a, b = init_params(spec, 42), init_params(spec, 42)
    for name in a.tensors:
        assert np.array_equal(a.tensors[name], b.tensors[name])


def test_init_params_seed_changes_weights():
    spec = NetworkSpec()
    a, b = init_params(spec, 42), init_params(spec, 43)
    assert any(not np.array_equal(a.tensors[n], b.tensors[n]) for n in a.tensors)


def test_init_params_zero_biases_and_random_provenance():
    params = init_params(NetworkSpec(), 7)
    for layer in network.LAYER_NAMES:
        _, bias = params.layer(layer)
        assert not bias.any()
    assert set(params.provenance.values()) == {network.PROVENANCE_RANDOM}
    assert params.dtype == np.float32


def test_forward_shapes():
    spec = NetworkSpec()
    params = init_params(spec, 0)
    obs = np.zeros(spec.input_shape, dtype=np.float32)
    out = forward(params, obs)
    assert out.q.shape == (6,)
    assert out.features.shape == (64,)

    batch = forward(params, np.zeros((5, *spec.input_shape), dtype=np.float32))
    assert batch.q.shape == (5, 6)
    assert batch.features.shape == (5, 64)


def test_forward_zero_params_gives_zero_outputs(rng):
    params = network.NetworkParams.zeros(NetworkSpec())
    out = forward(params, rng.random((10, 10, 8)))
    assert not out.q.any()
    assert not out.features.any()


def test_forward_rejects_wrong_shape():
    params = init_params(NetworkSpec(), 0)
    with pytest.raises(ShapeError):
        forward(params, np.zeros((9, 10, 8)))


def test_forward_is_pure(rng):
    params = init_params(NetworkSpec(), 3)
    obs = (rng.random((4, 10, 10, 8)) < 0.3).astype(np.float32)
    a, b = forward(params, obs), forward(params, obs)
    assert np.array_equal(a.q, b.q)
    assert np.array_equal(a.features, b.features)
    assert (a.features >= 0).all()


@pytest.mark.parametrize("case", range(10))
def test_forward_matches_reference_evaluator(case):
    rng = np.random.default_rng(case)
    params = init_params(NetworkSpec(), case)
    params = params.with_tensors(
        {n: rng.normal(0, 0.1, v.shape).astype(np.float32) for n, v in params.tensors.items() if n.endswith(".bias")}
    )
    obs = (rng.random((10, 10, 8)) < 0.3).astype(np.float32)
    expected = reference_q(params, obs)
    actual = forward(params, obs).q.astype(np.float64)
    np.testing.assert_allclose(actual, expected, rtol=1e-5, atol=1e-6)


def test_backward_zero_upstream_gives_zero_grads(rng):
    params = init_params(NetworkSpec.reduced(), 1)
    out = forward(params, rng.normal(size=(3, 4, 4, 2)))
    grads = backward(params, out.cache, np.zeros_like(out.q), np.zeros_like(out.features))
    assert all(not g.any() for g in grads.tensors.values())


def test_backward_is_linear_in_upstream(rng):
    params = init_params(NetworkSpec.reduced(), 2, dtype=np.float64)
    out = forward(params, rng.normal(size=(3, 4, 4, 2)))
    a, b = rng.normal(size=out.q.shape), rng.normal(size=out.features.shape)
    both = backward(params, out.cache, a, b)
    head_only = backward(params, out.cache, a)
    features_only = backward(params, out.cache, np.zeros_like(a), b)
    for name in both.tensors:
        np.testing.assert_allclose(both.tensors[name], head_only.tensors[name] + features_only.tensors[name], atol=1e-12)


def test_backward_rejects_stale_cache(rng):
    params = init_params(NetworkSpec.reduced(), 1)
    out = forward(params, rng.normal(size=(2, 4, 4, 2)))
    updated = params.with_tensors({})
    with pytest.raises(StaleCacheError):
        backward(updated, out.cache, np.zeros_like(out.q))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3), atol=1e-12)
    np.testing.assert_allclose(softmax(np.array([np.log(2.0), 0.0])), [2 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(softmax(np.array([10.0, 0.0]), temperature=10.0), [0.7310585786, 0.2689414214], atol=1e-9)


def test_softmax_shift_invariance(rng):
    v = rng.normal(size=(5, 4))
    np.testing.assert_allclose(softmax(v + 123.0, 0.7), softmax(v, 0.7), atol=1e-6)
    np.testing.assert_allclose(softmax(v).sum(axis=-1), 1.0, atol=1e-6)


def test_softmax_rejects_non_positive_temperature():
    with pytest.raises(ValueError):
        softmax(np.zeros(3), 0.0)
