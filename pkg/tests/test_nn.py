import numpy as np
import pytest

from conftest import numerical_gradient, rel_err
from dan_lab.core import tensor as T
from dan_lab.core.nn import AdamState, LinearLayer, MlpNet, ParamStore, adam_step, forward, init_mlp
from dan_lab.core.tensor import Tensor
from dan_lab.errors import CheckpointError, ContractError, DimensionError


def test_init_is_deterministic():
    a = init_mlp([2, 32, 1], seed=7)
    b = init_mlp([2, 32, 1], seed=7)
    for (_, pa), (_, pb) in zip(a.parameters().items(), b.parameters().items()):
        assert np.array_equal(pa.data, pb.data)


def test_different_seeds_differ():
    a = init_mlp([2, 32, 1], seed=1)
    b = init_mlp([2, 32, 1], seed=2)
    assert not np.array_equal(a.layers[0][0].weight.data, b.layers[0][0].weight.data)


def test_biases_start_at_zero():
    net = init_mlp([3, 5, 4, 1], seed=0)
    for layer, _ in net.layers:
        assert np.all(layer.bias.data == 0.0)


def test_init_uses_fan_average_limit():
    net = init_mlp([10, 30], seed=0)
    limit = np.sqrt(6.0 / 40)
    assert np.max(np.abs(net.layers[0][0].weight.data)) <= limit


def test_init_rejects_bad_dims():
    with pytest.raises(DimensionError):
        init_mlp([4])
    with pytest.raises(DimensionError):
        init_mlp([4, 0, 1])


def test_zero_weight_sigmoid_net_outputs_half():
    net = init_mlp([3, 4, 1], out_act="sigmoid", seed=0)
    for layer, _ in net.layers:
        layer.weight.data[...] = 0.0
    out = forward(net, Tensor(np.random.default_rng(0).standard_normal((5, 3))))
    assert np.all(out.data == 0.5)


def test_single_affine_layer():
    net = MlpNet([(LinearLayer([[2.0]], [[1.0]]), "none")])
    assert net(Tensor([[3.0]])).item() == 7.0


def test_identical_rows_give_identical_outputs():
    net = init_mlp([3, 6, 2], seed=4)
    out = net(Tensor(np.tile([[0.3, -1.0, 2.0]], (4, 1))))
    assert np.all(out.data == out.data[0])


def test_forward_rejects_wrong_width():
    net = init_mlp([3, 2], seed=0)
    with pytest.raises(DimensionError):
        net(Tensor(np.ones((2, 4))))


def test_layers_must_chain():
    with pytest.raises(DimensionError):
        MlpNet([(LinearLayer(np.ones((2, 3)), np.zeros((1, 3))), "relu"),
                (LinearLayer(np.ones((4, 1)), np.zeros((1, 1))), "none")])


def test_unknown_activation():
    with pytest.raises(ContractError):
        MlpNet([(LinearLayer(np.ones((2, 1)), np.zeros((1, 1))), "swish")])


def test_input_gradient_matches_finite_differences(rng):
    net = init_mlp([3, 8, 8, 1], hidden_act="tanh", out_act="sigmoid", seed=11)
    x = Tensor(rng.standard_normal((4, 3)), requires_grad=True)

    def loss():
        return T.reduce_sum(forward(net, x))

    T.backward(loss())
    assert rel_err(x.grad, numerical_gradient(loss, x)) < 1e-4


def test_parameter_gradients_match_finite_differences(rng):
    net = init_mlp([2, 6, 3], hidden_act="leaky_relu", out_act="tanh", seed=5)
    x = Tensor(rng.standard_normal((5, 2)))
    target = Tensor(rng.standard_normal((5, 3)))

    def loss():
        diff = T.sub(net(x), target)
        return T.reduce_sum(T.mean_over_batch(T.mul(diff, diff)))

    params = net.parameters()
    params.zero_grad()
    T.backward(loss())
    for name, param in params.items():
        analytic = param.grad.copy()
        assert rel_err(analytic, numerical_gradient(loss, param)) < 1e-4, name


# Parameter store
def test_param_names_are_ordered():
    net = init_mlp([2, 3, 1], seed=0)
    assert net.parameters().names() == ["layer0.weight", "layer0.bias", "layer1.weight", "layer1.bias"]


def test_merge_prefixes_names():
    store = ParamStore().merge("phi", init_mlp([2, 3], seed=0).parameters())
    assert store.names() == ["phi.layer0.weight", "phi.layer0.bias"]


def test_duplicate_name_rejected():
    store = ParamStore()
    store.add("w", Tensor([[1.0]]))
    with pytest.raises(ContractError):
        store.add("w", Tensor([[2.0]]))


def test_load_state_round_trip():
    a = init_mlp([2, 4, 1], seed=1)
    b = init_mlp([2, 4, 1], seed=2)
    b.parameters().load_state(a.parameters().state())
    x = Tensor(np.ones((3, 2)))
    assert np.array_equal(a(x).data, b(x).data)


def test_load_state_shape_mismatch():
    a = init_mlp([2, 4, 1], seed=1)
    b = init_mlp([2, 5, 1], seed=1)
    with pytest.raises(CheckpointError):
        b.parameters().load_state(a.parameters().state())


# Adam
def _scalar_store(value):
    store = ParamStore()
    store.add("w", Tensor([[value]], requires_grad=True))
    return store


def test_adam_zero_gradient_is_fixed_point():
    net = init_mlp([2, 3, 1], seed=0)
    store = net.parameters()
    before = store.state()
    store.zero_grad()
    adam_step(store, AdamState(store, lr=0.1))
    for name, values in store.state().items():
        assert np.array_equal(values, before[name])


def test_adam_first_step_moves_by_lr():
    store = _scalar_store(0.0)
    store["w"].grad = np.array([[1.0]])
    adam_step(store, AdamState(store, lr=0.1))
    assert store["w"].item() == pytest.approx(-0.1, abs=1e-6)


def test_adam_opposite_gradients_give_opposite_steps(rng):
    g = rng.standard_normal((3, 2))
    moved = []
    for sign in (1.0, -1.0):
        store = ParamStore()
        store.add("w", Tensor(np.zeros((3, 2)), requires_grad=True))
        store["w"].grad = sign * g
        adam_step(store, AdamState(store))
        moved.append(store["w"].data.copy())
    assert np.array_equal(moved[0], -moved[1])
    assert np.all(moved[0] != 0.0)


def test_backward_leaves_parameters_until_step(rng):
    net = init_mlp([2, 6, 1], seed=3)
    store = net.parameters()
    before = store.state()
    T.backward(T.reduce_sum(T.mean_over_batch(net(Tensor(rng.standard_normal((5, 2)))))))
    for name, values in store.state().items():
        assert np.array_equal(values, before[name])
    assert np.any(store.flat_grad() != 0.0)
    adam_step(store, AdamState(store))
    assert any(not np.array_equal(values, before[name]) for name, values in store.state().items())


def test_adam_zeroes_gradients_after_step():
    store = _scalar_store(1.0)
    store["w"].grad = np.array([[0.5]])
    adam_step(store, AdamState(store))
    assert store["w"].grad[0, 0] == 0.0


def test_adam_missing_gradient_names_parameter():
    store = _scalar_store(1.0)
    with pytest.raises(ContractError, match="'w'"):
        adam_step(store, AdamState(store))


def test_adam_converges_on_quadratic():
    store = _scalar_store(0.0)
    state = AdamState(store, lr=1e-2, beta1=0.9, beta2=0.999)
    w = store["w"]
    for _ in range(5000):
        diff = T.sub(w, 3.0)
        T.backward(T.reduce_sum(T.mul(diff, diff)))
        adam_step(store, state)
    assert abs(w.item() - 3.0) < 1e-2
