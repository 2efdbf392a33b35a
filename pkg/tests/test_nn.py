import numpy as np
import pytest

from afc import nn
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.tabulator import build_table

TANH, SELU = ActivationSpec("tanh"), ActivationSpec("selu")


@pytest.fixture(scope="module")
def data():
    return nn.generate_synthetic(seed=42)


@pytest.fixture(scope="module")
def tanh_model(data):
    return nn.train(data, TANH, seed=42)


def test_synthetic_is_deterministic(data):
    again = nn.generate_synthetic(seed=42)
    assert np.array_equal(data.X, again.X) and np.array_equal(data.y, again.y)
    assert np.array_equal(data.split, again.split)
    other = nn.generate_synthetic(seed=7)
    assert not np.array_equal(data.X, other.X)


def test_synthetic_shape(data):
    assert data.X.shape == (3000, 2)
    assert set(np.unique(data.y)) == {0, 1, 2}
    assert data.split.mean() == pytest.approx(0.25, abs=0.03)
    assert np.allclose(data.X.mean(axis=0), 0, atol=1e-9)


def test_dataset_csv_round_trip_keeps_split(data):
    text = data.to_csv("# made by a test")
    assert text.splitlines()[1] == "f0,f1,label"
    back = nn.Dataset.from_csv(text)
    assert np.allclose(back.X, data.X)
    assert np.array_equal(back.y, data.y)
    assert np.array_equal(back.split, data.split)


def test_dataset_csv_with_split_column():
    text = "a,b,label,split\n0,0,0,train\n1,1,1,test\n2,2,1,train\n"
    d = nn.Dataset.from_csv(text)
    assert d.split.tolist() == [False, True, False]
    assert d.n_classes == 2


def test_model_shapes():
    m = nn.MlpModel.init((4, 8, 3), TANH, seed=1)
    assert [p.shape for p in m.params()] == [(4, 8), (8,), (8, 3), (3,)]
    probs = nn.forward(m, np.zeros((5, 4)))
    assert probs.shape == (5, 3)
    assert np.allclose(probs.sum(axis=1), 1)
    with pytest.raises(ValueError):
        nn.MlpModel((4, 8, 3), m.weights[:1], m.biases[:1], TANH)


@pytest.mark.parametrize("act", [TANH, SELU], ids=["tanh", "selu"])
def test_gradient_check(act):
    rng = np.random.default_rng(3)
    m = nn.MlpModel.init((3, 5, 4), act, seed=3)
    for b in m.biases:
        b[:] = rng.normal(scale=0.3, size=b.shape)
    X, y = rng.normal(size=(16, 3)), rng.integers(0, 4, size=16)
    _, grads = nn.loss_and_grads(m, X, y)
    eps = 1e-6
    for p, g in zip(m.params(), grads):
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            lp, _ = nn.loss_and_grads(m, X, y)
            p[idx] = old - eps
            lm, _ = nn.loss_and_grads(m, X, y)
            p[idx] = old
            num[idx] = (lp - lm) / (2 * eps)
        rel = np.abs(num - g).max() / max(1e-8, np.abs(num).max() + np.abs(g).max())
        assert rel < 1e-4


def test_training_learns(data, tanh_model):
    acc = nn.infer(tanh_model, data)
    assert acc > 90.0
    h = tanh_model.history[-1]
    assert h["test_accuracy"] == acc
    assert h["train_accuracy"] > 90.0


def test_training_is_deterministic(data, tanh_model):
    again = nn.train(data, TANH, seed=42)
    assert all(np.array_equal(a, b) for a, b in zip(again.params(), tanh_model.params()))


def test_zero_epochs_near_chance(data):
    m = nn.train(data, TANH, epochs=0)
    assert nn.infer(m, data) < 70.0


def test_training_rejects_unknown_activation(data):
    with pytest.raises(ValueError):
        nn.train(data, ActivationSpec("exp"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises(data):
    with pytest.raises(nn.TrainingDiverged):
        nn.train(data, SELU, lr=1e6, epochs=2)


def test_fine_table_matches_float(data, tanh_model):
    table = build_table(TANH, FixedPointFormat(1, 11), FixedPointFormat(1, 11))
    assert abs(nn.infer_quantized(tanh_model, data, table) - nn.infer(tanh_model, data)) <= 0.5


def test_one_bit_output_collapses(data, tanh_model):
    # with a single output bit every hidden unit is 0 or saturated, and the network degrades
    with pytest.warns(UserWarning, match="no fractional bits"):
        table = build_table(TANH, FixedPointFormat(1, 1), FixedPointFormat(1, 0))
    assert nn.infer_quantized(tanh_model, data, table) < nn.infer(tanh_model, data) - 5


def test_float_swap_is_no_op(data, tanh_model):
    X, y = data.test()
    assert nn.accuracy(nn.forward(tanh_model, X, TANH), y) == nn.infer(tanh_model, data)


def test_kind_mismatch(data, tanh_model):
    with pytest.raises(ValueError):
        nn.infer_quantized(tanh_model, data, build_table(SELU, FixedPointFormat(2, 3), FixedPointFormat(1, 7)))
    with pytest.raises(ValueError):
        nn.variant_table("selu_8_5", TANH)


def test_hidden_activations_on_output_grid(data, tanh_model):
    table = nn.variant_table("tanh_7_6", TANH)
    X, _ = data.test()
    h = nn.quantized_activation(table)(X @ tanh_model.weights[0] + tanh_model.biases[0])
    scaled = h * 64
    assert np.array_equal(scaled, np.round(scaled))
    assert np.abs(h).max() <= 1.0


def test_checkpoint_round_trip(tmp_path, tanh_model):
    path = tmp_path / "m.json"
    tanh_model.save(path)
    back = nn.MlpModel.load(path)
    assert back.sizes == tanh_model.sizes
    assert back.activation.kind == "tanh"
    assert all(np.array_equal(a, b) for a, b in zip(back.params(), tanh_model.params()))
    assert back.history == tanh_model.history
    with pytest.raises(ValueError):
        nn.MlpModel.from_json('{"format": "other"}')
    with pytest.raises(ValueError):
        nn.MlpModel.from_json('{"format": "afc-mlp", "version": 99}')


def test_variant_formats():
    assert nn.variant_formats("tanh_7_6") == ("tanh", FixedPointFormat(1, 5), FixedPointFormat(1, 6))
    assert nn.variant_formats("selu_8_5") == ("selu", FixedPointFormat(2, 3), FixedPointFormat(1, 7))
    for bad in ("tanh7_6", "tanh_1_4", "tanh_7_1"):
        with pytest.raises(ValueError):
            nn.variant_formats(bad)


def test_sweep_and_report_round_trip(data, tanh_model):
    selu_model = nn.train(data, SELU, seed=42)
    rows = nn.sweep({"tanh": tanh_model, "selu": selu_model}, data)
    assert [r.variant for r in rows] == list(nn.DEFAULT_VARIANTS)
    assert rows[0].float_accuracy == nn.infer(tanh_model, data)
    back = nn.parse_sweep_report(nn.sweep_report(rows, "# header"))
    assert back == rows
    with pytest.raises(ValueError):
        nn.sweep({"tanh": tanh_model}, data, ["selu_8_5"])
