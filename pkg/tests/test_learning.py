
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grad_checks import elbo_gradient_error, mlp_gradient_error
from keyplan.errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidParams,
    NoForwardRecorded,
    NoTermination,
    PointOutOfBounds,
)
from keyplan.geometry import ConvexPolygon, Workspace, points_free
from keyplan.learning import (
    Adam,
    CvaeModel,
    KeypointNet,
    Mlp,
    TrainConfig,
    XTransform,
    elbo_loss,
    encode_environment,
    kl_standard_gaussian,
    mlp_forward,
    mlp_gradients,
    predict_keypoints,
    sample_cvae,
    train_cvae,
    train_keypoint_net,
)
from keyplan.learning.encoding import condition_vector, normalize_point
from oracles import mlp_forward_loops

# mlp

def test_zero_net_gives_zero_output():
    m = Mlp.zeros((3, 4, 2))
    assert np.all(mlp_forward(m, np.array([1.0, -2.0, 3.0])) == 0.0)


def test_identity_single_layer():
    m = Mlp((3, 3), [np.eye(3)], [np.zeros(3)])
    x = np.array([0.3, -5.0, 7.0])
    assert np.array_equal(mlp_forward(m, x), x)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_forward_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    sizes = (4, 5, 3, 2)
    m = Mlp.init(sizes, rng)
    for b in m.biases:
        b[:] = rng.normal(size=b.shape)
    x = rng.normal(size=4)
    ref = mlp_forward_loops(sizes, [w.tolist() for w in m.weights], [b.tolist() for b in m.biases], x)
    assert np.max(np.abs(mlp_forward(m, x) - ref)) <= 1e-12


def test_batch_forward_matches_rows():
    rng = np.random.default_rng(0)
    m = Mlp.init((3, 6, 2), rng)
    X = rng.normal(size=(5, 3))
    batch = m.forward(X)
    for i in range(5):
        assert np.allclose(batch[i], m.forward(X[i]), atol=1e-14)


def test_constant_loss_gives_zero_gradients():
    m = Mlp.init((3, 4, 2), np.random.default_rng(1))
    m.forward(np.ones(3))
    assert all(np.all(g == 0) for g in mlp_gradients(m, np.zeros(2)))


@pytest.mark.parametrize("seed", range(5))
def test_mlp_gradients_match_finite_differences(seed):
    assert mlp_gradient_error(seed) <= 1e-4


def test_gradient_linearity():
    m = Mlp.init((3, 4, 2), np.random.default_rng(2))
    m.forward(np.array([0.1, 0.2, 0.3]))
    adj = np.array([0.7, -1.1])
    g1 = mlp_gradients(m, adj)
    g2 = mlp_gradients(m, 2 * adj)
    assert all(np.allclose(b, 2 * a, rtol=1e-14, atol=0) for a, b in zip(g1, g2))


def test_backward_errors():
    m = Mlp.init((3, 2), np.random.default_rng(0))
    with pytest.raises(NoForwardRecorded):
        m.backward(np.ones(2))
    m.forward(np.ones(3))
    with pytest.raises(DimensionMismatch):
        m.backward(np.ones(3))
    with pytest.raises(DimensionMismatch):
        m.forward(np.ones(4))


def test_mlp_dict_round_trip():
    m = Mlp.init((3, 4, 2), np.random.default_rng(0))
    m2 = Mlp.from_dict(m.to_dict())
    assert all(np.array_equal(a, b) for a, b in zip(m.params, m2.params))


def test_adam_minimises_quadratic():
    x = np.array([3.0, -2.0])
    opt = Adam([x], lr=0.1)
    for _ in range(500):
        opt.step([2 * x])
    assert np.linalg.norm(x) < 1e-2


# kl / elbo

def test_kl_zero_at_prior():
    assert kl_standard_gaussian(np.zeros(3), np.zeros(3)) == 0.0


def test_kl_scalar_closed_form():
    assert abs(kl_standard_gaussian(np.array([1.0]), np.array([0.0])) - 0.5) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6))
def test_kl_additive_over_dimensions(pairs):
    mu = np.array([p[0] for p in pairs])
    lv = np.array([p[1] for p in pairs])
    total = sum(kl_standard_gaussian(mu[i:i + 1], lv[i:i + 1]) for i in range(len(mu)))
    assert kl_standard_gaussian(mu, lv) == pytest.approx(total, rel=1e-12, abs=1e-15)
    assert kl_standard_gaussian(mu, lv) >= -1e-12


def test_elbo_zero_for_perfect_decoder_and_prior_encoder():
    x = np.array([0.3, -0.7])
    model = CvaeModel.init(2, 3, 2, hidden=(4,), seed=0)
    for p in model.params:
        p[...] = 0.0
    model.decoder.biases[-1][:] = x
    loss, _ = elbo_loss(model, x, np.ones(3), np.array([0.4, -1.2]))
    assert loss == 0.0


def test_elbo_with_zero_noise_is_reconstruction_at_mean():
    model = CvaeModel.init(2, 3, 2, hidden=(5,), seed=1)
    x, c = np.array([0.2, 0.1]), np.array([0.5, -0.5, 1.0])
    loss, _ = elbo_loss(model, x, c, np.zeros(2))
    h = model.encoder.forward(np.r_[x, c])
    mu, lv = h[:2], h[2:]
    rec = model.decoder.forward(np.r_[mu, c])
    expect = 0.5 * np.sum((rec - x) ** 2) + kl_standard_gaussian(mu, lv)
    assert loss == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_elbo_gradients_match_finite_differences(seed):
    assert elbo_gradient_error(seed) <= 1e-4


def test_elbo_dimension_mismatch():
    model = CvaeModel.init(2, 3, 2, hidden=(4,), seed=0)
    with pytest.raises(DimensionMismatch):
        elbo_loss(model, np.zeros(3), np.zeros(3), np.zeros(2))


def test_xtransform_round_trip():
    t = XTransform("anchored", (), (0.1, 0.1), (0.0, 0.0), (2.0, 1.0))
    cond = np.r_[np.zeros(5), 0.25, 0.5, 0.75, 0.5]
    x = np.array([[0.9, 0.4]])
    assert np.allclose(t.from_model(t.to_model(x, cond), cond), x)
    # centred on the keypoint midpoint (1.0, 0.5)
    assert np.allclose(t.to_model(np.array([1.0, 0.5]), cond), 0.0)
    assert XTransform.from_dict(t.to_dict()) == t


# cvae training

CORRIDOR = Workspace((0, 0, 1, 1), (ConvexPolygon.rectangle(0, 0, 1, 0.45), ConvexPolygon.rectangle(0, 0.55, 1, 1)))


def corridor_data(n=500, seed=0):
    rng = np.random.default_rng(seed)
    xs = np.c_[rng.uniform(0.05, 0.95, n), rng.uniform(0.47, 0.53, n)]
    conds = np.tile([1.0, 0.0, 0.5, 0.5], (n, 1))
    return xs, conds


def test_cvae_loss_decreases_first_ten_epochs():
    xs, conds = corridor_data()
    # full batch, so the only noise is the reparameterisation draw
    m = train_cvae(xs, conds, TrainConfig(epochs=10, batch_size=500, lr=1e-3, hidden=(32, 32), latent_dim=2))
    assert all(b < a for a, b in zip(m.history, m.history[1:]))


def test_cvae_samples_mostly_free_in_training_environment():
    xs, conds = corridor_data()
    t = XTransform("global", (0.5, 0.5), (0.25, 0.25), (), ())
    m = train_cvae(xs, conds, TrainConfig(epochs=60, batch_size=50, lr=3e-3, hidden=(32, 32), latent_dim=2), t)
    draws = sample_cvae(m, conds[0], 1000, seed=0)
    free = points_free(draws, CORRIDOR).mean()
    uniform_free = 0.1  # analytic free-area fraction of the corridor world
    assert free >= 0.6 and free > uniform_free


def test_cvae_memorises_single_datum():
    xs = np.tile([0.3, 0.8], (64, 1))
    conds = np.ones((64, 2))
    m = train_cvae(xs, conds, TrainConfig(epochs=300, batch_size=64, lr=3e-3, hidden=(16,), latent_dim=1))
    assert m.history[-1] < 1e-2 * m.history[0]
    h = m.encoder.forward(np.r_[xs[0], conds[0]])
    rec = m.decoder.forward(np.r_[h[:1], conds[0]])
    assert np.linalg.norm(rec - xs[0]) < 0.05


def test_cvae_training_is_deterministic():
    xs, conds = corridor_data(100)
    cfg = TrainConfig(epochs=3, batch_size=20, hidden=(8,), latent_dim=2)
    a, b = train_cvae(xs, conds, cfg), train_cvae(xs, conds, cfg)
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
    assert a.history == b.history


def test_sample_cvae_edge_cases():
    m = CvaeModel.init(2, 3, 2, hidden=(4,), seed=0)
    assert sample_cvae(m, np.zeros(3), 0).shape == (0, 2)
    assert np.array_equal(sample_cvae(m, np.zeros(3), 10, seed=4), sample_cvae(m, np.zeros(3), 10, seed=4))
    with pytest.raises(DimensionMismatch):
        sample_cvae(m, np.zeros(4), 3)


def test_train_cvae_rejects_empty():
    with pytest.raises(EmptyDataset):
        train_cvae(np.zeros((0, 2)), np.zeros((0, 3)))
    with pytest.raises(InvalidParams):
        TrainConfig(epochs=0)


def test_cvae_dict_round_trip():
    m = CvaeModel.init(2, 3, 2, hidden=(4,), seed=0)
    m.history.append(1.5)
    m2 = CvaeModel.from_dict(m.to_dict())
    assert all(np.array_equal(p, q) for p, q in zip(m.params, m2.params))
    assert m2.history == [1.5] and m2.transform == m.transform


# encoding

def test_empty_workspace_zero_occupancy():
    enc = encode_environment(Workspace((0, 0, 1, 1)), (0.1, 0.1), (0.9, 0.9), 16)
    assert enc.occupancy.shape == (16, 16) and not enc.occupancy.any()


def test_left_half_wall_occupancy():
    w = Workspace((0, 0, 2, 1), (ConvexPolygon.rectangle(0, 0, 1, 1),))
    enc = encode_environment(w, (1.5, 0.5), (1.9, 0.5), 8)
    assert np.all(enc.occupancy[:, :4] == 1) and np.all(enc.occupancy[:, 4:] == 0)


def test_start_bump_peaks_at_center():
    enc = encode_environment(Workspace((0, 0, 1, 1)), (0.5, 0.5), (0.1, 0.1), 16)
    assert np.unravel_index(np.argmax(enc.start), enc.start.shape) == (8, 8)
    assert enc.start.max() == 1.0
    # rows index y from the bottom
    assert np.unravel_index(np.argmax(enc.goal), enc.goal.shape) == (1, 1)


def test_encoding_errors_and_layout():
    w = Workspace((0, 0, 1, 1))
    with pytest.raises(PointOutOfBounds):
        encode_environment(w, (1.5, 0.5), (0.1, 0.1))
    with pytest.raises(InvalidParams):
        encode_environment(w, (0.5, 0.5), (0.1, 0.1), G=2)
    c = condition_vector(w, (0.25, 0.5), (0.75, 0.5), 16)
    assert c.shape == (3 * 256 + 4,)
    assert np.allclose(c[-4:], [0.25, 0.5, 0.75, 0.5])


# keypoint net

G = 4


def _kp_data(points_by_env):
    from keyplan.learning.keypoint_net import unroll_sequence
    X, Y = [], []
    for w, pts in points_by_env:
        x, y = unroll_sequence(w, pts, G)
        X.append(x)
        Y.append(y)
    return np.vstack(X), np.vstack(Y)


def test_keypoint_net_fits_identical_pairs():
    w = Workspace((0, 0, 1, 1))
    X, Y = _kp_data([(w, [(0.1, 0.1), (0.7, 0.3), (0.9, 0.9)])] * 1)
    X, Y = np.repeat(X[:1], 32, axis=0), np.repeat(Y[:1], 32, axis=0)
    net = train_keypoint_net(X, Y, TrainConfig(epochs=200, batch_size=32, lr=3e-3, hidden=(16,)), grid=G)
    assert net.history[-1] < 1e-5
    assert np.allclose(net.predict(w, (0.1, 0.1), (0.9, 0.9)), (0.7, 0.3), atol=1e-2)


def test_keypoint_net_two_clusters():
    w = Workspace((0, 0, 1, 1))
    rng = np.random.default_rng(0)
    left = [(w, [(0.1, y), (0.3, 0.2), (0.9, 0.5)]) for y in rng.uniform(0.0, 0.3, 20)]
    right = [(w, [(0.1, y), (0.3, 0.8), (0.9, 0.5)]) for y in rng.uniform(0.7, 1.0, 20)]
    X, Y = _kp_data(left + right)
    # keep only the first step of each sequence
    X, Y = X[::2], Y[::2]
    net = train_keypoint_net(X, Y, TrainConfig(epochs=300, batch_size=40, lr=3e-3, hidden=(32,)), grid=G)
    assert np.linalg.norm(net.predict(w, (0.1, 0.15), (0.9, 0.5)) - (0.3, 0.2)) < 0.05
    assert np.linalg.norm(net.predict(w, (0.1, 0.85), (0.9, 0.5)) - (0.3, 0.8)) < 0.05


def test_keypoint_net_training_deterministic():
    w = Workspace((0, 0, 1, 1))
    X, Y = _kp_data([(w, [(0.1, 0.1), (0.5, 0.5), (0.9, 0.9)])])
    cfg = TrainConfig(epochs=5, batch_size=2, hidden=(8,))
    a, b = train_keypoint_net(X, Y, cfg, G), train_keypoint_net(X, Y, cfg, G)
    assert all(np.array_equal(p, q) for p, q in zip(a.mlp.params, b.mlp.params))


class _ToTarget:
    grid = G

    def predict(self, w, cur, target, occ):
        return np.asarray(target)


class _Stuck:
    grid = G

    def predict(self, w, cur, target, occ):
        return np.array([0.0, 0.0])


def test_predict_keypoints_single_step_when_net_outputs_target():
    w = Workspace((0, 0, 1, 1))
    seq = predict_keypoints(_ToTarget(), (0.1, 0.1), (0.9, 0.9), w, delta=0.01)
    assert len(seq.points) == 2 and seq.points[-1] == (0.9, 0.9)


def test_predict_keypoints_large_delta_stops_after_one_step():
    w = Workspace((0, 0, 1, 1))
    seq = predict_keypoints(_Stuck(), (0.1, 0.1), (0.9, 0.9), w, delta=2 * w.diag)
    assert len(seq.points) == 2


def test_predict_keypoints_no_termination():
    w = Workspace((0, 0, 1, 1))
    with pytest.raises(NoTermination) as e:
        predict_keypoints(_Stuck(), (0.1, 0.1), (0.9, 0.9), w, delta=0.01, max_steps=4)
    assert len(e.value.keypoints) == 5
    with pytest.raises(InvalidParams):
        predict_keypoints(_Stuck(), (0.1, 0.1), (0.9, 0.9), w, delta=0.0)


def test_keypoint_net_real_model_to_target():
    w = Workspace((0, 0, 2, 1))
    m = Mlp.zeros((3 * G * G + 4, 2))
    m.biases[-1][:] = normalize_point(w, (1.8, 0.2))
    net = KeypointNet(m, G)
    seq = predict_keypoints(net, (0.1, 0.9), (1.8, 0.2), w, delta=0.05)
    assert np.allclose(seq.points[-1], (1.8, 0.2))
    assert KeypointNet.from_dict(net.to_dict()).grid == G


def test_keypoint_predictions_clamped_to_bounds():
    w = Workspace((0, 0, 1, 1))
    m = Mlp.zeros((3 * G * G + 4, 2))
    m.biases[-1][:] = (3.0, -2.0)
    assert np.array_equal(KeypointNet(m, G).predict(w, (0.5, 0.5), (0.6, 0.6)), (1.0, 0.0))
