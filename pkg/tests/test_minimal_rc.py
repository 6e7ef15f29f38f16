import numpy as np
import pytest

from fracrc import FracExponent, MinRCConfig, Trajectory, build, predict, train
from fracrc.minimal_rc import subset_order, weight_vector


def test_weight_vector_b3():
    w = weight_vector(3)
    assert np.allclose(w, [1.0, np.sqrt(0.5), 0.0])
    assert w[0] == 1.0 and w[-1] == 0.0


def test_weight_vector_strictly_decreasing():
    for b in range(2, 9):
        w = weight_vector(b)
        assert w[0] == 1.0 and w[-1] == 0.0
        assert np.all(np.diff(w) < 0)
        k = np.arange(b)
        assert np.allclose(w, np.sqrt((b - 1 - k) / (b - 1)))


def test_subset_order_canonical():
    assert subset_order(3) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    assert subset_order(1) == [(0,)]


def test_input_matrix_shape_and_blocks():
    m = build(MinRCConfig(input_dim=3, block_size=3))
    W = m.input_matrix()
    assert W.shape == (21, 3)
    w = weight_vector(3)
    # block for feature {x1} has w in column 0, zeros elsewhere
    assert np.allclose(W[0:3, 0], w)
    assert np.allclose(W[0:3, 1:], 0.0)
    # last block ({x1,x2,x3}) carries w in every column
    assert np.allclose(W[18:21], np.column_stack([w, w, w]))


def test_input_matrix_single_coordinate():
    m = build(MinRCConfig(input_dim=1, block_size=2))
    W = m.input_matrix()
    assert W.shape == (2, 1)
    assert np.allclose(W[:, 0], [1.0, 0.0])


def test_block_size_below_two_rejected():
    with pytest.raises(ValueError):
        MinRCConfig(input_dim=3, block_size=1)


def test_spectral_radius_of_materialized_reservoir():
    # power iteration on the dense matrix must return rho* almost exactly
    for b, rho in [(3, 0.5), (5, 0.5), (8, 1e-3)]:
        m = build(MinRCConfig(input_dim=3, block_size=b, spectral_radius=rho))
        A = m.reservoir_matrix()
        v = np.full(A.shape[0], 1.0)
        for _ in range(200):
            v = A @ v
            norm = np.linalg.norm(v)
            if norm == 0:
                break
            v /= norm
        estimate = float(v @ A @ v)
        assert estimate == pytest.approx(rho, abs=1e-10)


def test_step_matches_dense_oracle():
    m = build(MinRCConfig(input_dim=3, block_size=4, spectral_radius=0.3))
    rng = np.random.default_rng(3)
    r = rng.normal(size=m.state_dim)
    x = rng.normal(size=3)
    dense = m.reservoir_matrix() @ r + m.input_matrix() @ x
    fast = m.step(r, x)
    assert np.max(np.abs(dense - fast)) < 1e-14


def test_step_zero_spectral_radius_is_input_echo():
    m = build(MinRCConfig(input_dim=3, block_size=3, spectral_radius=0.0))
    r = m.step(m.zero_state(), np.array([1.0, 0.0, 0.0]))
    w = weight_vector(3)
    blocks = r.reshape(7, 3)
    # features containing coordinate 0: {0}, {0,1}, {0,2}, {0,1,2}
    assert np.allclose(blocks[0], w)
    assert np.allclose(blocks[3], w)
    assert np.allclose(blocks[4], w)
    assert np.allclose(blocks[6], w)
    assert np.allclose(blocks[[1, 2, 5]], 0.0)


def test_step_zero_state_zero_input():
    m = build(MinRCConfig(input_dim=2, block_size=3))
    r = m.step(m.zero_state(), np.zeros(2))
    assert np.allclose(r, 0.0)


def test_generalize_squares():
    m = build(MinRCConfig(input_dim=1, block_size=2,
                          exponents=(FracExponent(100, 50),)))
    out = m.generalize(np.array([-2.0, 3.0]))
    assert np.allclose(out, [-2.0, 3.0, 4.0, 9.0])


def test_generalize_empty_exponents_identity():
    m = build(MinRCConfig(input_dim=1, block_size=2))
    r = np.array([1.5, -0.5])
    assert np.array_equal(m.generalize(r), r)


def test_generalize_fractional():
    m = build(MinRCConfig(input_dim=1, block_size=2,
                          exponents=(FracExponent(132, 50),)))
    out = m.generalize(np.array([2.0]))
    assert out[0] == 2.0
    assert out[1] == pytest.approx(2.0 ** 2.64, rel=1e-14)


def test_build_deterministic():
    cfg = MinRCConfig(input_dim=3, block_size=3, spectral_radius=1e-3,
                      exponents=(FracExponent(100),))
    a, b = build(cfg), build(cfg)
    assert np.array_equal(a.input_matrix(), b.input_matrix())
    assert np.array_equal(a.reservoir_matrix(), b.reservoir_matrix())


def _linear_system_trajectory(n, seed=0):
    """x(t+1) = M x(t) with spectral radius 0.9; the spec's linear oracle."""
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(3, 3))
    M *= 0.9 / np.max(np.abs(np.linalg.eigvals(M)))
    x = rng.normal(size=3)
    data = [x]
    for _ in range(n - 1):
        x = M @ x
        data.append(x)
    return Trajectory(np.array(data), dt=1.0), M


def test_train_reproduces_linear_system():
    traj, M = _linear_system_trajectory(300)
    m = build(MinRCConfig(input_dim=3, block_size=2, spectral_radius=0.0,
                          ridge=1e-12, exponents=()))
    ro = train(m, traj, sync_len=5)
    pred = predict(m, ro, traj.window(0, 250), 50)
    assert not pred.diverged
    # oracle: direct iteration of M from the last warmup point
    x = traj.data[249]
    expected = []
    for _ in range(50):
        x = M @ x
        expected.append(x)
    expected = np.array(expected)
    assert np.max(np.abs(pred.values - expected)) < 1e-6


def test_train_ridge_limit_w_out_vanishes():
    traj, _ = _linear_system_trajectory(200)
    m = build(MinRCConfig(input_dim=3, block_size=3, spectral_radius=0.1,
                          ridge=1e12, exponents=(FracExponent(100),)))
    ro = train(m, traj, sync_len=5)
    assert np.linalg.norm(ro.w_out) < 1e-6


def test_ridge_normal_equations_residual():
    # W_out (G G^T + beta I) = X G^T to 1e-8 relative, exercised through the
    # readout module on a random-walk input
    rng = np.random.default_rng(1)
    traj = Trajectory(np.cumsum(rng.normal(size=(400, 3)), axis=0) * 0.1, dt=1.0)
    m = build(MinRCConfig(input_dim=3, block_size=3, spectral_radius=0.2,
                          ridge=1e-6, exponents=(FracExponent(100),)))
    ro = train(m, traj, sync_len=10)
    # rebuild G and targets exactly as train does
    r = m.zero_state()
    states = []
    for t in range(len(traj) - 1):
        r = m.step(r, traj.data[t])
        states.append(r)
    G = m.generalize_block(np.array(states)[10:])
    Y = traj.data[11:]
    lhs = ro.w_out @ (G.T @ G + 1e-6 * np.eye(G.shape[1]))
    rhs = Y.T @ G
    assert np.max(np.abs(lhs - rhs)) < 1e-8 * max(1.0, np.max(np.abs(rhs)))


def test_train_too_short_rejected():
    traj = Trajectory(np.zeros((5, 2)), dt=1.0)
    m = build(MinRCConfig(input_dim=2, block_size=2))
    with pytest.raises(ValueError):
        train(m, traj, sync_len=4)


def test_predict_zero_steps_empty():
    traj, _ = _linear_system_trajectory(100)
    m = build(MinRCConfig(input_dim=3, block_size=2, spectral_radius=0.0,
                          ridge=1e-9))
    ro = train(m, traj, sync_len=5)
    pred = predict(m, ro, traj, 0)
    assert len(pred) == 0
    assert not pred.diverged


def test_coordinate_permutation_equivariance():
    # permuting the input coordinates permutes the prediction identically
    rng = np.random.default_rng(5)
    data = np.cumsum(rng.normal(size=(300, 3)), axis=0) * 0.05
    perm = [2, 0, 1]
    cfg = MinRCConfig(input_dim=3, block_size=3, spectral_radius=1e-2,
                      ridge=1e-8, exponents=(FracExponent(100),))
    m = build(cfg)
    t1 = Trajectory(data, dt=1.0)
    t2 = Trajectory(data[:, perm], dt=1.0)
    ro1 = train(m, t1, sync_len=10)
    ro2 = train(m, t2, sync_len=10)
    p1 = predict(m, ro1, t1.window(0, 250), 20)
    p2 = predict(m, ro2, t2.window(0, 250), 20)
    assert np.allclose(p1.values[:, perm], p2.values, atol=1e-8)


def test_readout_json_round_trip():
    from fracrc.readout import Readout
    w = np.arange(12.0).reshape(3, 4)
    ro = Readout(w)
    back = Readout.from_json_dict(ro.to_json_dict())
    assert np.array_equal(back.w_out, w)


def test_config_json_round_trip():
    cfg = MinRCConfig(input_dim=3, block_size=4, spectral_radius=0.25,
                      ridge=1e-7, exponents=(FracExponent(100), FracExponent(132)))
    back = MinRCConfig.from_json_dict(cfg.to_json_dict())
    assert back == cfg
