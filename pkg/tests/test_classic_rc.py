import numpy as np
import pytest

from fracrc import (ClassicRCConfig, FracExponent, Trajectory, build_classic,
                    fractional_library, predict, train)
from fracrc.classic_rc import spectral_radius_estimate


def test_fractional_library_structure():
    lib = fractional_library(3)
    numerators = [e.numerator for e in lib]
    # 1, four fractions, 2, four fractions, 3 — shared integers deduplicated
    assert numerators == [50, 54, 66, 78, 90, 100, 104, 116, 128, 140, 150]
    assert len(lib) == 11
    fracs = [e.as_fraction() for e in lib]
    assert fracs[0] == 1
    assert all(b > a for a, b in zip(fracs, fracs[1:]))


def test_fractional_library_up_to_two():
    lib = fractional_library(2)
    assert [e.numerator for e in lib] == [50, 54, 66, 78, 90, 100]


def test_spectral_radius_matches_dense_oracle():
    cfg = ClassicRCConfig(input_dim=3, reservoir_dim=100, spectral_radius=0.2,
                          seed=12)
    machine = build_classic(cfg)
    dense = machine.adjacency.toarray()
    oracle = np.max(np.abs(np.linalg.eigvals(dense)))
    assert oracle == pytest.approx(0.2, abs=1e-6)


def test_spectral_radius_estimate_rank_one():
    # all-ones matrix: spectral radius equals n exactly
    A = np.ones((50, 50))
    assert spectral_radius_estimate(A) == pytest.approx(50.0, rel=1e-8)


def test_spectral_radius_estimate_small_dense():
    A = np.diag([3.0, -7.0, 1.0])
    assert spectral_radius_estimate(A) == pytest.approx(7.0, rel=1e-12)


def test_build_deterministic_same_seed():
    cfg = ClassicRCConfig(input_dim=3, reservoir_dim=80, seed=99)
    a = build_classic(cfg)
    b = build_classic(cfg)
    assert np.array_equal(a.adjacency.toarray(), b.adjacency.toarray())
    assert np.array_equal(a.w_in, b.w_in)


def test_build_different_seeds_differ():
    a = build_classic(ClassicRCConfig(input_dim=3, reservoir_dim=80, seed=1))
    b = build_classic(ClassicRCConfig(input_dim=3, reservoir_dim=80, seed=2))
    assert not np.array_equal(a.w_in, b.w_in)


def test_step_zero_state_zero_input():
    m = build_classic(ClassicRCConfig(input_dim=2, reservoir_dim=50, seed=0))
    r = m.step(m.zero_state(), np.zeros(2))
    assert np.allclose(r, 0.0)


def test_step_matches_dense_oracle():
    m = build_classic(ClassicRCConfig(input_dim=3, reservoir_dim=60, seed=4))
    rng = np.random.default_rng(0)
    r = rng.normal(size=60)
    x = rng.normal(size=3)
    dense = np.tanh(m.adjacency.toarray() @ r + m.w_in @ x)
    assert np.max(np.abs(m.step(r, x) - dense)) < 1e-14


def test_states_bounded_by_tanh():
    m = build_classic(ClassicRCConfig(input_dim=1, reservoir_dim=40, seed=7,
                                      input_scale=5.0))
    rng = np.random.default_rng(1)
    r = m.zero_state()
    for _ in range(200):
        r = m.step(r, rng.normal(size=1) * 10)
        assert np.max(np.abs(r)) <= 1.0


def test_generalize_identity_library():
    m = build_classic(ClassicRCConfig(input_dim=1, reservoir_dim=10, seed=0,
                                      library=(FracExponent(50, 50),)))
    r = np.array([-0.5, 0.25] * 5)
    assert np.array_equal(m.generalize(r), r)


def test_generalize_signed_linear_plus_square():
    lib = (FracExponent(50, 50), FracExponent(100, 50))
    m = build_classic(ClassicRCConfig(input_dim=1, reservoir_dim=1, seed=0,
                                      library=lib))
    out = m.generalize(np.array([-0.5]))
    assert np.allclose(out, [-0.5, 0.25])


def test_generalized_dim_with_default_library():
    m = build_classic(ClassicRCConfig(input_dim=3, reservoir_dim=100, seed=0,
                                      library=fractional_library(3)))
    assert m.generalized_dim == 11 * 100


def test_generalized_entries_stay_in_unit_box():
    # |r| <= 1, exponents >= 1 keep every generalized entry in [-1, 1]
    m = build_classic(ClassicRCConfig(input_dim=1, reservoir_dim=30, seed=3,
                                      library=fractional_library(3)))
    rng = np.random.default_rng(5)
    r = m.zero_state()
    for _ in range(100):
        r = m.step(r, rng.normal(size=1))
        g = m.generalize(r)
        assert np.max(np.abs(g)) <= 1.0


def test_library_must_start_at_one():
    with pytest.raises(ValueError):
        ClassicRCConfig(input_dim=1, reservoir_dim=10,
                        library=(FracExponent(100, 50),))


def test_library_must_increase():
    with pytest.raises(ValueError):
        ClassicRCConfig(input_dim=1, reservoir_dim=10,
                        library=(FracExponent(50, 50), FracExponent(54, 50),
                                 FracExponent(54, 50)))


def test_train_predict_round_trip_and_ridge_limit():
    rng = np.random.default_rng(8)
    data = np.column_stack([np.sin(np.arange(600) * 0.1),
                            np.cos(np.arange(600) * 0.1)])
    traj = Trajectory(data + 0.01 * rng.normal(size=data.shape), dt=0.1)
    cfg = ClassicRCConfig(input_dim=2, reservoir_dim=60, spectral_radius=0.5,
                          ridge=1e-8, seed=2)
    m = build_classic(cfg)
    ro = train(m, traj, sync_len=50)
    pred = predict(m, ro, traj.window(0, 500), 30)
    assert not pred.diverged
    # a sine is easy: short-horizon error stays small
    assert np.max(np.abs(pred.values - traj.data[500:530])) < 0.2

    big = ClassicRCConfig(input_dim=2, reservoir_dim=60, spectral_radius=0.5,
                          ridge=1e12, seed=2)
    mb = build_classic(big)
    rob = train(mb, traj, sync_len=50)
    assert np.linalg.norm(rob.w_out) < 1e-6


def test_config_json_round_trip():
    cfg = ClassicRCConfig(input_dim=3, reservoir_dim=100, spectral_radius=0.2,
                          ridge=1e-4, library=fractional_library(3), seed=42)
    back = ClassicRCConfig.from_json_dict(cfg.to_json_dict())
    assert back == cfg
