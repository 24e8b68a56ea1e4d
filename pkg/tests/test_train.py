"""Training loop: optimum anchors, determinism, scheduler, and aborts."""

import numpy as np
import pytest

import spinmf as sm
from spinmf.errors import ContractViolation
from spinmf.ordering import SpinOrder, random_order
from spinmf.rnn import conditionals
from spinmf.training import (
    Adam,
    AnnealSchedule,
    PlateauScheduler,
    TrainConfig,
    TrainReport,
    clip_gradient,
    train,
    variational_free_energy_estimate,
    exact_variational_free_energy,
)

from conftest import random_model


def quick_config(iterations=300, batch=128, seed=0, anneal=False):
    return TrainConfig(
        iterations=iterations,
        batch_size=batch,
        seed=seed,
        anneal=AnnealSchedule(enabled=anneal),
    )


def test_config_validation():
    with pytest.raises(ContractViolation):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ContractViolation):
        TrainConfig(scheduler_factor=1.5)


def test_free_model_converges_to_entropy_maximum():
    n = 4
    model = sm.IsingModel(J=np.zeros((n, n)), h=np.zeros(n), beta=1.0)
    order = SpinOrder(np.arange(n))
    params, report = train(model, order, quick_config(), arch={"hidden": 8})
    assert report.final_f == pytest.approx(-n * np.log(2), abs=5e-3)
    for x in sm.all_states(n)[:4]:
        assert np.allclose(conditionals(params, order, x), 0.5, atol=0.05)


def test_zero_init_anchor_and_history_shapes():
    n = 3
    model = sm.IsingModel(J=np.zeros((n, n)), h=np.zeros(n), beta=2.0)
    order = SpinOrder(np.arange(n))
    params, report = train(model, order, quick_config(iterations=5), arch={"hidden": 6})
    # at iteration 0 the model is exactly uniform: F = -n ln2 / beta, zero spread
    assert report.f_mean[0] == pytest.approx(-n * np.log(2) / 2.0, abs=1e-12)
    assert report.f_stderr[0] == pytest.approx(0.0, abs=1e-12)
    assert report.iterations == 5
    assert report.spin_means.shape == (5, n)
    assert report.lr.shape == (5,)


def test_training_fully_deterministic():
    model = random_model(4, seed=3)
    order = random_order(4, 1)
    p1, r1 = train(model, order, quick_config(iterations=60), arch={"hidden": 6})
    p2, r2 = train(model, order, quick_config(iterations=60), arch={"hidden": 6})
    assert np.array_equal(p1.theta, p2.theta)
    assert np.array_equal(r1.f_mean, r2.f_mean)
    assert np.array_equal(r1.spin_means, r2.spin_means)
    p3, _ = train(model, order, quick_config(iterations=60, seed=9), arch={"hidden": 6})
    assert not np.array_equal(p1.theta, p3.theta)


def test_training_improves_best_so_far():
    model = random_model(5, seed=8, coupling_scale=0.6)
    order = random_order(5, 2)
    _, report = train(model, order, quick_config(iterations=400, anneal=True), arch={"hidden": 8})
    best = report.best_so_far()
    assert best[-1] <= best[40]
    assert best[-1] < report.f_mean[0]


def test_monte_carlo_estimate_matches_enumeration():
    model = random_model(5, seed=4, coupling_scale=0.4)
    order = random_order(5, 3)
    params, _ = train(model, order, quick_config(iterations=150), arch={"hidden": 8})
    mean, stderr = variational_free_energy_estimate(params, model, order, k=20000, seed=5)
    exact = exact_variational_free_energy(params, model, order)
    assert abs(mean - exact) <= 3 * stderr
    assert exact >= sm.exact_free_energy(model) - 1e-9


def test_anneal_schedule_shape():
    ann = AnnealSchedule()
    assert ann.beta_at(0, 2.0, 1000) == pytest.approx(0.02)
    assert ann.beta_at(250, 2.0, 1000) == pytest.approx(2.0 * (0.01 + 0.99 * 0.5))
    assert ann.beta_at(500, 2.0, 1000) == pytest.approx(2.0)
    assert ann.beta_at(10_000, 2.0, 1000) == 2.0
    off = AnnealSchedule(enabled=False)
    assert off.beta_at(0, 2.0, 1000) == 2.0


def test_beta_column_reports_annealed_value():
    model = random_model(3, seed=2, beta=1.0)
    order = SpinOrder(np.arange(3))
    cfg = TrainConfig(iterations=40, batch_size=32, seed=1,
                      anneal=AnnealSchedule(t_anneal=20, floor=0.5))
    _, report = train(model, order, cfg, arch={"hidden": 6})
    assert report.beta[0] == pytest.approx(0.5)
    assert np.all(report.beta[20:] == 1.0)
    assert np.all(np.diff(report.beta[:21]) > 0)


def test_clip_gradient_scales_in_place():
    g = np.array([3.0, 4.0])
    norm = clip_gradient(g, 1.0)
    assert norm == pytest.approx(5.0)
    assert np.linalg.norm(g) == pytest.approx(1.0)
    g2 = np.array([0.3, 0.4])
    clip_gradient(g2, 1.0)
    assert np.array_equal(g2, [0.3, 0.4])


def test_adam_matches_reference_recursion():
    # one step with constant gradient moves by exactly lr (bias-corrected)
    opt = Adam(3, lr=0.01, beta1=0.9, beta2=0.999)
    theta = np.zeros(3)
    opt.step(theta, np.array([1.0, -2.0, 0.5]))
    assert np.allclose(np.abs(theta), 0.01, atol=1e-9)


def test_plateau_scheduler_decays_on_stall():
    opt = Adam(1, lr=1.0, beta1=0.9, beta2=0.999)
    sched = PlateauScheduler(patience=5, factor=0.5, window=3, rel_threshold=1e-4)
    for _ in range(20):
        sched.update(-10.0, opt)
    assert opt.lr < 1.0


def test_plateau_scheduler_quiet_while_improving():
    opt = Adam(1, lr=1.0, beta1=0.9, beta2=0.999)
    sched = PlateauScheduler(patience=5, factor=0.5, window=3, rel_threshold=1e-4)
    value = -1.0
    for _ in range(200):
        sched.update(value, opt)
        value -= 0.1
    assert opt.lr == 1.0


def test_order_length_mismatch_rejected():
    model = random_model(4, seed=1)
    with pytest.raises(ContractViolation):
        train(model, random_order(5, 0), quick_config(iterations=2))


def test_report_csv_roundtrip(tmp_path):
    model = random_model(3, seed=5)
    order = SpinOrder(np.arange(3))
    _, report = train(model, order, quick_config(iterations=12, batch=16), arch={"hidden": 4})
    path = tmp_path / "report.csv"
    report.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,F_mean,F_stderr,grad_norm,lr,beta"
    assert len(lines) == 13
    means_path = tmp_path / "means.csv"
    report.spin_means_to_csv(means_path)
    assert means_path.read_text().splitlines()[0] == "iteration,x0,x1,x2"

    from spinmf.report import load_report_csv

    loaded = load_report_csv(path, means_path)
    assert np.allclose(loaded.f_mean, report.f_mean)
    assert np.allclose(loaded.spin_means, report.spin_means)
