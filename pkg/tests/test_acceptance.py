"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS line with the measured numbers (visible with
``pytest -s`` or in captured output). The training-backed criteria run the
documented profiles: full defaults for the ten-spin instance, the reduced
2000-iteration profile for the hundred-spin chain, and reduced profiles for
the twenty-spin instances whose role is bound checking and smoke comparison.

Budget note: the whole module is dominated by training time (roughly an
hour and a half on two cores); everything else is seconds.
"""

import numpy as np
import pytest

import spinmf as sm
from spinmf.datasets import dense_n20, ising_n10, random_n20, sparse_n20, spin_chain_100
from spinmf.gibbs import gibbs_sample
from spinmf.model import magnetization
from spinmf.nmf import nmf_grad, nmf_free_energy, nmf_minimize
from spinmf.ordering import criticality_order, inverse_order, random_order
from spinmf.rnn import (
    RnnMeanField,
    log_prob,
    log_prob_batch,
    log_prob_grad,
    sample,
)
from spinmf.training import (
    TrainConfig,
    estimate_gradient,
    exact_variational_free_energy,
    train,
)

from conftest import random_model
from test_ordering import brute_force_max_forest_weight
from spinmf.ordering import coupling_edges


def _random_params(n_hidden, seed, scale=0.5):
    params = RnnMeanField.initialize(hidden=n_hidden, seed=seed)
    rng = np.random.default_rng(seed + 77)
    params.w_out[:] = rng.normal(0, scale, params.w_out.shape)
    params.b_out[:] = rng.normal(0, scale, params.b_out.shape)
    return params


def _eval_model(params, model, order, k, seed):
    batch = sample(params, order, k, seed=seed)
    energy = sm.energies(model, batch.configurations.astype(np.float64))
    f_vals = energy + batch.log_probs / model.beta
    mag = magnetization(batch)
    f_stderr = float(f_vals.std(ddof=1) / np.sqrt(k))
    return float(f_vals.mean()), f_stderr, mag


# --- training fixtures shared between criteria -------------------------------

@pytest.fixture(scope="module")
def trained_n10():
    model = ising_n10(1)
    order, _ = criticality_order(model)
    params, report = train(model, order, TrainConfig(seed=0))
    return model, order, params, report


@pytest.fixture(scope="module")
def nmf_n10():
    model = ising_n10(1)
    return model, nmf_minimize(model, TrainConfig(seed=0), restarts=10)


# -----------------------------------------------------------------------------

def test_criterion_1_normalization_and_gibbs_inequality(rng):
    for case in range(50):
        n = int(rng.integers(2, 13))
        model = random_model(n, seed=case, coupling_scale=0.7, field_scale=0.4)
        params = _random_params(n_hidden=8, seed=case)
        order = random_order(n, case)
        log_q = log_prob_batch(params, order, sm.all_states(n))
        total = np.exp(log_q).sum()
        assert abs(total - 1.0) <= 1e-9
        f_var = exact_variational_free_energy(params, model, order)
        assert f_var >= sm.exact_free_energy(model) - 1e-9
    print("PASS criterion 1: 50 models normalized to 1e-9, Gibbs inequality held")


def test_criterion_2_gradient_correctness(rng):
    worst_rnn = 0.0
    for case in range(10):
        n = int(rng.integers(3, 8))
        params = _random_params(n_hidden=8, seed=200 + case)
        order = random_order(n, case)
        x = sm.all_states(n)[int(rng.integers(0, 1 << n))]
        grad = log_prob_grad(params, order, x)
        eps = 1e-5
        for i in rng.choice(params.param_count, size=20, replace=False):
            probe = RnnMeanField(params.hidden, params.layers, params.theta.copy())
            probe.theta[i] += eps
            up = log_prob(probe, order, x)
            probe.theta[i] -= 2 * eps
            down = log_prob(probe, order, x)
            fd = (up - down) / (2 * eps)
            rel = abs(grad[i] - fd) / max(1.0, abs(fd))
            worst_rnn = max(worst_rnn, rel)
            assert rel <= 1e-5

    worst_nmf = 0.0
    for case in range(10):
        model = random_model(6, seed=300 + case)
        x = rng.uniform(-0.9, 0.9, 6)
        grad = nmf_grad(model, x)
        eps = 1e-6
        for i in range(6):
            up, down = x.copy(), x.copy()
            up[i] += eps
            down[i] -= eps
            fd = (nmf_free_energy(model, up) - nmf_free_energy(model, down)) / (2 * eps)
            rel = abs(grad[i] - fd) / max(1.0, abs(fd))
            worst_nmf = max(worst_nmf, rel)
            assert rel <= 1e-6
    print(f"PASS criterion 2: BPTT rel err {worst_rnn:.2e} <= 1e-5, "
          f"NMF rel err {worst_nmf:.2e} <= 1e-6")


def test_criterion_3_estimator_unbiasedness(rng):
    n = 4
    model = random_model(n, seed=5)
    params = _random_params(n_hidden=6, seed=9, scale=0.4)
    order = random_order(n, 3)
    states = sm.all_states(n)
    log_q = log_prob_batch(params, order, states)
    q = np.exp(log_q)
    rewards = model.beta * sm.energies(model, states) + log_q
    baseline = float(q @ rewards)

    score_mean = np.zeros(params.param_count)
    estimator_mean = np.zeros(params.param_count)
    for x, qi, ri in zip(states, q, rewards):
        g = log_prob_grad(params, order, x)
        score_mean += qi * g
        estimator_mean += qi * (ri - baseline) * g
    estimator_mean /= model.beta
    assert np.max(np.abs(score_mean)) <= 1e-10

    eps = 1e-6
    worst = 0.0
    for i in rng.choice(params.param_count, size=40, replace=False):
        probe = RnnMeanField(params.hidden, params.layers, params.theta.copy())
        probe.theta[i] += eps
        up = exact_variational_free_energy(probe, model, order)
        probe.theta[i] -= 2 * eps
        down = exact_variational_free_energy(probe, model, order)
        fd = (up - down) / (2 * eps)
        rel = abs(estimator_mean[i] - fd) / max(abs(fd), 1e-6)
        worst = max(worst, rel)
        assert rel <= 1e-4
    print(f"PASS criterion 3: score mean <= 1e-10, estimator-vs-grad rel err {worst:.2e} <= 1e-4")


def test_criterion_4_absorption_identities():
    worst_lnz = 0.0
    worst_frob = 0.0
    for case in range(100):
        n = 3 + case % 8  # n in 3..10
        model = random_model(n, seed=1000 + case, coupling_scale=0.6, field_scale=0.7)
        absorbed = sm.absorb_external_field(model)
        d_lnz = abs(
            sm.exact_log_partition(absorbed) - sm.exact_log_partition(model) - np.log(2)
        )
        d_frob = abs(
            sm.frobenius_norm(absorbed.J) ** 2
            - sm.frobenius_norm(model.J) ** 2
            - sm.frobenius_norm(model.h) ** 2
        )
        worst_lnz = max(worst_lnz, d_lnz)
        worst_frob = max(worst_frob, d_frob)
        assert d_lnz <= 1e-9
        assert d_frob <= 1e-12
    print(f"PASS criterion 4: 100 models, |dlnZ - ln2| <= {worst_lnz:.1e}, "
          f"Frobenius identity <= {worst_frob:.1e}")


def test_criterion_5_maximum_spanning_tree():
    rng = np.random.default_rng(77)
    for case in range(200):
        n = int(rng.integers(3, 7))
        J = np.zeros((n, n))
        J[np.triu_indices(n, k=1)] = rng.normal(0, 1, n * (n - 1) // 2)
        model = sm.IsingModel(J=J, h=np.zeros(n))
        _, forest = criticality_order(model)
        target = brute_force_max_forest_weight(n, coupling_edges(model))
        assert forest.total_weight == pytest.approx(target, rel=1e-12)
    print("PASS criterion 5: greedy forest weight equals brute-force maximum, 200 cases")


def test_criterion_6_chain_table_row():
    model = spin_chain_100()
    order, _ = criticality_order(model)
    params, report = train(
        model, order, TrainConfig(iterations=2000, batch_size=1000, seed=0)
    )
    assert -300.1 <= report.final_f <= -299.9
    f_eval, _, mag = _eval_model(params, model, order, k=100_000, seed=123)
    assert np.all(mag.per_spin <= -0.999)
    assert mag.global_mean <= -0.999

    nmf = nmf_minimize(
        model, TrainConfig(iterations=2000, batch_size=1000, seed=0), restarts=10
    )
    assert -294.0 <= nmf.f_star <= -291.0
    print(f"PASS criterion 6: chain F*={report.final_f:.5f} in [-300.1,-299.9], "
          f"<x>={mag.global_mean:.5f}, per-spin max {mag.per_spin.max():.5f} <= -0.999, "
          f"NMF {nmf.f_star:.3f} in [-294,-291]")


def test_criterion_7_ten_spin_table_row(trained_n10):
    model, order, params, report = trained_n10
    f_exact = sm.exact_free_energy(model)
    assert abs(report.final_f - (-85.348)) <= 0.02
    # the variational bound within noise, judged on a large evaluation
    # sample whose standard error is reliably estimated
    f_eval, f_stderr, mag = _eval_model(params, model, order, k=100_000, seed=321)
    assert abs(f_eval - (-85.348)) <= 0.02
    assert f_eval >= f_exact - 3 * f_stderr
    assert abs(mag.global_mean - (-0.095)) <= 0.01
    best = report.best_so_far()
    assert best[-1] <= best[report.iterations // 10]
    print(f"PASS criterion 7: F*={report.final_f:.5f} within 0.02 of -85.348, "
          f"eval {f_eval:.5f} >= exact {f_exact:.5f} - 3*{f_stderr:.1e}; "
          f"<x>={mag.global_mean:.5f} within 0.01 of -0.095")


def test_criterion_8_ordering_ablation_beta5():
    model = ising_n10(5)
    crit_order, _ = criticality_order(model)
    finals = {"critical": [], "random": [], "inverse": []}
    for seed in range(5):
        for mode in finals:
            if mode == "critical":
                order = crit_order
            elif mode == "inverse":
                order = inverse_order(crit_order)
            else:
                order = random_order(model.n, seed=seed)
            cfg = TrainConfig(iterations=2000, batch_size=1000, seed=seed)
            _, report = train(model, order, cfg)
            finals[mode].append(report.final_f)
    med = {mode: float(np.median(vals)) for mode, vals in finals.items()}
    assert med["critical"] < med["random"]
    assert med["critical"] < med["inverse"]
    print(f"PASS criterion 8: medians critical={med['critical']:.3f} < "
          f"random={med['random']:.3f} and < inverse={med['inverse']:.3f}")


def test_criterion_9_bounds_hold_end_to_end(trained_n10, nmf_n10):
    rows = []
    model, order, params, report = trained_n10
    _, nmf_sol = nmf_n10
    rows.append(("ising_n10_beta1", model, report.final_f, nmf_sol.f_star))

    for name, factory in (("dense_n20_L400", lambda: dense_n20(400, seed=0)),
                          ("dense_n20_L5", lambda: dense_n20(5, seed=0))):
        model20 = factory()
        order20, _ = criticality_order(model20)
        cfg = TrainConfig(iterations=1500, batch_size=1000, seed=0)
        _, report20 = train(model20, order20, cfg)
        nmf20 = nmf_minimize(model20, cfg, restarts=5)
        rows.append((name, model20, report20.final_f, nmf20.f_star))

    for name, model_i, f_rnn, f_nmf in rows:
        report_i = sm.bound_report(model_i, f_star_rnn=f_rnn, f_star_nmf=f_nmf)
        assert report_i.exact_f is not None
        assert report_i.gap_rnn is not None and report_i.gap_rnn <= report_i.main_bound
        assert report_i.gap_nmf is not None and report_i.gap_nmf <= report_i.naive_bound
        print(f"PASS criterion 9[{name}]: gap_rnn={report_i.gap_rnn:.3f} <= "
              f"{report_i.main_bound:.1f}, gap_nmf={report_i.gap_nmf:.3f} <= "
              f"{report_i.naive_bound:.1f}")


def test_criterion_10_gibbs_reference_fidelity():
    # part 1: total-variation against the exact Boltzmann distribution
    from spinmf.seeding import rng_for

    rng = rng_for(2024)
    J = np.zeros((8, 8))
    J[np.triu_indices(8, k=1)] = rng.uniform(-0.6, 0.6, 28)
    h = rng.uniform(-0.4, 0.4, 8)
    model = sm.IsingModel(J=J, h=h)
    batch = gibbs_sample(model, 1_000_000, burn_in=2000, thin=1, seed=11)
    idx = ((batch.configurations + 1) // 2).astype(np.int64) @ (
        1 << np.arange(8, dtype=np.int64)
    )
    counts = np.bincount(idx, minlength=256) / len(batch)
    tv = 0.5 * float(np.abs(counts - sm.exact_distribution(model)).sum())
    assert tv <= 0.02

    # part 2: chain magnetization reproduces the reference value
    chain = spin_chain_100()
    ref = gibbs_sample(chain, 10_000, burn_in=1000, thin=10, seed=3)
    mag = magnetization(ref)
    assert abs(mag.global_mean - (-0.9999)) <= 0.002
    print(f"PASS criterion 10: TV={tv:.4f} <= 0.02 at 1e6 samples; "
          f"chain <x>={mag.global_mean:.5f} within 0.002 of -0.9999")


def test_smoke_sparse_random_rows():
    # margins blur on these instances; assert only a loose dominance
    for name, factory in (("sparse_n20", lambda: sparse_n20(0)),
                          ("random_n20", lambda: random_n20(0))):
        model = factory()
        order, _ = criticality_order(model)
        cfg = TrainConfig(iterations=1500, batch_size=1000, seed=0)
        _, report = train(model, order, cfg)
        nmf = nmf_minimize(model, cfg, restarts=5)
        assert report.final_f <= nmf.f_star + 1.0
        print(f"PASS smoke[{name}]: rnn {report.final_f:.3f} <= nmf {nmf.f_star:.3f} + 1.0")
