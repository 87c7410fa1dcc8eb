import numpy as np
import pytest

import clreg


def unit_rows(rng, n, d):
    m = rng.normal(size=(n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def test_dpo_loss_matches_numpy():
    rng = np.random.default_rng(0)
    a, p, n = (unit_rows(rng, 4, 3) for _ in range(3))
    tau = 0.5
    margin = np.sum(a * p, axis=1) - np.sum(a * n, axis=1)
    expected = -2 * tau * np.mean(np.log(1 / (1 + np.exp(-margin / tau))))
    assert clreg.dpo_cl_loss(a, p, n, tau) == pytest.approx(expected, abs=1e-12)


def test_anchor_step_lowers_negative_similarity():
    a, p, n = np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])
    moved = clreg.anchor_step(a, p, n, tau=0.5, eta=0.1)
    assert moved @ n < a @ n


def test_separation_metrics():
    rng = np.random.default_rng(1)
    f = rng.normal(size=(10, 4)) + 3.0
    r = rng.normal(size=(20, 4))
    rep = clreg.separation_report(f, r, n_projections=32, seed=2)
    assert rep["mk_mmd"] == pytest.approx(clreg.mk_mmd(f, r), rel=1e-12)
    assert rep["sliced_w2"] == clreg.sliced_w2(f, r, 32, 2)
    assert clreg.entanglement(f, r) < 1.0


def test_scoring():
    assert clreg.unlearning_score(0.97182, 0.69815) == pytest.approx(0.81256, abs=5e-5)
    assert clreg.prog(0.5, 0.75, 0.25) == 0.5
    assert clreg.priv_leak(0.75, 0.5) == 50.0
    assert clreg.rouge_l_recall([1, 3, 4, 5], [1, 2, 3, 4]) == 0.75
    seq = [5, 6, 7, 8]
    assert clreg.extraction_strength(lambda pre: seq[len(pre):] if len(pre) >= 2 else [], seq) == 0.5
    d, pval = clreg.ks_two_sample([1, 2, 3, 4], [1, 2, 3, 4])
    assert d == 0.0 and pval == 1.0


def test_errors_are_typed():
    with pytest.raises(clreg.ValidationError):
        clreg.priv_leak(0.5, 0.0)
    with pytest.raises(clreg.Error):
        clreg.harmonic_mean([])


def test_simulate_small_run():
    rep = clreg.simulate({"seed": 3, "train": {"steps": 4, "finetune_steps": 5,
                                               "record_every": 2, "hidden_dims": [8, 6]}})
    assert rep["completed_steps"] == 4
    assert len(rep["timeline"]) == 3


def test_verify_theory_small():
    suites = clreg.verify_theory(trials=20, separation_trials=4)
    assert [s["passed"] for s in suites] == [s["trials"] for s in suites]
