"""Contrastive representation regularizer for unlearning experiments."""

import json as _json

from ._clreg import (
    ConfigError,
    DegenerateInputError,
    Error,
    NumericError,
    ValidationError,
    anchor_gradient,
    anchor_step,
    cross_similarity,
    dpo_cl_loss,
    entanglement,
    exact_memorization,
    exact_w2_1d,
    extraction_strength,
    harmonic_mean,
    infonce_cl_loss,
    ks_two_sample,
    mk_mmd,
    priv_leak,
    prog,
    rouge_l_recall,
    sliced_w2,
    unlearning_score,
)
from . import _clreg

__version__ = "0.1.0"


def separation_report(forget, retain, n_projections=256, seed=0):
    """All four separation metrics as a dict; missing metrics are None."""
    return _json.loads(_clreg.separation_report_json(forget, retain, n_projections, seed))


def simulate(config=None):
    """Runs the toy simulator. `config` is a dict in the run-config JSON schema."""
    return _json.loads(_clreg.simulate_json(_json.dumps(config) if config else ""))


def verify_theory(trials=1000, separation_trials=200, seed=0):
    return _json.loads(_clreg.verify_theory_json(trials, separation_trials, seed))
