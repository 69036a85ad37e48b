"""Joint-distribution (successive- vs marginal-conditional) checks of the
sampler kernel.  A biased conditional anywhere shows up as a drifted moment."""

import numpy as np
import pytest

from latentclass.config import ModelConfig

from helpers import geweke_zscores, joint_stats


@pytest.mark.slow
def test_geweke_block_modes():
    cfg = ModelConfig(p=6, q=2, d=2, p_x=1, p_t=1)
    z = geweke_zscores(cfg, n_obs=20, n_steps=10_000, seed=3)
    assert z.size >= 10
    assert np.all(np.abs(z) < 4.0), z


@pytest.mark.slow
def test_geweke_entrywise_modes():
    cfg = ModelConfig(p=5, q=2, d=2, p_x=1, p_t=1)
    z = geweke_zscores(cfg, n_obs=15, n_steps=8_000, seed=5, w_mode="entrywise", g_mode="entrywise")
    assert np.all(np.abs(z) < 4.5), z


@pytest.mark.slow
def test_geweke_three_classes():
    # exercises the within-phase refresh of the class-logit augmentation rows
    cfg = ModelConfig(p=5, q=2, d=3, p_x=1, p_t=1)
    z = geweke_zscores(cfg, n_obs=15, n_steps=8_000, seed=7)
    assert np.all(np.abs(z) < 4.5), z
