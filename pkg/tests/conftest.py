import numpy as np
import pytest

from hetalloc import netmodel


def toy_network(gain_ul, gain_mue, gain_mbs_ul=None, gain_mbs_mue=None,
                power_levels=(1.0,), i_max=1.0, mbs_power=1.0, sigma2=1.0,
                w1=1.0, w2=0.0, rb_bandwidth=180e3):
    """Hand-specified drop for oracle-style tests; positions are dummies."""
    gain_ul = np.asarray(gain_ul, dtype=float)
    gain_mue = np.asarray(gain_mue, dtype=float)
    K, _, N = gain_ul.shape
    C = gain_mue.shape[1]
    if gain_mbs_ul is None:
        gain_mbs_ul = np.full((K, N), 1e-12)
    if gain_mbs_mue is None:
        gain_mbs_mue = np.full((C, N), 1.0)
    i_max_arr = np.full(N, i_max, dtype=float) if np.isscalar(i_max) else np.asarray(i_max, float)
    zeros = np.zeros((0, 2))
    return netmodel.make_network(
        None, np.zeros((C, 2)), zeros, zeros, np.zeros((K, 2)), np.zeros((K, 2)),
        gain_ul, gain_mbs_ul, gain_mue, gain_mbs_mue,
        power_levels, i_max_arr, mbs_power, sigma2, w1, w2, rb_bandwidth)


@pytest.fixture
def tiny_config():
    return netmodel.ScenarioConfig(
        seed=1, cell_radius=250.0, num_mue=2, num_sbs=1, num_d2d=1, num_rb=2,
        power_levels=(0.1, 0.5), mbs_power=10.0, noise_psd=3.98e-21,
        pathloss_exp=3.0, i_max=1e-7, w1=1.0, w2=0.5,
        d2d_max_dist=25.0, sbs_ue_max_dist=35.0)
