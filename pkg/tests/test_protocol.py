"""Tests for the protocol state machine and the two-step baseline."""

import numpy as np
import pytest

from qisac import estimate
from qisac.channel import Adversary, bell_error_after_two_passes
from qisac.protocol import (
    ProtocolConfig,
    decode_bit,
    round1_check,
    round2_check,
    run_qisac,
    run_twostep_baseline,
)

THETA = 0.8 * np.pi


def make_config(**kwargs):
    defaults = dict(m=400, p_e=0.8, theta_true=THETA, n_passes=1, seed=123)
    defaults.update(kwargs)
    return ProtocolConfig(**defaults)


def message_for(config, rng_seed=99, symbols=False):
    rng = np.random.default_rng(rng_seed)
    _, _, nm = config.partition()
    return rng.integers(0, 4 if symbols else 2, nm).tolist()


def test_partition_is_exact():
    cfg = make_config(m=320, p_e=0.8)
    n1, n2, nm = cfg.partition()
    assert (n1, n2, nm) == (32, 32, 256)
    cfg = make_config(m=10, p_e=0.75)
    n1, n2, nm = cfg.partition()
    assert n1 == n2 == 1 and nm == 8
    assert n1 + n2 + nm == 10


def test_config_validation():
    with pytest.raises(ValueError):
        make_config(p_e=1.0)
    with pytest.raises(ValueError):
        make_config(m=0)
    with pytest.raises(ValueError):
        make_config(noise_e=0.7)


def test_decode_bit():
    assert decode_bit("O1", 4) == 0
    assert decode_bit("O2", 1) == 1
    assert decode_bit("O1", 3) == 0
    assert decode_bit("O2", 2) == 1
    with pytest.raises(ValueError):
        decode_bit("O3", 1)
    with pytest.raises(ValueError):
        decode_bit("O1", 5)


def test_round1_check_stat_paths():
    clean = [("x", 1, -1), ("y", -1, 1), ("z", 1, -1)] * 10
    res = round1_check(clean, threshold=0.079)
    assert res.passed and res.pooled == 0.0
    assert (res.eps_x, res.eps_y, res.eps_z) == (0.0, 0.0, 0.0)

    # double-CNOT signature: x/y half wrong, z clean
    attacked = ([("x", 1, 1), ("x", 1, -1)] * 100
                + [("y", -1, -1), ("y", 1, -1)] * 100 + [("z", 1, -1)] * 200)
    res = round1_check(attacked, threshold=0.5)
    assert res.eps_x == pytest.approx(0.5)
    assert res.eps_z == 0.0
    assert res.tripwire and not res.passed


def test_round2_check():
    assert round2_check(0, 40, 0.2).passed
    assert round2_check(0, 40, 0.2).qber == 0.0
    assert not round2_check(20, 40, 0.2).passed


def test_noiseless_run_recovers_message_exactly():
    cfg = make_config(m=500, n_passes=4)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    assert not t.aborted
    assert t.qber1_pooled == 0.0 and t.qber2 == 0.0
    assert t.decoded_bits == msg
    assert len(t.records) == cfg.m


def test_run_is_deterministic():
    cfg = make_config(m=300, noise_e=0.03, n_passes=2)
    msg = message_for(cfg)
    t1 = run_qisac(cfg, msg)
    t2 = run_qisac(cfg, msg)
    assert t1.record_lines() == t2.record_lines()
    assert t1.summary_dict() == t2.summary_dict()


def test_role_partition_and_counts_tables():
    cfg = make_config(m=600, n_passes=3, single_pass_fraction=0.1)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    roles = [r.role for r in t.records]
    n1, n2, nm = cfg.partition()
    assert roles.count("check1") == n1
    assert roles.count("check2") == n2
    assert roles.count("message") == nm
    total_counts = sum(int(v.sum()) for v in t.counts.values())
    assert total_counts == nm
    n_single = sum(int(v.sum()) for (obs, grp), v in t.counts.items() if grp == "single")
    assert n_single == int(np.floor(cfg.single_pass_fraction * nm))


def test_observable_choice_frequency():
    cfg = make_config(m=4000, p_e=0.9, seed=5)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    n_o1 = sum(int(v.sum()) for (obs, _), v in t.counts.items() if obs == "O1")
    nm = t.n_message
    se = np.sqrt(0.25 / nm)
    assert abs(n_o1 / nm - 0.5) < 3 * se


def test_message_length_validation():
    cfg = make_config()
    with pytest.raises(ValueError):
        run_qisac(cfg, [0, 1])
    _, _, nm = cfg.partition()
    with pytest.raises(ValueError):
        run_qisac(cfg, [2] * nm)


def test_depolarizing_run_bit_error_rate():
    e = 0.05
    cfg = make_config(m=10000, p_e=0.8, noise_e=e, seed=21)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    assert not t.aborted
    wrong = sum(a != b for a, b in zip(t.decoded_bits, msg))
    nm = t.n_message
    target = 2 * e * (1 - e)
    se = np.sqrt(target * (1 - target) / nm)
    assert abs(wrong / nm - target) < 3 * se
    # the observed check QBERs track the channel QBER in each basis
    for eps in (t.eps_x, t.eps_y, t.eps_z):
        assert abs(eps - e) < 5 * np.sqrt(e * (1 - e) / (t.n_check1 / 3))
    # decoded bits realize a binary symmetric channel whose empirical
    # mutual information matches the closed form within the 3-sigma band
    from qisac.metrics import h, mutual_info_ab

    empirical_mi = 1.0 - h(wrong / nm)
    mi_band = abs(h(target + 3 * se) - h(target - 3 * se))
    assert abs(empirical_mi - mutual_info_ab(e)) < mi_band


def test_round2_qber_matches_two_pass_oracle():
    e = 0.06
    cfg = make_config(m=12000, p_e=0.5, noise_e=e, seed=31)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    assert not t.aborted
    expected = 1.0 - bell_error_after_two_passes(e)[0]
    se = np.sqrt(expected * (1 - expected) / t.n_check2)
    assert abs(t.qber2 - expected) < 4 * se


def test_double_cnot_aborts_with_tripwire():
    cfg = make_config(m=320, p_e=0.6, adversary=Adversary.double_cnot(), seed=3)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    assert t.aborted and t.abort_stage == 1
    # x and y errors near 1/2, z errors absent
    assert t.eps_z == pytest.approx(0.0, abs=1e-12)
    assert t.eps_x > 0.2 and t.eps_y > 0.2


def test_double_cnot_abort_rate_is_near_one():
    aborts = 0
    runs = 60
    for seed in range(runs):
        cfg = make_config(m=320, p_e=0.6, adversary=Adversary.double_cnot(),
                          seed=seed, qber_threshold_1=0.1)
        t = run_qisac(cfg, message_for(cfg))
        aborts += t.aborted
    assert aborts == runs


def test_intercept_resend_detection_rate_tracks_closed_form():
    # detection = at least one first-round error over a noiseless channel
    from qisac.metrics import detection_probability

    p_e, m, k = 0.5, 320, 32
    runs = 250
    detected = 0
    for seed in range(runs):
        cfg = make_config(m=m, p_e=p_e, adversary=Adversary.intercept_resend(k),
                          seed=seed, qber_threshold_1=0.0)
        t = run_qisac(cfg, message_for(cfg))
        detected += t.qber1_pooled > 0.0
    target = detection_probability("intercept_resend", p_e, k=k)
    se = np.sqrt(target * (1 - target) / runs)
    assert abs(detected / runs - target) < 4 * se


def test_collective_adversary_sets_check_qbers():
    lam = (0.85, 0.05, 0.05, 0.05)
    cfg = make_config(m=9000, p_e=0.5, adversary=Adversary.collective(lam), seed=17,
                      qber_threshold_1=0.2, qber_threshold_2=0.5)
    t = run_qisac(cfg, message_for(cfg))
    for eps in (t.eps_x, t.eps_y, t.eps_z):
        assert abs(eps - 0.1) < 5 * np.sqrt(0.1 * 0.9 / (t.n_check1 / 3))


def test_transcript_feeds_estimators():
    cfg = make_config(m=4000, p_e=0.9, n_passes=1, seed=8)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    res = estimate.estimate_from_transcript(t, method="expectation")
    assert abs(estimate.wrap_error(res.theta_est - THETA)) < 3 / np.sqrt(t.n_message)
    res_mle = estimate.estimate_from_transcript(t, method="mle")
    assert abs(estimate.wrap_error(res_mle.theta_est - THETA)) < 3 / np.sqrt(t.n_message)


def test_transcript_counts_match_analytic_sampler_distribution():
    # the protocol's exact Born sampling and the analytic count sampler
    # describe the same detector distribution, noise included
    e, n_passes = 0.05, 2
    cfg = make_config(m=20000, p_e=0.9, noise_e=e, n_passes=n_passes,
                      single_pass_fraction=0.0, seed=77)
    t = run_qisac(cfg, message_for(cfg))
    assert not t.aborted
    kappa = (1 - 2 * e) ** 2
    c = kappa * np.cos(n_passes * THETA)
    s = kappa * np.sin(n_passes * THETA)
    expected = {
        "O1": np.array([1 + c, 1 - c, 1 - c, 1 + c]) / 4,
        "O2": np.array([1 + s, 1 - s, 1 + s, 1 - s]) / 4,
    }
    for obs in ("O1", "O2"):
        counts = t.counts[(obs, "multi")]
        total = counts.sum()
        freq = counts / total
        se = np.sqrt(expected[obs] * (1 - expected[obs]) / total)
        assert np.all(np.abs(freq - expected[obs]) < 4 * se + 1e-12)


def test_guard_delta_round_trip():
    cfg = make_config(m=3000, p_e=0.9, n_passes=1, guard_delta=0.4, seed=12)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    res = estimate.estimate_from_transcript(t, method="mle")
    assert abs(estimate.wrap_error(res.theta_est - THETA)) < 3 / np.sqrt(t.n_message)


def test_transcript_serialization(tmp_path):
    cfg = make_config(m=60, seed=2)
    msg = message_for(cfg)
    t = run_qisac(cfg, msg)
    rec = tmp_path / "records.csv"
    summ = tmp_path / "summary.json"
    t.write_records(rec)
    t.write_summary(summ)
    lines = rec.read_text().splitlines()
    assert lines[0] == "index,role,passes,observable,detector,bit"
    assert len(lines) == cfg.m + 1
    import json

    parsed = json.loads(summ.read_text())
    assert parsed["n_message"] == t.n_message
    assert not parsed["aborted"]


# ---------------------------------------------------------------------------
# Two-step baseline
# ---------------------------------------------------------------------------

def test_twostep_noiseless_recovers_symbols():
    cfg = make_config(m=400, seed=44)
    symbols = message_for(cfg, symbols=True)
    t = run_twostep_baseline(cfg, symbols)
    assert not t.aborted
    assert t.decoded_bits == symbols


def test_twostep_symbol_error_distribution():
    e = 0.05
    cfg = make_config(m=12000, p_e=0.8, noise_e=e, seed=55)
    symbols = message_for(cfg, symbols=True)
    t = run_twostep_baseline(cfg, symbols)
    assert not t.aborted
    q = bell_error_after_two_passes(e)
    correct = sum(a == b for a, b in zip(t.decoded_bits, symbols))
    nm = t.n_message
    se = np.sqrt(q[0] * (1 - q[0]) / nm)
    assert abs(correct / nm - q[0]) < 4 * se
    # each wrong symbol bucket carries roughly q_err
    wrong_rate = 1 - correct / nm
    assert wrong_rate == pytest.approx(3 * q[1], abs=5 * se)


def test_twostep_rejects_bad_symbols():
    cfg = make_config()
    _, _, nm = cfg.partition()
    with pytest.raises(ValueError):
        run_twostep_baseline(cfg, [4] * nm)
