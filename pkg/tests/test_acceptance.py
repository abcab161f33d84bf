"""Exit criteria, one test per criterion; a pass/fail line per criterion is
printed in the terminal summary under "acceptance criteria"."""
import math
import time

import numpy as np
import pytest

from pulsecorr.bounds import (DELTA_MAX, bound_eps_l_intensity, bound_eps_l_phase, effective_length,
                              effective_length_closed_form, security_constants)
from pulsecorr.correlations import (LTIIntensitySource, LTIPhaseSource, correlation_strengths, enumerate_sequences,
                                    per_setting_breakdown, phase_epsilon_pair, scan_alignment)
from pulsecorr.fitting import DEFAULT_FIT_SEQUENCE, fit_three_pole, synth_fixture
from pulsecorr.intensity import poisson_fidelity
from pulsecorr.lti import (TABLE_I, TABLE_I_ENVELOPE, ThreePoleParams, decay_envelope, error_function_g,
                           step_response_oracle, step_response_three_pole)
from pulsecorr.modulation import (BB84_PHASES, DECOY_ALPHABET, THREE_STATE_PHASES, PulseTrainConfig,
                                  modulated_signal, pairwise_phase_difference)
from pulsecorr.security import ProtocolParams, eps_phi_total, hybrid_series, key_rate

T = 20.0
N_SIGNALS = 1e12
D_FAIL = 1e-10
MU0 = 0.3


def _detail(record_property, text):
    record_property("detail", text)


@pytest.mark.acceptance(1, "security constants C^phi = 12.7, C^mu = 6.4 (+-0.1)")
def test_criterion_01_security_constants(record_property):
    start = time.perf_counter()
    env = decay_envelope(TABLE_I)
    c_phi = security_constants(env, T, "phase", math.pi, 16.2).C
    c_mu = security_constants(env, T, "intensity", math.pi, 16.6, MU0).C
    elapsed = time.perf_counter() - start
    _detail(record_property, f"C^phi={c_phi:.4f} C^mu={c_mu:.4f} t={elapsed:.3f}s")
    assert abs(c_phi - 12.7) <= 0.1
    assert abs(c_mu - 6.4) <= 0.1
    assert elapsed < 1.0


@pytest.mark.acceptance(2, "envelope A = 1.60, b = 318.7 (+-2%), |g| <= A exp(-bt) on 10^4 points")
def test_criterion_02_envelope(record_property):
    start = time.perf_counter()
    env = decay_envelope(TABLE_I)
    t = np.linspace(0.0, 200.0, 10_000)
    violations = int(np.sum(np.abs(error_function_g(TABLE_I, t)) > env(t)))
    elapsed = time.perf_counter() - start
    _detail(record_property, f"A={env.amplitude_A:.5f} b={env.rate_b:.2f} violations={violations}")
    assert env.amplitude_A == pytest.approx(1.60, rel=0.02)
    assert env.rate_b == pytest.approx(318.7, rel=0.02)
    assert violations == 0
    assert elapsed < 1.0


@pytest.mark.acceptance(3, "first-order bounds eps_bar_1 within 5%")
def test_criterion_03_first_order_bounds(record_property):
    # evaluated with the printed envelope (A = 1.60, b = 318.7) that accompanies the reference filter
    env = TABLE_I_ENVELOPE
    cases = [
        ("phi t0=16.2 D=pi", bound_eps_l_phase(env, math.pi, T, 16.2, 1), 2.0e-4),
        ("phi t0=14.2 D=pi", bound_eps_l_phase(env, math.pi, T, 14.2, 1), 7.2e-4),
        ("phi t0=16.2 D=3pi/2", bound_eps_l_phase(env, 1.5 * math.pi, T, 16.2, 1), 4.5e-4),
        ("phi t0=14.2 D=3pi/2", bound_eps_l_phase(env, 1.5 * math.pi, T, 14.2, 1), 1.6e-3),
        ("mu t0=16.6", bound_eps_l_intensity(env, math.pi, MU0, T, 16.6, 1), 3.8e-3),
        ("mu t0=17.92", bound_eps_l_intensity(env, math.pi, MU0, T, 17.92, 1), 5.3e-3),
    ]
    bad = [f"{name}: {got:.3e} vs {ref:.1e}" for name, got, ref in cases if abs(got / ref - 1) > 0.05]
    _detail(record_property, "; ".join(bad) if bad else "all six within 5%")
    assert not bad, bad


@pytest.mark.acceptance(4, "effective lengths l_e^phi = 6, l_e^mu = 11, two paths agree to 1e-9")
def test_criterion_04_effective_lengths(record_property):
    env = decay_envelope(TABLE_I)
    out = []
    for metric, t0s, deltas, expected in (("phase", (16.2, 14.2), (math.pi, 1.5 * math.pi), 6),
                                          ("intensity", (16.6, 17.92), (math.pi,), 11)):
        for t0 in t0s:
            for delta in deltas:
                bp = security_constants(env, T, metric, delta, t0, MU0 if metric == "intensity" else None)
                a = effective_length(bp.C, bp.eps_bar_1, N_SIGNALS, D_FAIL)
                b = effective_length_closed_form(bp, N_SIGNALS, D_FAIL)
                out.append((metric, t0, a.l_e, b.l_e, expected, abs(a.raw_value - b.raw_value)))
    _detail(record_property, ", ".join(f"{m[0]}@{t0}:{la}" for m, t0, la, *_ in out))
    for metric, t0, la, lb, expected, gap in out:
        assert la == expected and lb == expected, (metric, t0, la, lb)
        assert gap < 1e-9


@pytest.mark.acceptance(5, "closed form vs ODE oracle < 1e-6 on [0, 100 ns], reference filter + 20 random sets")
def test_criterion_05_oracle(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    params = [TABLE_I] + [ThreePoleParams(float(rng.uniform(0.5, 1.5)), float(rng.uniform(10, 500)),
                                          float(rng.uniform(10, 500)), float(rng.uniform(0.2, 1.4)))
                          for _ in range(20)]
    worst = 0.0
    for p in params:
        wf = step_response_oracle(p.as_filter(), 100.0)
        worst = max(worst, float(np.max(np.abs(wf.samples - step_response_three_pole(p, wf.times)))))
    elapsed = time.perf_counter() - start
    _detail(record_property, f"max deviation {worst:.2e}, t={elapsed:.1f}s")
    assert worst < 1e-6
    assert elapsed < 30.0


@pytest.mark.acceptance(6, "difference shortcut = full two-waveform simulation to 1e-12")
def test_criterion_06_linearity(record_property):
    start = time.perf_counter()
    cfg = PulseTrainConfig(T, 5, "V")
    idx = enumerate_sequences(3, 5)
    ids = DECOY_ALPHABET.ids
    seqs = [tuple(ids[i] for i in row) for row in idx]
    levels = DECOY_ALPHABET.values
    scale = DECOY_ALPHABET.phase_scale()
    worst_phase = worst_eps = 0.0
    pairs = 0
    for t0 in (2.0, 6.5, 14.2, 16.2, 18.0):
        t = 4 * T + t0
        phase = {s: float(DECOY_ALPHABET.to_phase(modulated_signal(s, cfg, DECOY_ALPHABET, TABLE_I, t, True)))
                 for s in seqs}
        for l in range(1, 5):
            pos = 4 - l
            for row, s in zip(idx, seqs):
                for alt in range(3):
                    if alt == row[pos]:
                        continue
                    flipped = list(s)
                    flipped[pos] = ids[alt]
                    full = phase[tuple(flipped)] - phase[s]
                    short = pairwise_phase_difference(scale * (levels[alt] - levels[row[pos]]), l, t0, TABLE_I, T)
                    worst_phase = max(worst_phase, abs(full - short))
                    worst_eps = max(worst_eps, abs(float(phase_epsilon_pair(full, 0.0))
                                                   - float(phase_epsilon_pair(short, 0.0))))
                    pairs += 1
    elapsed = time.perf_counter() - start
    _detail(record_property, f"{pairs} pairs, max |dphi| gap {worst_phase:.1e}, max eps gap {worst_eps:.1e}")
    assert pairs == 243 * 2 * 4 * 5
    assert worst_phase < 1e-12 and worst_eps < 1e-12
    assert elapsed < 30.0


@pytest.mark.acceptance(7, "model eps_l <= bounds for l = 1..8 over t0 in [2, 18] step 0.02")
def test_criterion_07_bound_domination(record_property):
    start = time.perf_counter()
    env = decay_envelope(TABLE_I)
    phase = LTIPhaseSource(TABLE_I, DECOY_ALPHABET, T, "V")
    intensity = LTIIntensitySource(phase, MU0)
    grid = np.round(np.arange(2.0, 18.0 + 1e-9, 0.02), 10)
    worst_phi = worst_mu = 0.0
    for t0 in grid:
        bp = security_constants(env, T, "phase", math.pi, t0)
        bi = security_constants(env, T, "intensity", math.pi, t0, MU0)
        # phase strengths at high order sit far below double-precision noise of
        # a two-waveform subtraction; the difference form is exact (criterion 6)
        for l in range(1, 9):
            worst_phi = max(worst_phi, phase.epsilon_shortcut(l, t0) / bp.bound(l))
        for r in correlation_strengths(intensity, t0, 8, history_len=8):
            worst_mu = max(worst_mu, r.eps / bi.bound(r.l))
    elapsed = time.perf_counter() - start
    _detail(record_property, f"max eps/bound: phase {worst_phi:.3f}, intensity {worst_mu:.3f}, t={elapsed:.0f}s")
    assert worst_phi <= 1.0 and worst_mu <= 1.0
    assert elapsed < 120.0


@pytest.mark.acceptance(8, "alignment scan t0_b = 16.2, t0_w = 14.2 (+-0.3 ns) for both Delta_max")
def test_criterion_08_alignment(record_property):
    grid = np.round(np.arange(0.0, T + 1e-9, 0.02), 10)
    found = {}
    for name, alphabet, steady in (("bb84", BB84_PHASES, "0X"), ("three_state", THREE_STATE_PHASES, "0Y")):
        src = LTIPhaseSource(TABLE_I, alphabet, T, steady)
        sel = scan_alignment(src, grid, "eps_total", l_max=4, history_len=4)
        found[name] = (sel.t0_best, sel.t0_worst)
    _detail(record_property, ", ".join(f"{k}: b={b:.2f} w={w:.2f}" for k, (b, w) in found.items()))
    for b, w in found.values():
        assert abs(b - 16.2) <= 0.3
        assert abs(w - 14.2) <= 0.3


@pytest.mark.acceptance(9, "hybrid eps_phi: 4.31e-4 (15%) at 14.2 ns, 3.83e-10 (x10) at 16.2 ns")
def test_criterion_09_hybrid_eps_phi(record_property):
    env = decay_envelope(TABLE_I)
    src = LTIPhaseSource(TABLE_I, BB84_PHASES, T, "0X")
    values = {}
    for t0 in (14.2, 16.2):
        bp = security_constants(env, T, "phase", DELTA_MAX["bb84"], t0)
        values[t0] = eps_phi_total(hybrid_series(src, bp, l_split=4, l_e=6, t0=t0))
    _detail(record_property, f"eps_phi(14.2)={values[14.2]:.3e}, eps_phi(16.2)={values[16.2]:.3e}")
    worst_ok = abs(values[14.2] / 4.31e-4 - 1) <= 0.15
    best_ok = 0.1 <= values[16.2] / 3.83e-10 <= 10.0
    assert worst_ok and best_ok, values


@pytest.mark.acceptance(10, "Poisson fidelity series = closed form to 1e-10; F(mu, mu+d) >= F(0, d)")
def test_criterion_10_poisson_fidelity(record_property):
    mu = np.linspace(0.0, 1.0, 50)
    a, b = np.meshgrid(mu, mu, indexing="ij")
    gap = float(np.max(np.abs(poisson_fidelity(a, b, "truncated_series", 100) - poisson_fidelity(a, b))))
    m, d = np.meshgrid(mu[1:], mu, indexing="ij")
    ordering = bool(np.all(poisson_fidelity(m, m + d) >= poisson_fidelity(np.zeros_like(d), d)))
    _detail(record_property, f"max gap {gap:.1e}, ordering holds: {ordering}")
    assert gap < 1e-10
    assert ordering


@pytest.mark.acceptance(11, "fit round trip: 0.1% noiseless, 2% median at 1% noise over 20 seeds")
def test_criterion_11_fit(record_property):
    start = time.perf_counter()
    cfg = PulseTrainConfig(T, 5, "V")
    init = ThreePoleParams(0.95 * 1.2, 164.0 * 1.2, 80.0 * 1.2, 1.26 * 1.2)
    ref = np.array([TABLE_I.gain_G0, TABLE_I.nu1, TABLE_I.nu2, TABLE_I.alpha1])

    def rel(p):
        return np.abs(np.array([p.gain_G0, p.nu1, p.nu2, p.alpha1]) / ref - 1)

    clean = synth_fixture(TABLE_I, DEFAULT_FIT_SEQUENCE, cfg, DECOY_ALPHABET)
    err0 = rel(fit_three_pole(clean, DEFAULT_FIT_SEQUENCE, cfg, DECOY_ALPHABET, init).params)
    sigma = 0.01 * np.ptp(DECOY_ALPHABET.values)
    errs = []
    for seed in range(20):
        wf = synth_fixture(TABLE_I, DEFAULT_FIT_SEQUENCE, cfg, DECOY_ALPHABET, noise_sigma=sigma, seed=seed)
        errs.append(rel(fit_three_pole(wf, DEFAULT_FIT_SEQUENCE, cfg, DECOY_ALPHABET, init).params))
    median = np.median(errs, axis=0)
    elapsed = time.perf_counter() - start
    _detail(record_property, f"noiseless max {err0.max():.1e}, noisy median max {median.max():.2e}, "
                             f"t={elapsed:.0f}s")
    assert np.all(err0 < 1e-3)
    assert np.all(median < 0.02)
    assert elapsed < 120.0


@pytest.mark.acceptance(12, "declared non-reproducible items: key-rate hook contract substitutes")
def test_criterion_12_declared_substitutes(record_property):
    # experimental figures and absolute key-rate curves need lab data or an external
    # proof; what remains checkable is the hook contract of the stand-in model
    params = ProtocolParams()
    zero_at_one = key_rate(1.0, 25.0, params) == 0.0
    rates_L = [key_rate(1e-4, L, params) for L in np.linspace(0, 200, 81)]
    rates_e = [key_rate(e, 25.0, params) for e in np.linspace(0, 1e-2, 81)]
    mono_L = all(x >= y for x, y in zip(rates_L, rates_L[1:]))
    mono_e = all(x >= y for x, y in zip(rates_e, rates_e[1:]))
    _detail(record_property, f"zero at eps=1: {zero_at_one}, monotone in L: {mono_L}, in eps: {mono_e}")
    assert zero_at_one and mono_L and mono_e


@pytest.mark.acceptance(13, "243 base sequences; per-setting rows max-reduce to unconditional eps_l")
def test_criterion_13_enumeration(record_property):
    idx = enumerate_sequences(len(DECOY_ALPHABET), 5)
    phase = LTIPhaseSource(TABLE_I, DECOY_ALPHABET, T, "V")
    checks = []
    for src, t0 in ((phase, 16.2), (LTIIntensitySource(phase, MU0), 16.6)):
        rows = per_setting_breakdown(src, range(1, 5), t0)
        unconditional = [r.eps for r in correlation_strengths(src, t0, 4)]
        checks.append(np.array_equal(np.max(np.array(list(rows.values())), axis=0), unconditional))
    _detail(record_property, f"{idx.shape[0]} sequences, max-reduction exact: {checks}")
    assert idx.shape[0] == 243 and len({tuple(r) for r in idx}) == 243
    assert all(checks)
