import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pulsecorr.errors import DegenerateFilterError, DomainError, ResolutionError
from pulsecorr.lti import (TABLE_I, FilterSpec, ThreePoleParams, decay_envelope, derived_geometry,
                           error_function, error_function_g, residues, step_response, step_response_general,
                           step_response_oracle, step_response_three_pole)

valid_params = st.builds(
    ThreePoleParams,
    gain_G0=st.floats(0.5, 1.5),
    nu1=st.floats(10.0, 500.0),
    nu2=st.floats(10.0, 500.0),
    alpha1=st.floats(0.2, 1.4),
)


def test_unit_convention():
    assert TABLE_I.omega1 == pytest.approx(2 * math.pi * 164.0)
    assert TABLE_I.omega2 == pytest.approx(2 * math.pi * 80.0)


@pytest.mark.parametrize("kw", [dict(nu1=0.0), dict(nu2=-1.0), dict(alpha1=0.0), dict(alpha1=math.pi / 2),
                                dict(gain_G0=0.0), dict(gain_G0=float("nan"))])
def test_params_validation(kw):
    base = dict(gain_G0=0.95, nu1=164.0, nu2=80.0, alpha1=1.26)
    with pytest.raises(DomainError):
        ThreePoleParams(**{**base, **kw})


def test_params_roundtrip_dict():
    assert ThreePoleParams.from_dict(TABLE_I.to_dict()) == TABLE_I


def test_derived_geometry_table_i():
    r, eta = derived_geometry(TABLE_I)
    assert r > 0 and eta > 0 and math.isfinite(r)


def test_derived_geometry_isosceles():
    p = ThreePoleParams(1.0, 100.0, 100.0, math.pi / 3)
    r, _ = derived_geometry(p)
    assert r == pytest.approx(p.omega1, rel=1e-12)


def test_step_response_values():
    assert step_response_three_pole(TABLE_I, -5.0) == 0.0
    assert abs(step_response_three_pole(TABLE_I, 0.0)) < 1e-9
    assert step_response_three_pole(TABLE_I, 200.0) == pytest.approx(0.95, abs=1e-3)


def test_error_function_values():
    assert error_function_g(TABLE_I, 0.0) == pytest.approx(-1.0, abs=1e-9)
    env = decay_envelope(TABLE_I)
    assert abs(error_function_g(TABLE_I, 100.0)) < env(100.0)
    assert abs(error_function_g(TABLE_I, 1e4)) < 1e-300 or error_function_g(TABLE_I, 1e4) == 0
    with pytest.raises(DomainError):
        error_function_g(TABLE_I, -1.0)


def test_envelope_values_and_domination():
    env = decay_envelope(TABLE_I)
    assert env.amplitude_A == pytest.approx(1.60, rel=0.02)
    assert env.rate_b == pytest.approx(318.7, rel=0.02)
    t = np.linspace(0, 200, 10_000)
    assert np.all(np.abs(error_function_g(TABLE_I, t)) <= env(t))


def test_envelope_rate_min_selection():
    p = ThreePoleParams(1.0, 100.0, 500.0, 0.3)
    assert decay_envelope(p).rate_b == pytest.approx(p.omega1 * math.cos(0.3))
    p = ThreePoleParams(1.0, 100.0, 10.0, 0.3)
    assert decay_envelope(p).rate_b == pytest.approx(p.omega2)


def test_envelope_at_oscillation_extrema():
    env = decay_envelope(TABLE_I)
    t = np.linspace(0, 60, 200_001)
    g = np.abs(error_function_g(TABLE_I, t))
    peaks = np.flatnonzero((g[1:-1] > g[:-2]) & (g[1:-1] >= g[2:])) + 1
    assert len(peaks) > 3
    assert np.all(g[peaks] <= env(t[peaks]))


def test_general_first_order():
    w = 2 * math.pi * 50.0
    f = FilterSpec(1.0, (complex(-w, 0),))
    assert residues(f)[0] == pytest.approx(-1.0)
    t = np.linspace(0, 50, 101)
    np.testing.assert_allclose(step_response_general(f, t), 1 - np.exp(-w * t * 1e-3), atol=1e-14)
    assert step_response_general(f, -1.0) == 0.0


def test_general_matches_closed_form():
    t = np.linspace(0, 100, 5001)
    np.testing.assert_allclose(step_response_general(TABLE_I.as_filter(), t),
                               step_response_three_pole(TABLE_I, t), atol=1e-9)


def test_filter_spec_validation():
    with pytest.raises(DomainError):
        FilterSpec(1.0, (complex(1.0, 0),))
    with pytest.raises(DomainError):
        FilterSpec(1.0, (complex(-1.0, 2.0),))
    with pytest.raises(DegenerateFilterError):
        FilterSpec(1.0, (complex(-1.0, 0), complex(-1.0, 0)))


def test_oracle_table_i_fine_step():
    wf = step_response_oracle(TABLE_I.as_filter(), 100.0, dt=1e-3)
    assert np.max(np.abs(wf.samples - step_response_three_pole(TABLE_I, wf.times))) < 1e-6


def test_oracle_first_order():
    w = 2 * math.pi * 30.0
    wf = step_response_oracle(FilterSpec(1.0, (complex(-w, 0),)), 50.0)
    np.testing.assert_allclose(wf.samples, 1 - np.exp(-w * wf.times * 1e-3), atol=1e-8)


def test_oracle_edge_cases():
    assert len(step_response_oracle(TABLE_I.as_filter(), 0.0)) == 0
    with pytest.raises(ResolutionError):
        step_response_oracle(TABLE_I.as_filter(), 10.0, dt=1.0)


def test_dispatch():
    t = np.array([0.5, 3.0])
    np.testing.assert_allclose(step_response(TABLE_I, t), step_response(TABLE_I.as_filter(), t), atol=1e-12)
    np.testing.assert_allclose(error_function(TABLE_I, t), error_function(TABLE_I.as_filter(), t), atol=1e-12)


@given(valid_params)
def test_conjugate_closure_imaginary_part(p):
    t = np.linspace(0, 100, 201)
    z = step_response_general(p.as_filter(), t, return_complex=True)
    assert np.max(np.abs(z.imag)) < 1e-10


@given(valid_params)
def test_residues_sum(p):
    assert abs(np.sum(residues(p.as_filter())) + 1) < 1e-9


@given(valid_params)
def test_envelope_domination_random(p):
    env = decay_envelope(p)
    t = np.linspace(0, 200, 2001)
    assert np.all(np.abs(error_function_g(p, t)) <= env(t) * (1 + 1e-12) + 1e-300)
