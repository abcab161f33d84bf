import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pulsecorr.errors import DataError, DomainError
from pulsecorr.waveform import Waveform, read_waveform_csv, write_waveform_csv


def test_validation():
    with pytest.raises(DomainError):
        Waveform(0.0, 0.0, np.ones(3))
    with pytest.raises(DomainError):
        Waveform(0.0, 1.0, np.array([1.0, np.nan]))


def test_value_at_interpolates_and_bounds():
    wf = Waveform(0.0, 1.0, np.array([0.0, 2.0, 4.0]))
    np.testing.assert_allclose(wf.value_at([0.0, 0.5, 2.0]), [0.0, 1.0, 4.0])
    with pytest.raises(DomainError):
        wf.value_at([2.5])


def test_from_arrays_rejects_bad_time():
    with pytest.raises(DataError):
        Waveform.from_arrays([0.0, 1.0, 0.5], [1, 2, 3])
    with pytest.raises(DataError):
        Waveform.from_arrays([0.0, 1.0, 3.0], [1, 2, 3])


@given(values=st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50), t0=st.floats(-100, 100),
       dt=st.floats(1e-3, 10))
def test_csv_roundtrip_bit_exact(tmp_path_factory, values, t0, dt):
    path = tmp_path_factory.mktemp("wf") / "w.csv"
    wf = Waveform(t0, dt, np.array(values))
    write_waveform_csv(path, wf)
    back = read_waveform_csv(path)
    np.testing.assert_array_equal(back.samples, wf.samples)
    np.testing.assert_allclose(back.times, wf.times, rtol=1e-12, atol=1e-12)


def test_csv_headerless_fallback(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("0,1\n0.5,2\n1.0,3\n")
    wf = read_waveform_csv(p)
    assert wf.dt == 0.5 and list(wf.samples) == [1.0, 2.0, 3.0]


def test_csv_row_numbered_error(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("time_ns,value\n0,1\n0.5,abc\n")
    with pytest.raises(DataError, match="row 3"):
        read_waveform_csv(p)
    p.write_text("time_ns,value\n0,1,2\n")
    with pytest.raises(DataError, match="row 2"):
        read_waveform_csv(p)
