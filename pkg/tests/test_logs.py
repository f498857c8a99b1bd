"""Sensor log CSV format: round trips and malformed-input reporting."""

import numpy as np
import pytest

from pneusid.errors import DataError
from pneusid.logs import SensorLog, read_log, write_log


def make_log(n=1000, dt=1 / 32000.0, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) * dt
    return SensorLog(t=t, cmd=rng.uniform(-5, 5, n),
                     p=1e5 + 1e4 * rng.random(n),
                     piston=0.01 * rng.random(n),
                     src_p=np.full(n, 161325.0),
                     meta={"cylinder": "AIR37", "valve": "valve1",
                           "piston_units": "m"})


class TestRoundTrip:
    def test_values_identical(self, tmp_path):
        log = make_log()
        path = tmp_path / "log.csv"
        write_log(log, path)
        back = read_log(path)
        np.testing.assert_array_equal(back.t, log.t)
        np.testing.assert_array_equal(back.cmd, log.cmd)
        np.testing.assert_array_equal(back.p, log.p)
        np.testing.assert_array_equal(back.piston, log.piston)
        np.testing.assert_array_equal(back.src_p, log.src_p)
        assert back.meta == log.meta

    def test_write_read_write_byte_identical(self, tmp_path):
        log = make_log(seed=3)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_log(log, p1)
        write_log(read_log(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_32khz_dt_accepted(self, tmp_path):
        log = make_log(n=200, dt=1 / 32000.0)
        path = tmp_path / "fast.csv"
        write_log(log, path)
        assert read_log(path).sample_hz == pytest.approx(32000.0)


class TestValidation:
    def test_nan_reported_with_row(self, tmp_path):
        log = make_log(n=20)
        path = tmp_path / "bad.csv"
        write_log(log, path)
        lines = path.read_text().splitlines()
        # header block: 3 meta lines + 1 header; data row 7 follows
        data_start = 4
        row = lines[data_start + 6].split(",")
        row[2] = "nan"
        lines[data_start + 6] = ",".join(row)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="row 7"):
            read_log(path)

    def test_missing_column_reported(self, tmp_path):
        path = tmp_path / "cols.csv"
        path.write_text("t,cmd,p,piston\n0.0,0.0,1e5,0.0\n")
        with pytest.raises(DataError, match="header"):
            read_log(path)

    def test_short_row_reported(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("t,cmd,p,piston,src_p\n"
                        "0.0,0.0,100000.0,0.0,161325.0\n"
                        "0.001,0.0,100000.0,0.0\n")
        with pytest.raises(DataError, match="row 2"):
            read_log(path)

    def test_dt_jitter_rejected(self):
        t = np.arange(100) * 1e-3
        t[50] += 1e-6
        with pytest.raises(DataError, match="uniform"):
            SensorLog(t=t, cmd=np.zeros(100), p=np.full(100, 1e5),
                      piston=np.zeros(100), src_p=np.full(100, 1.6e5))

    def test_dt_within_tolerance_accepted(self):
        t = np.arange(100) * 1e-3
        t[50] += 5e-10
        log = SensorLog(t=t, cmd=np.zeros(100), p=np.full(100, 1e5),
                        piston=np.zeros(100), src_p=np.full(100, 1.6e5))
        assert log.dt == pytest.approx(1e-3)

    def test_nonpositive_pressure_rejected(self):
        t = np.arange(10) * 1e-3
        p = np.full(10, 1e5)
        p[3] = 0.0
        with pytest.raises(DataError, match="positive"):
            SensorLog(t=t, cmd=np.zeros(10), p=p, piston=np.zeros(10),
                      src_p=np.full(10, 1.6e5))

    def test_missing_file_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# cylinder=AIR37\n")
        with pytest.raises(DataError, match="header"):
            read_log(path)
