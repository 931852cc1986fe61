import io

import pytest

from common import BetheError
from bench import HEADERS, parse_grid, run_bench, write_csv


def test_parse_grid():
    assert parse_grid("M=1..3,N=16,64,256") == ([1, 2, 3], [16, 64, 256])
    assert parse_grid("N=2..3,M=4") == ([4], [2, 3])


@pytest.mark.parametrize(
    "text", ["N=4", "M=1,N=2,K=3", "M1..2", "M=a..3,N=4", "M=1,N=4,x", "M=1..,N=4"]
)
def test_parse_grid_errors(text):
    with pytest.raises(BetheError):
        parse_grid(text)


def test_run_bench_rows():
    rows = run_bench([2], [4, 1], seed=3)
    # N < M is skipped
    assert [r["method"] for r in rows] == ["dense", "mps", "transfer"]
    values = [complex(float(r["re"]), float(r["im"])) for r in rows]
    assert all(abs(v - values[0]) < 1e-9 * abs(values[0]) for v in values)
    assert rows[1]["multiplies"] > 0
    # Four sites by repeated squaring: two squarings, one multiply
    assert rows[2]["multiplies"] == 3

    f = io.StringIO()
    write_csv(rows, f)
    assert f.getvalue().splitlines()[0] == ",".join(HEADERS)


def test_dense_skipped_above_oracle_bound(monkeypatch):
    monkeypatch.setenv("BETHE_ORACLE_MAX", "10")
    rows = run_bench([2], [8], seed=0)
    assert [r["method"] for r in rows] == ["mps", "transfer"]
