import csv
import math

from ctlm import bench, cli
from ctlm.params import profile


def test_generate_rows_and_csv_round_trip(tmp_path):
    p = profile("test").with_(ring_size=4)
    rows = bench.bench_generate(p, io_counts=[1, 2], reps=3)
    assert [(r.operation, r.io) for r in rows] == [("pre_spend", 1), ("spend", 1), ("pre_spend", 2), ("spend", 2)]
    assert all(r.reps >= bench.MIN_REPS for r in rows)
    assert all(r.min_s <= r.median_s <= r.max_s for r in rows)
    path = tmp_path / "b.csv"
    bench.write_csv(rows, path)
    with open(path) as fh:
        assert next(csv.reader(fh)) == bench.CSV_COLUMNS
    assert bench.read_csv(path) == rows


def test_zero_output_scan_flagged():
    (row,) = bench.bench_scan(profile("test"), outputs=0)
    assert math.isnan(row.throughput_per_s) and row.note == "no outputs"


def test_cli_bench_writes_csv_and_figures(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["--ring", "4", "bench", "all", "--out", str(out), "--io", "1-2", "--workers", "1",
                     "--txs", "2", "--outputs", "50"])
    assert code == 0
    assert (out / "bench_all.csv").exists()
    assert (out / "generate.png").stat().st_size > 0
    assert (out / "throughput.png").stat().st_size > 0
    ops = {r.operation for r in bench.read_csv(out / "bench_all.csv")}
    assert ops == {"pre_spend", "spend", "verify", "scan"}
    assert cli.main(["report", "--csv", str(out / "bench_all.csv"), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "generate.png").exists()
