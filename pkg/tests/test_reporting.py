import json

import numpy as np
import pytest

from hn4walk.engine import ProbabilityTrace
from hn4walk.experiments import ScalingRecord, SweepPoint, SweepResult
from hn4walk.fitting import FitResult, RuntimeModel
from hn4walk.reporting import (
    RECORDS_HEADER,
    RunManifest,
    manifest_path,
    read_records_csv,
    write_fit_json,
    write_manifest,
    write_records_csv,
    write_sweep_csv,
    write_trace_csv,
)


def sample_records():
    return [
        ScalingRecord(64, 4096, 1, 8.5, "hn4", 123, 0, 113, 0.9978988985252377, 113.118),
        ScalingRecord(128, 16384, 1, 8.5, "hn4", 124, 1, 227, 0.99884, 227.13),
    ]


def test_records_csv_round_trip(tmp_path):
    path = tmp_path / "records.csv"
    records = sample_records()
    write_records_csv(path, records)
    lines = path.read_text().splitlines()
    assert lines[0] == RECORDS_HEADER
    assert read_records_csv(path) == records


def test_records_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_records_csv(path)


def test_records_csv_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records_csv(a, sample_records())
    write_records_csv(b, sample_records())
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_float_formatting_survives_round_trip(tmp_path):
    value = 0.1234567890123456789
    record = ScalingRecord(64, 4096, 1, value, "hn4", 1, 0, 10, value, value)
    path = tmp_path / "r.csv"
    write_records_csv(path, [record])
    back = read_records_csv(path)[0]
    assert back.na == record.na
    assert back.peak_probability == record.peak_probability
    assert back.amplified_cost == record.amplified_cost


def test_trace_csv(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, ProbabilityTrace(np.array([0.25, 0.5])))
    assert path.read_text() == "step,probability\n0,0.25\n1,0.5\n"


def test_sweep_csv_marks_optimal_row(tmp_path):
    sweep = SweepResult(
        points=(SweepPoint(7.0, 118, 0.9943), SweepPoint(8.5, 113, 0.9979)),
        optimal_index=1,
    )
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, sweep)
    lines = path.read_text().splitlines()
    assert lines[0] == "na,peak_step,peak_probability,optimal"
    assert lines[1].endswith(",0")
    assert lines[2].endswith(",1")


def test_manifest_fields_and_path(tmp_path):
    manifest = RunManifest.begin("simulate", {"side": 16, "na": 8.5}, seed=7, workers=2)
    manifest.extra["resolved_steps"] = 96
    out = tmp_path / "trace.csv"
    written = write_manifest(out, manifest.finish())
    assert written == tmp_path / "trace.manifest.json"
    assert manifest_path(out) == written
    doc = json.loads(written.read_text())
    assert doc["command"] == "simulate"
    assert doc["parameters"] == {"side": 16, "na": 8.5}
    assert doc["seed"] == 7
    assert doc["workers"] == 2
    assert doc["prng"] == "numpy-pcg64"
    assert doc["engine_version"]
    assert doc["started_utc"] and doc["finished_utc"]
    assert doc["resolved_steps"] == 96


def test_fit_json(tmp_path):
    fit = FitResult(RuntimeModel.SQRT, 1.79, 0.02, 4)
    path = tmp_path / "fit.json"
    write_fit_json(path, fit, RunManifest.begin("fit", {}))
    doc = json.loads(path.read_text())
    assert doc["model"] == "sqrt"
    assert doc["coefficient"] == 1.79
    assert doc["rms_relative_residual"] == 0.02
    assert doc["points"] == 4
    assert doc["manifest"]["command"] == "fit"
