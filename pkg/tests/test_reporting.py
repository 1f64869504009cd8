"""Checkpoint binary format and report serialization."""

import struct

import numpy as np
import pytest

from lckit import make_rng
from lckit.errors import (
    ArgumentError,
    CheckpointMagicError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from lckit.reporting import (
    CSV_COLUMNS,
    FinalSummary,
    RunReport,
    StepRecord,
    TaskSummary,
    emit_report,
    load_checkpoint,
    load_report_json,
    read_report_csv,
    save_checkpoint,
)
from lckit.solvers import (
    AdditiveForm,
    LowRankForm,
    QuantizedForm,
    SparseForm,
)


def sample_weights():
    rng = make_rng(0)
    return {
        "l1.weight": rng.standard_normal((4, 3)),
        "l1.bias": rng.standard_normal(4),
    }


def sample_forms():
    rng = make_rng(1)
    quant = QuantizedForm(
        codebook=np.array([-0.5, 1.25]),
        assignments=np.array([0, 1, 1, 0, 1, 0], dtype=np.int64),
        shape=(2, 3),
    )
    sparse = SparseForm(indices=np.array([1, 4], dtype=np.int64), values=np.array([2.5, -0.75]), shape=(6,))
    lowrank = LowRankForm(u=rng.standard_normal((4, 2)), v=rng.standard_normal((3, 2)))
    additive = AdditiveForm(components=[
        SparseForm(indices=np.array([0], dtype=np.int64), values=np.array([9.0]), shape=(5,)),
        QuantizedForm(codebook=np.array([0.25]), assignments=np.zeros(5, dtype=np.int64), shape=(5,)),
    ])
    return {0: quant, 1: sparse, 2: lowrank, 3: additive}


class TestCheckpoint:
    def test_round_trip_bit_identical(self, tmp_path):
        weights = sample_weights()
        thetas = sample_forms()
        lambdas = {i: make_rng(i).standard_normal(6) for i in thetas}
        meta = {"step": 7.0, "activation": 1.0}
        path = tmp_path / "state.ckpt"
        save_checkpoint(path, weights, thetas=thetas, lambdas=lambdas, meta=meta)
        back = load_checkpoint(path)
        for name, arr in weights.items():
            np.testing.assert_array_equal(back.weights[name], arr)
        for i, lam in lambdas.items():
            np.testing.assert_array_equal(back.lambdas[i], lam)
        assert back.meta == meta
        for i, form in thetas.items():
            np.testing.assert_array_equal(back.thetas[i].decompress(), form.decompress())
        assert back.thetas[0].shape == (2, 3)
        assert type(back.thetas[3]).__name__ == "AdditiveForm"

    def test_f32_export_loses_precision_but_loads(self, tmp_path):
        weights = sample_weights()
        path = tmp_path / "f32.ckpt"
        save_checkpoint(path, weights, dtype="f32")
        back = load_checkpoint(path)
        np.testing.assert_allclose(back.weights["l1.weight"], weights["l1.weight"], atol=1e-6)
        assert not np.array_equal(back.weights["l1.weight"], weights["l1.weight"])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(CheckpointMagicError):
            load_checkpoint(path)

    def test_version_gate(self, tmp_path):
        path = tmp_path / "v2.ckpt"
        path.write_bytes(b"LCCK" + struct.pack("<I", 2) + struct.pack("<I", 0))
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(path)

    def test_truncation(self, tmp_path):
        path = tmp_path / "full.ckpt"
        save_checkpoint(path, sample_weights())
        data = path.read_bytes()
        cut = tmp_path / "cut.ckpt"
        cut.write_bytes(data[:-5])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(cut)

    def test_bad_dtype_argument(self, tmp_path):
        with pytest.raises(ArgumentError):
            save_checkpoint(tmp_path / "x", sample_weights(), dtype="f16")


def sample_report():
    records = [
        StepRecord(step=0, mu=0.0, l_loss_before=None, l_loss_after=None,
                   c_distortion=[0.5, 0.25], c_pre_distortion=[None, None],
                   mismatch=0.8660254037844386, train_err=0.5, test_err=0.52),
        StepRecord(step=1, mu=1e-3, l_loss_before=1.2345678901234567, l_loss_after=0.9876543210987654,
                   c_distortion=[0.25, 0.2], c_pre_distortion=[0.5, 0.25],
                   mismatch=0.6708203932499369, train_err=None, test_err=None),
    ]
    final = FinalSummary(
        storage_bits_ref=32_000,
        storage_bits_compressed=1064,
        ratio=32_000 / 1064,
        tasks=[TaskSummary(task_index=0, description="x", ref_bits=32_000, compressed_bits=1064,
                           ratio=32_000 / 1064, detail={"view_shape": [1000]})],
    )
    return RunReport(config={"version": 1, "model": {"kind": "lenet300"}}, records=records,
                     final=final, converged=False)


class TestReports:
    def test_csv_round_trip_17_digits(self, tmp_path):
        report = sample_report()
        path = emit_report(report, tmp_path / "r.csv", fmt="csv")
        rows = read_report_csv(path)
        assert len(rows) == 2
        for row, record in zip(rows, report.records):
            assert row["step"] == record.step
            assert row["mu"] == record.mu
            assert row["l_loss_before"] == record.l_loss_before
            assert row["l_loss_after"] == record.l_loss_after
            assert row["c_distortion"] == record.c_distortion_total
            assert row["mismatch"] == record.mismatch
            assert row["train_err"] == record.train_err
            assert row["test_err"] == record.test_err

    def test_csv_header_exact(self, tmp_path):
        path = emit_report(sample_report(), tmp_path / "r.csv")
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
        assert header == "step,mu,l_loss_before,l_loss_after,c_distortion,mismatch,train_err,test_err"

    def test_empty_run_header_only(self, tmp_path):
        report = RunReport(config={}, records=[], final=None)
        path = emit_report(report, tmp_path / "empty.csv")
        assert path.read_text().strip() == ",".join(CSV_COLUMNS)
        assert read_report_csv(path) == []

    def test_json_round_trip_lossless(self, tmp_path):
        report = sample_report()
        path = emit_report(report, tmp_path / "r.json", fmt="json")
        back = load_report_json(path)
        assert back == report

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ArgumentError):
            emit_report(sample_report(), tmp_path / "r.xml", fmt="xml")

    def test_mismatch_nonnegative_and_converged_tolerance(self):
        from lckit import AdaptiveQuantization, AsVector, CompressionTask, QuadraticModel, ScheduleSpec
        from lckit import engine, make_exact_quadratic_l_step, make_rng

        rng = make_rng(3)
        model = QuadraticModel(rng.standard_normal(6), rng.uniform(0.5, 2, 6))
        tasks = [CompressionTask("w", AsVector(), AdaptiveQuantization(k=2))]
        report, _ = engine.run(
            model, tasks, ScheduleSpec(1e-3, 1.2, 120), make_exact_quadratic_l_step(), stop_tol=1e-6
        )
        assert all(r.mismatch >= 0 for r in report.records)
        assert report.converged
        ref_norm = float(np.linalg.norm(model.target))
        assert report.records[-1].mismatch <= 1e-6 * ref_norm
