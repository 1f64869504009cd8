"""Run artifacts: step records, reports, and binary checkpoints.

Checkpoint layout (little-endian): magic "LCCK", u32 version (currently
1), u32 entry count, then per entry a u32 name length, UTF-8 name, u8
dtype (0 = f32, 1 = f64), u8 rank, u64 dims[rank], and the raw row-major
payload. Model weights use their parameter names; compressed parameters
and multipliers use the reserved prefixes "theta/<task>/" and
"lambda/<task>"; scalar metadata uses "meta/".

CSV reports carry exactly the columns
step,mu,l_loss_before,l_loss_after,c_distortion,mismatch,train_err,test_err
with 17-significant-digit floats (lossless for float64); the JSON form
mirrors the full RunReport including per-task distortions.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    CheckpointMagicError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    FormatError,
)
from .solvers import AdditiveForm, LowRankForm, QuantizedForm, SparseForm

CHECKPOINT_MAGIC = b"LCCK"
CHECKPOINT_VERSION = 1

CSV_COLUMNS = (
    "step",
    "mu",
    "l_loss_before",
    "l_loss_after",
    "c_distortion",
    "mismatch",
    "train_err",
    "test_err",
)

__all__ = [
    "StepRecord",
    "TaskSummary",
    "FinalSummary",
    "RunReport",
    "emit_report",
    "read_report_csv",
    "load_report_json",
    "save_checkpoint",
    "load_checkpoint",
    "Checkpoint",
    "CSV_COLUMNS",
]


@dataclass
class StepRecord:
    """One outer-loop cycle; step 0 is the direct-compression init."""

    step: int
    mu: float
    l_loss_before: float | None
    l_loss_after: float | None
    c_distortion: list[float]
    c_pre_distortion: list[float | None]
    mismatch: float
    train_err: float | None = None
    test_err: float | None = None

    @property
    def c_distortion_total(self) -> float:
        return float(sum(self.c_distortion))


@dataclass
class TaskSummary:
    task_index: int
    description: str
    ref_bits: int
    compressed_bits: int
    ratio: float
    detail: dict = field(default_factory=dict)


@dataclass
class FinalSummary:
    storage_bits_ref: int
    storage_bits_compressed: int
    ratio: float
    tasks: list[TaskSummary] = field(default_factory=list)


@dataclass
class RunReport:
    config: dict
    records: list[StepRecord] = field(default_factory=list)
    final: FinalSummary | None = None
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "converged": self.converged,
            "records": [asdict(r) for r in self.records],
            "final": asdict(self.final) if self.final is not None else None,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunReport":
        records = [StepRecord(**r) for r in d["records"]]
        final = None
        if d.get("final") is not None:
            fd = dict(d["final"])
            fd["tasks"] = [TaskSummary(**t) for t in fd["tasks"]]
            final = FinalSummary(**fd)
        return RunReport(config=d["config"], records=records, final=final, converged=d["converged"])


def _fmt(value) -> str:
    return "" if value is None else format(float(value), ".17g")


def emit_report(report: RunReport, path, fmt: str = "csv") -> Path:
    """Write the report as CSV (fixed columns) or JSON (full fidelity)."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        return path
    if fmt != "csv":
        raise ArgumentError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in report.records:
            writer.writerow(
                [
                    r.step,
                    _fmt(r.mu),
                    _fmt(r.l_loss_before),
                    _fmt(r.l_loss_after),
                    _fmt(r.c_distortion_total),
                    _fmt(r.mismatch),
                    _fmt(r.train_err),
                    _fmt(r.test_err),
                ]
            )
    return path


def read_report_csv(path) -> list[dict]:
    """Parse an emitted CSV back into row dicts with floats (None for blanks)."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise FormatError(f"{path}: unexpected CSV header {reader.fieldnames}")
        for raw in reader:
            row = {"step": int(raw["step"])}
            for key in CSV_COLUMNS[1:]:
                row[key] = float(raw[key]) if raw[key] != "" else None
            rows.append(row)
    return rows


def load_report_json(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_DTYPES = {0: np.float32, 1: np.float64}


def _form_entries(prefix: str, form) -> list[tuple[str, np.ndarray]]:
    if isinstance(form, QuantizedForm):
        return [
            (f"{prefix}/quantized/codebook", form.codebook),
            (f"{prefix}/quantized/assignments", form.assignments.reshape(form.shape).astype(np.float64)),
        ]
    if isinstance(form, SparseForm):
        return [
            (f"{prefix}/sparse/indices", form.indices.astype(np.float64)),
            (f"{prefix}/sparse/values", form.values),
            (f"{prefix}/sparse/shape", np.array(form.shape, dtype=np.float64)),
        ]
    if isinstance(form, LowRankForm):
        return [(f"{prefix}/lowrank/u", form.u), (f"{prefix}/lowrank/v", form.v)]
    if isinstance(form, AdditiveForm):
        entries = []
        for j, comp in enumerate(form.components):
            entries.extend(_form_entries(f"{prefix}/additive/{j}", comp))
        return entries
    raise ArgumentError(f"cannot serialize form of type {type(form).__name__}")


def _form_from_tree(tree: dict):
    if "quantized" in tree:
        assignments = tree["quantized"]["assignments"]
        return QuantizedForm(
            codebook=tree["quantized"]["codebook"].ravel(),
            assignments=assignments.ravel().astype(np.int64),
            shape=assignments.shape,
        )
    if "sparse" in tree:
        shape = tuple(int(v) for v in tree["sparse"]["shape"].ravel())
        return SparseForm(
            indices=tree["sparse"]["indices"].ravel().astype(np.int64),
            values=tree["sparse"]["values"].ravel(),
            shape=shape,
        )
    if "lowrank" in tree:
        return LowRankForm(u=tree["lowrank"]["u"], v=tree["lowrank"]["v"])
    if "additive" in tree:
        parts = tree["additive"]
        comps = [_form_from_tree(parts[key]) for key in sorted(parts, key=int)]
        return AdditiveForm(components=comps)
    raise FormatError(f"unrecognized compressed-form entries: {sorted(tree)}")


@dataclass
class Checkpoint:
    weights: dict[str, np.ndarray]
    thetas: dict[int, object] = field(default_factory=dict)
    lambdas: dict[int, np.ndarray] = field(default_factory=dict)
    meta: dict[str, float] = field(default_factory=dict)


def save_checkpoint(path, weights: dict, thetas=None, lambdas=None, meta=None, dtype: str = "f64") -> Path:
    """Write named arrays (plus optional compressed state) to one file."""
    if dtype not in ("f32", "f64"):
        raise ArgumentError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    entries: list[tuple[str, np.ndarray]] = list(weights.items())
    for i, form in (thetas or {}).items():
        entries.extend(_form_entries(f"theta/{i}", form))
    for i, lam in (lambdas or {}).items():
        entries.append((f"lambda/{i}", np.asarray(lam, dtype=np.float64)))
    for key, value in (meta or {}).items():
        entries.append((f"meta/{key}", np.array([float(value)])))

    code = 0 if dtype == "f32" else 1
    np_dtype = "<f4" if dtype == "f32" else "<f8"
    path = Path(path)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            arr = np.ascontiguousarray(arr)
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<BB", code, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(arr.astype(np_dtype).tobytes())
    return path


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) < n:
        raise CheckpointTruncatedError(f"checkpoint ends inside {what}")
    return data


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint; arrays come back as float64 regardless of storage."""
    arrays: dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointMagicError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "the version field"))
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(f"{path}: version {version} not supported (reader is v{CHECKPOINT_VERSION})")
        (count,) = struct.unpack("<I", _read_exact(f, 4, "the entry count"))
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(f, 4, "an entry name length"))
            name = _read_exact(f, name_len, "an entry name").decode("utf-8")
            code, rank = struct.unpack("<BB", _read_exact(f, 2, f"the header of {name}"))
            if code not in _DTYPES:
                raise FormatError(f"{path}: unknown dtype code {code} for {name}")
            dims = struct.unpack(f"<{rank}Q", _read_exact(f, 8 * rank, f"the dims of {name}"))
            n_elems = int(np.prod(dims)) if rank else 1
            width = 4 if code == 0 else 8
            payload = _read_exact(f, n_elems * width, f"the payload of {name}")
            arr = np.frombuffer(payload, dtype="<f4" if code == 0 else "<f8").reshape(dims)
            arrays[name] = arr.astype(np.float64)

    ckpt = Checkpoint(weights={})
    theta_trees: dict[int, dict] = {}
    for name, arr in arrays.items():
        parts = name.split("/")
        if parts[0] == "theta":
            node = theta_trees.setdefault(int(parts[1]), {})
            for key in parts[2:-1]:
                node = node.setdefault(key, {})
            node[parts[-1]] = arr
        elif parts[0] == "lambda":
            ckpt.lambdas[int(parts[1])] = arr
        elif parts[0] == "meta":
            ckpt.meta["/".join(parts[1:])] = float(arr.ravel()[0])
        else:
            ckpt.weights[name] = arr
    for i, tree in theta_trees.items():
        ckpt.thetas[i] = _form_from_tree(tree)
    return ckpt
