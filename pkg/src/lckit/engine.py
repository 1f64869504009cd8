"""The outer compression loop.

A run alternates, per penalty value mu on an exponential schedule:
a learning step (train the uncompressed weights with a quadratic
attraction toward the current decompressed point shifted by the
multiplier estimate), a compression step (project the shifted weights of
every task onto its scheme's representable set), and a multiplier update
lambda <- lambda - mu * (w - decompressed). The loop starts with a direct
compression of the pretrained weights at mu = 0 and stops early once the
joint weight/decompression mismatch falls under a tolerance.

Tasks map disjoint parameter groups to a view (flattened vector or
matrix) and a scheme; compression steps for distinct tasks touch disjoint
data and run concurrently by default. Working weights stay uncompressed
between steps; reports and checkpoints materialize the decompressed
(feasible) model.

Note on mu-dependent schemes (penalty pruning, rank selection): their
projection is degenerate at mu = 0, so the initialization step hands them
the first schedule value instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CStepError, SchemeParamError, TaskOverlapError, ValidationError, ViewError
from .reporting import FinalSummary, RunReport, StepRecord, TaskSummary
from .solvers import Scheme

__all__ = [
    "AsVector",
    "AsMatrix",
    "CompressionTask",
    "ScheduleSpec",
    "TaskPlan",
    "EngineState",
    "validate_tasks",
    "gather",
    "scatter",
    "split_view",
    "c_step_all",
    "multipliers_step",
    "build_penalty_targets",
    "run",
    "monitor_check",
    "MonitorFinding",
    "compression_ratio",
    "substitute_compressed",
    "make_exact_quadratic_l_step",
]


@dataclass(frozen=True)
class AsVector:
    """Flatten the group's tensors and concatenate them in declared order."""


@dataclass(frozen=True)
class AsMatrix:
    """Reshape a single tensor row-major to rows x cols.

    Without explicit rows/cols the tensor's own 2-D shape is used (the
    as-is view for weight matrices).
    """

    rows: int | None = None
    cols: int | None = None


@dataclass(frozen=True)
class CompressionTask:
    """(parameter group) -> (view, scheme): one unit of the compression plan."""

    names: tuple[str, ...]
    view: AsVector | AsMatrix
    scheme: Scheme

    def __init__(self, names, view, scheme):
        if isinstance(names, str):
            names = (names,)
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(self, "view", view)
        object.__setattr__(self, "scheme", scheme)


@dataclass(frozen=True)
class ScheduleSpec:
    """Exponential penalty schedule mu_i = mu0 * a**i for i = 0..num_steps-1."""

    mu0: float
    a: float
    num_steps: int
    mode: str = "al"  # "al" = augmented Lagrangian, "qp" = quadratic penalty

    def __post_init__(self):
        if self.mu0 <= 0:
            raise ArgumentError(f"mu0 must be positive, got {self.mu0}")
        if self.a <= 1:
            raise ArgumentError(f"schedule factor a must exceed 1, got {self.a}")
        if self.num_steps < 0:
            raise ArgumentError(f"num_steps must be non-negative, got {self.num_steps}")
        if self.mode not in ("al", "qp"):
            raise ArgumentError(f"mode must be 'al' or 'qp', got {self.mode!r}")

    def mu_at(self, i: int) -> float:
        return self.mu0 * self.a**i


@dataclass
class TaskPlan:
    """A validated task: resolved shapes, view shape, and split offsets."""

    index: int
    task: CompressionTask
    tensor_shapes: list[tuple[int, ...]]
    view_shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.view_shape))

    def describe(self) -> str:
        names = ",".join(self.task.names)
        return f"[{names}] {self.task.scheme.config_name or type(self.task.scheme).__name__}"


@dataclass
class TaskState:
    theta: object = None
    lam: np.ndarray | None = None


@dataclass
class EngineState:
    tasks: list[TaskState]
    step: int = 0
    history: list[StepRecord] = field(default_factory=list)


def validate_tasks(model, tasks) -> list[TaskPlan]:
    """Check disjointness, shapes, and scheme parameters; build plans."""
    plans = []
    claimed: dict[str, int] = {}
    for index, task in enumerate(tasks):
        if len(task.names) == 0:
            raise ValidationError(f"task {index}: empty parameter group")
        if len(set(task.names)) != len(task.names):
            raise ValidationError(f"task {index}: duplicate names within the group")
        shapes = []
        for name in task.names:
            if name not in model.params:
                raise ValidationError(f"task {index}: unknown parameter {name!r}")
            if name in claimed:
                raise TaskOverlapError(f"parameter {name!r} claimed by tasks {claimed[name]} and {index}")
            claimed[name] = index
            shapes.append(model.params[name].shape)

        if isinstance(task.view, AsVector):
            view_shape: tuple[int, ...] = (int(sum(np.prod(s) for s in shapes)),)
        elif isinstance(task.view, AsMatrix):
            if len(task.names) != 1:
                raise ViewError(f"task {index}: a matrix view needs a single tensor, got {len(task.names)}")
            size = int(np.prod(shapes[0]))
            rows, cols = task.view.rows, task.view.cols
            if rows is None or cols is None:
                if len(shapes[0]) != 2:
                    raise ViewError(f"task {index}: tensor of shape {shapes[0]} needs explicit rows/cols")
                rows, cols = shapes[0]
            if rows * cols != size:
                raise ViewError(f"task {index}: {rows}x{cols} does not hold {size} elements")
            view_shape = (int(rows), int(cols))
        else:
            raise ViewError(f"task {index}: unknown view {task.view!r}")

        try:
            task.scheme.validate(view_shape)
        except SchemeParamError as e:
            raise SchemeParamError(f"task {index}: {e}") from e
        plans.append(TaskPlan(index=index, task=task, tensor_shapes=shapes, view_shape=view_shape))
    return plans


def gather(model, plan: TaskPlan) -> np.ndarray:
    """Current weights of a task in its view (always a fresh array)."""
    if isinstance(plan.task.view, AsMatrix):
        return model.params[plan.task.names[0]].reshape(plan.view_shape).copy()
    return np.concatenate([model.params[n].ravel() for n in plan.task.names])


def split_view(plan: TaskPlan, values: np.ndarray) -> dict[str, np.ndarray]:
    """Split a viewed array back into per-tensor pieces."""
    if isinstance(plan.task.view, AsMatrix):
        return {plan.task.names[0]: values.reshape(plan.tensor_shapes[0])}
    flat = values.ravel()
    out = {}
    offset = 0
    for name, shape in zip(plan.task.names, plan.tensor_shapes):
        size = int(np.prod(shape))
        out[name] = flat[offset : offset + size].reshape(shape)
        offset += size
    return out


def scatter(model, plan: TaskPlan, values: np.ndarray) -> None:
    """Write a viewed array into the model's parameter store."""
    for name, piece in split_view(plan, values).items():
        model.params[name][...] = piece


def _solve_one(plan: TaskPlan, state: TaskState, u: np.ndarray, scheme_mu: float):
    pre = None
    if state.theta is not None:
        diff = u - state.theta.decompress().reshape(u.shape)
        pre = float(np.sum(diff * diff))
    try:
        form, distortion = plan.task.scheme.compress(u, scheme_mu)
    except Exception as e:  # attach task identity, keep the cause
        raise CStepError(plan.index, f"{plan.describe()}: {e}") from e
    return form, distortion, pre


def c_step_all(model, plans, state: EngineState, mu: float, init_mu: float | None = None, sequential: bool = False):
    """Solve every task's projection on its shifted weights.

    mu = 0 means the direct-compression initialization: no multiplier
    shift, and mu-dependent schemes receive init_mu instead. Returns
    (per-task distortions, per-task pre-step distortions).
    """
    if mu < 0:
        raise ArgumentError(f"mu must be non-negative, got {mu}")

    def job(plan: TaskPlan):
        ts = state.tasks[plan.index]
        u = gather(model, plan)
        if mu > 0:
            u -= ts.lam.reshape(plan.view_shape) / mu
        scheme_mu = mu if mu > 0 else (init_mu if init_mu is not None else 0.0)
        return _solve_one(plan, ts, u, scheme_mu)

    if sequential or len(plans) <= 1:
        results = [job(p) for p in plans]
    else:
        with ThreadPoolExecutor(max_workers=len(plans)) as pool:
            results = list(pool.map(job, plans))

    distortions, pre_distortions = [], []
    for plan, (form, distortion, pre) in zip(plans, results):
        state.tasks[plan.index].theta = form
        distortions.append(distortion)
        pre_distortions.append(pre)
    return distortions, pre_distortions


def multipliers_step(model, plans, state: EngineState, mu: float, mode: str = "al") -> None:
    """lambda <- lambda - mu * (w - decompressed); no-op in penalty mode."""
    if mode == "qp":
        return
    for plan in plans:
        ts = state.tasks[plan.index]
        w = gather(model, plan)
        ts.lam = ts.lam - mu * (w.ravel() - ts.theta.decompress().ravel())


def build_penalty_targets(plans, state: EngineState, mu: float) -> dict[str, np.ndarray]:
    """Per-tensor attraction points decompressed + lambda/mu for the L step."""
    targets: dict[str, np.ndarray] = {}
    for plan in plans:
        ts = state.tasks[plan.index]
        viewed = ts.theta.decompress().reshape(plan.view_shape)
        if mu > 0:
            viewed = viewed + ts.lam.reshape(plan.view_shape) / mu
        targets.update(split_view(plan, viewed))
    return targets


def joint_mismatch(model, plans, state: EngineState) -> float:
    """||w - decompressed|| jointly over all tasks."""
    total = 0.0
    for plan in plans:
        diff = gather(model, plan).ravel() - state.tasks[plan.index].theta.decompress().ravel()
        total += float(np.sum(diff * diff))
    return float(np.sqrt(total))


def substitute_compressed(model, plans, state: EngineState) -> dict[str, np.ndarray]:
    """Write decompressed weights into the model; returns a restore map."""
    backup = {}
    for plan in plans:
        for name in plan.task.names:
            backup[name] = model.params[name].copy()
        scatter(model, plan, state.tasks[plan.index].theta.decompress())
    return backup


def restore_weights(model, backup: dict[str, np.ndarray]) -> None:
    for name, arr in backup.items():
        model.params[name][...] = arr


def _evaluate_compressed(model, plans, state, eval_fn):
    if eval_fn is None:
        return None, None
    backup = substitute_compressed(model, plans, state)
    try:
        result = eval_fn(model) or {}
    finally:
        restore_weights(model, backup)
    return result.get("train_err"), result.get("test_err")


def run(
    model,
    tasks,
    schedule: ScheduleSpec,
    l_step_fn,
    eval_fn=None,
    *,
    stop_tol: float = 1e-6,
    sequential: bool = False,
    eval_every: int = 1,
    config_echo: dict | None = None,
) -> tuple[RunReport, EngineState]:
    """Execute the full loop; returns the report and the final state.

    l_step_fn(model, targets, mu, step_index) -> (loss_before, loss_after)
    trains the working weights under the quadratic attraction; eval_fn
    (optional) is called on the decompressed weights and may return
    {"train_err": ..., "test_err": ...}. To also track the uncompressed
    working weights, evaluate inside l_step_fn, which owns the model
    while they are current. stop_tol is relative to the initial joint
    norm of the gathered reference weights. The model ends holding the
    final uncompressed weights; the feasible deliverable is the
    decompressed state (see substitute_compressed).
    """
    plans = validate_tasks(model, tasks)
    state = EngineState(tasks=[TaskState() for _ in plans])
    ref_norm = float(np.sqrt(sum(float(np.sum(gather(model, p) ** 2)) for p in plans)))
    threshold = stop_tol * ref_norm

    for plan in plans:
        state.tasks[plan.index].lam = np.zeros(plan.size)

    distortions, pres = c_step_all(model, plans, state, 0.0, init_mu=schedule.mu0, sequential=sequential)
    mismatch = joint_mismatch(model, plans, state)
    train_err, test_err = _evaluate_compressed(model, plans, state, eval_fn)
    state.history.append(
        StepRecord(
            step=0,
            mu=0.0,
            l_loss_before=None,
            l_loss_after=None,
            c_distortion=distortions,
            c_pre_distortion=pres,
            mismatch=mismatch,
            train_err=train_err,
            test_err=test_err,
        )
    )

    converged = mismatch <= threshold and schedule.num_steps > 0
    for i in range(schedule.num_steps):
        if converged:
            break
        mu = schedule.mu_at(i)
        targets = build_penalty_targets(plans, state, mu)
        loss_before, loss_after = l_step_fn(model, targets, mu, i)
        distortions, pres = c_step_all(model, plans, state, mu, sequential=sequential)
        multipliers_step(model, plans, state, mu, mode=schedule.mode)
        mismatch = joint_mismatch(model, plans, state)
        state.step = i + 1
        is_last = i == schedule.num_steps - 1
        should_eval = eval_fn is not None and (i % eval_every == 0 or is_last or mismatch <= threshold)
        train_err, test_err = (
            _evaluate_compressed(model, plans, state, eval_fn) if should_eval else (None, None)
        )
        state.history.append(
            StepRecord(
                step=i + 1,
                mu=mu,
                l_loss_before=loss_before,
                l_loss_after=loss_after,
                c_distortion=distortions,
                c_pre_distortion=pres,
                mismatch=mismatch,
                train_err=train_err,
                test_err=test_err,
            )
        )
        if mismatch <= threshold:
            converged = True

    final = compression_ratio(model, plans, state)
    report = RunReport(
        config=config_echo or {},
        records=list(state.history),
        final=final,
        converged=bool(converged),
    )
    return report, state


@dataclass(frozen=True)
class MonitorFinding:
    severity: str  # "WARNING" or "VIOLATION"
    step: int
    message: str


def monitor_check(history) -> list[MonitorFinding]:
    """Health rules over a run's records.

    A learning step that fails to reduce its penalized loss is a WARNING
    (tune the step's optimization); a compression step whose distortion
    exceeds the pre-step distortion by more than 1e-10 is a VIOLATION —
    the solvers are exact minimizers, so this must never fire on healthy
    runs.
    """
    if not history:
        raise ArgumentError("monitor_check needs a non-empty history")
    findings = []
    for record in history:
        if record.l_loss_before is not None and record.l_loss_after is not None:
            tol = 1e-12 * max(1.0, abs(record.l_loss_before))
            if record.l_loss_after > record.l_loss_before + tol:
                findings.append(
                    MonitorFinding(
                        "WARNING",
                        record.step,
                        f"learning step did not reduce the penalized loss "
                        f"({record.l_loss_before:.6g} -> {record.l_loss_after:.6g})",
                    )
                )
        for t, (post, pre) in enumerate(zip(record.c_distortion, record.c_pre_distortion)):
            if pre is not None and post > pre + 1e-10:
                findings.append(
                    MonitorFinding(
                        "VIOLATION",
                        record.step,
                        f"task {t}: compression step increased distortion ({pre:.6g} -> {post:.6g})",
                    )
                )
    return findings


def compression_ratio(model, plans, state: EngineState) -> FinalSummary:
    """Storage accounting: 32-bit reference vs documented per-form bits.

    Reference counts 32 bits per weight over every model parameter;
    compressed counts each task's form bits plus 32 bits per uncompressed
    parameter (biases included).
    """
    total_params = int(sum(p.size for p in model.params.values()))
    covered = int(sum(plan.size for plan in plans))
    ref_bits = 32 * total_params
    task_summaries = []
    task_bits = 0
    for plan in plans:
        form = state.tasks[plan.index].theta
        bits = int(form.storage_bits())
        task_bits += bits
        task_ref = 32 * plan.size
        task_summaries.append(
            TaskSummary(
                task_index=plan.index,
                description=f"{plan.describe()}: {form.describe()}",
                ref_bits=task_ref,
                compressed_bits=bits,
                ratio=task_ref / bits if bits else float("inf"),
                detail={"view_shape": list(plan.view_shape)},
            )
        )
    compressed_bits = task_bits + 32 * (total_params - covered)
    return FinalSummary(
        storage_bits_ref=ref_bits,
        storage_bits_compressed=compressed_bits,
        ratio=ref_bits / compressed_bits if compressed_bits else float("inf"),
        tasks=task_summaries,
    )


def make_exact_quadratic_l_step():
    """Learning step for QuadraticModel using the closed-form minimizer.

    Coordinates covered by a task move to the exact penalized optimum;
    uncovered coordinates return to the model's target (their
    unconstrained minimum).
    """
    from .models import QuadraticModel, exact_l_step_quadratic, penalized_loss

    def l_step(model: QuadraticModel, targets, mu, step_index):
        loss_before = penalized_loss(model, None, targets, mu)
        w = model.params["w"]
        new_w = model.target.copy()
        if "w" in targets:
            new_w = exact_l_step_quadratic(model, targets["w"], np.zeros_like(w), mu)
        w[...] = new_w
        loss_after = penalized_loss(model, None, targets, mu)
        return loss_before, loss_after

    return l_step
