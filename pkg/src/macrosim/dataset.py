"""Batch generation of (signal configuration -> congestion metrics) tables.

Every run starts from the same initial state and simulates one uniformly
random signal configuration. Run i draws its configuration from a generator
seeded by hashing (master seed, i), so any row can be regenerated in
isolation and the table is bit-identical regardless of how many worker
processes computed it.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metrics import QueueFnParams
from .signals import IntersectionSignal, sample_config
from .solver import SimParams, SimState, SimulationError, run


class DatasetError(Exception):
    """Raised for malformed dataset files."""


@dataclass(frozen=True)
class DatasetRow:
    run_id: int
    seed: int
    config: dict
    avg_speed: float
    queue_length: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def child_seed(master_seed: int, run_id: int) -> int:
    """Stable per-run seed from the master seed and the run index."""
    ss = np.random.SeedSequence((master_seed, run_id))
    return int(ss.generate_state(1, np.uint64)[0])


_CTX: dict = {}


def _init_worker(net, state0, params, horizon, warmup, queue_params):
    _CTX.update(
        net=net, state0=state0, params=params, horizon=horizon, warmup=warmup, queue_params=queue_params
    )


def _run_job(job) -> DatasetRow:
    run_id, seed = job
    net = _CTX["net"]
    rng = np.random.default_rng(seed)
    config = sample_config(net, rng)
    try:
        result = run(
            net,
            _CTX["state0"],
            config,
            _CTX["params"],
            horizon=_CTX["horizon"],
            warmup=_CTX["warmup"],
            queue_params=_CTX["queue_params"],
        )
        return DatasetRow(
            run_id=run_id,
            seed=seed,
            config=config,
            avg_speed=result.metrics.avg_speed,
            queue_length=result.metrics.queue_length,
            status="ok",
        )
    except SimulationError as exc:
        diagnostic = " ".join(str(exc).split())
        return DatasetRow(
            run_id=run_id,
            seed=seed,
            config=config,
            avg_speed=float("nan"),
            queue_length=float("nan"),
            status=f"failed: {diagnostic}",
        )


def generate(
    net,
    state0: SimState,
    params: SimParams,
    n_runs: int,
    seed: int,
    workers: int = 1,
    horizon: float = 340.0,
    warmup: float = 100.0,
    queue_params: QueueFnParams = QueueFnParams(),
) -> list[DatasetRow]:
    """Simulate ``n_runs`` random configurations from a shared initial state.

    Rows are ordered by run_id. A run that aborts (non-finite state) becomes
    a failed row with NaN metrics instead of stopping the batch. Worker
    processes only change wall time, never results.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if not net.signalized_ids():
        raise ValueError("network has no signalized intersections; nothing to vary")

    jobs = [(i, child_seed(seed, i)) for i in range(n_runs)]
    if workers == 1:
        _init_worker(net, state0, params, horizon, warmup, queue_params)
        return [_run_job(job) for job in jobs]
    with ProcessPoolExecutor(
        max_workers=workers,
        initializer=_init_worker,
        initargs=(net, state0, params, horizon, warmup, queue_params),
    ) as pool:
        return list(pool.map(_run_job, jobs, chunksize=max(1, n_runs // (4 * workers))))


def _format_float(x: float) -> str:
    return repr(float(x))


def write_csv(rows: list[DatasetRow], path) -> None:
    """Write a dataset table; columns are run_id, seed, one red/green/offset
    triple per intersection in sorted-id order, both metrics, status."""
    if not rows:
        raise DatasetError("refusing to write an empty dataset")
    ids = sorted(rows[0].config)
    header = ["run_id", "seed"]
    for iid in ids:
        header += [f"{iid}_red", f"{iid}_green", f"{iid}_offset"]
    header += ["avg_speed", "queue_length", "status"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            if sorted(row.config) != ids:
                raise DatasetError(f"run {row.run_id}: configuration covers different intersections")
            record = [row.run_id, row.seed]
            for iid in ids:
                sig = row.config[iid]
                record += [sig.red, sig.green, sig.offset]
            record += [_format_float(row.avg_speed), _format_float(row.queue_length), row.status]
            writer.writerow(record)


def read_csv(path) -> list[DatasetRow]:
    """Read a dataset table back; full-precision floats round-trip exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetError(f"{path}: empty file")
        header = [h.strip() for h in header]

        for required in ("run_id", "seed", "avg_speed", "queue_length", "status"):
            if required not in header:
                raise DatasetError(f"{path}: missing column {required}")
        timing_cols = [h for h in header if h not in ("run_id", "seed", "avg_speed", "queue_length", "status")]
        ids = []
        for col in timing_cols:
            if col.endswith("_red"):
                ids.append(col[: -len("_red")])
        for iid in ids:
            for suffix in ("_red", "_green", "_offset"):
                if f"{iid}{suffix}" not in header:
                    raise DatasetError(f"{path}: missing column {iid}{suffix}")
        expected_timing = {f"{iid}{suffix}" for iid in ids for suffix in ("_red", "_green", "_offset")}
        stray = [c for c in timing_cols if c not in expected_timing]
        if stray:
            raise DatasetError(f"{path}: unrecognized columns {stray}")
        index = {name: i for i, name in enumerate(header)}

        rows = []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DatasetError(
                    f"{path}: line {line_no}: expected {len(header)} columns, got {len(record)}"
                )
            try:
                config = {
                    iid: IntersectionSignal(
                        red=int(record[index[f"{iid}_red"]]),
                        green=int(record[index[f"{iid}_green"]]),
                        offset=int(record[index[f"{iid}_offset"]]),
                    )
                    for iid in ids
                }
                rows.append(
                    DatasetRow(
                        run_id=int(record[index["run_id"]]),
                        seed=int(record[index["seed"]]),
                        config=config,
                        avg_speed=float(record[index["avg_speed"]]),
                        queue_length=float(record[index["queue_length"]]),
                        status=record[index["status"]],
                    )
                )
            except ValueError as exc:
                raise DatasetError(f"{path}: line {line_no}: {exc}") from None
    return rows


def feature_matrix(rows: list[DatasetRow]):
    """Encoded configurations of the ok rows as an (n, 3K) matrix in [0, 1].

    Returns (X, Y, ids): features, the (n, 2) [avg_speed, queue_length]
    targets, and the intersection-id order defining the columns.
    """
    from .signals import encode_values

    ok_rows = [r for r in rows if r.ok]
    if not ok_rows:
        raise DatasetError("no successful rows in dataset")
    ids = sorted(ok_rows[0].config)
    X = np.stack([encode_values(r.config, ids) for r in ok_rows])
    Y = np.array([[r.avg_speed, r.queue_length] for r in ok_rows])
    if not np.all(np.isfinite(Y)):
        raise DatasetError("non-finite metrics in rows marked ok")
    return X, Y, ids
