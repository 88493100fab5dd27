"""Event-history data model: survival frames, multi-state records, risk sets.

Survival data are stored column-wise in immutable frames.  Multi-state
trajectories are kept in long format (one row per sojourn) and reduced to
per-transition survival frames, treating the entry time into the source
state as a left-truncation time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

__all__ = [
    "CENSORED",
    "SurvivalRecord",
    "SurvivalFrame",
    "TransitionRecord",
    "RiskProfile",
    "parse_survival_csv",
    "write_survival_csv",
    "parse_multistate_csv",
    "write_multistate_csv",
    "split_transitions",
    "risk_profile",
]

# token used for the censoring pseudo-state in multi-state CSV files
CENSORED = "cens"


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: observed time, event indicator, entry time, covariates."""

    time: float
    status: int
    entry: float = 0.0
    covariates: tuple = ()

    def __post_init__(self):
        if not (self.time >= 0):
            raise ValidationError(f"time must be >= 0, got {self.time}")
        if self.status not in (0, 1):
            raise ValidationError(f"status must be 0 or 1, got {self.status}")
        if not (self.entry >= 0):
            raise ValidationError(f"entry must be >= 0, got {self.entry}")
        if self.entry >= self.time:
            raise ValidationError(
                f"entry time {self.entry} must be < observed time {self.time}"
            )


@dataclass(frozen=True)
class SurvivalFrame:
    """Column-wise survival sample (time, status, entry, covariates)."""

    time: np.ndarray
    status: np.ndarray
    entry: np.ndarray
    covariates: np.ndarray  # shape (n, d), d may be 0

    def __post_init__(self):
        time = np.asarray(self.time, dtype=float).reshape(-1)
        status = np.asarray(self.status, dtype=np.int8).reshape(-1)
        entry = np.asarray(self.entry, dtype=float).reshape(-1)
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(len(time), -1) if cov.size else cov.reshape(len(time), 0)
        n = time.size
        if status.size != n or entry.size != n or cov.shape[0] != n:
            raise ValidationError("column lengths differ")
        if np.any(time < 0):
            raise ValidationError("times must be >= 0")
        if np.any((status != 0) & (status != 1)):
            raise ValidationError("status must be 0 or 1")
        if np.any(entry >= time):
            bad = int(np.argmax(entry >= time))
            raise ValidationError(f"entry >= time for record {bad}")
        for a in (time, status, entry, cov):
            a.setflags(write=False)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "status", status)
        object.__setattr__(self, "entry", entry)
        object.__setattr__(self, "covariates", cov)

    @classmethod
    def from_records(cls, records) -> "SurvivalFrame":
        records = list(records)
        if not records:
            raise ValidationError("empty record list")
        d = len(records[0].covariates)
        if any(len(r.covariates) != d for r in records):
            raise ValidationError("records have differing covariate dimension")
        return cls(
            time=np.array([r.time for r in records]),
            status=np.array([r.status for r in records]),
            entry=np.array([r.entry for r in records]),
            covariates=np.array([r.covariates for r in records]).reshape(len(records), d),
        )

    @property
    def n(self) -> int:
        return self.time.size

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    def __len__(self) -> int:
        return self.n

    def records(self):
        return [
            SurvivalRecord(
                float(self.time[i]),
                int(self.status[i]),
                float(self.entry[i]),
                tuple(self.covariates[i]),
            )
            for i in range(self.n)
        ]

    def event_times(self) -> np.ndarray:
        return self.time[self.status == 1]


@dataclass(frozen=True)
class TransitionRecord:
    """One sojourn: subject id, source state, destination (or censored)."""

    id: object
    from_state: int
    to_state: int | None  # None means censored while in from_state
    t_start: float
    t_stop: float

    def __post_init__(self):
        if not (self.t_start < self.t_stop):
            raise ValidationError(
                f"subject {self.id}: t_start {self.t_start} must be < t_stop {self.t_stop}"
            )
        if self.to_state is not None and self.to_state == self.from_state:
            raise ValidationError(f"subject {self.id}: from and to states equal")


@dataclass(frozen=True)
class RiskProfile:
    """Risk-set summary at one evaluation time."""

    eval_time: float
    at_risk_count: int
    weighted_risk: float


# -- CSV I/O -----------------------------------------------------------------


def _parse_float(text, row, col):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"column '{col}': cannot parse number from {text!r}", row=row)


def parse_survival_csv(path, schema: dict | None = None) -> SurvivalFrame:
    """Read a survival frame from CSV.

    The default schema takes columns named ``entry`` (optional), ``time`` and
    ``status``; every remaining column is a covariate.  ``schema`` may remap
    these: keys ``time``, ``status``, ``entry`` (column names) and
    ``covariates`` (list of column names).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, header row required")
        cols = list(reader.fieldnames)
        schema = dict(schema or {})
        time_col = schema.get("time", "time")
        status_col = schema.get("status", "status")
        entry_col = schema.get("entry", "entry" if "entry" in cols else None)
        for c in (time_col, status_col):
            if c not in cols:
                raise SchemaError(f"{path}: missing mandatory column '{c}'")
        if entry_col is not None and entry_col not in cols:
            raise SchemaError(f"{path}: missing entry column '{entry_col}'")
        cov_cols = schema.get("covariates")
        if cov_cols is None:
            used = {time_col, status_col} | ({entry_col} if entry_col else set())
            cov_cols = [c for c in cols if c not in used]
        else:
            for c in cov_cols:
                if c not in cols:
                    raise SchemaError(f"{path}: missing covariate column '{c}'")

        time, status, entry, covs = [], [], [], []
        for i, row in enumerate(reader):
            t = _parse_float(row[time_col], i, time_col)
            s = _parse_float(row[status_col], i, status_col)
            if s not in (0.0, 1.0):
                raise ParseError(f"status must be 0 or 1, got {row[status_col]!r}", row=i)
            e = _parse_float(row[entry_col], i, entry_col) if entry_col else 0.0
            if e >= t:
                raise ValidationError(f"row {i}: entry {e} must be < time {t}")
            time.append(t)
            status.append(int(s))
            entry.append(e)
            covs.append([_parse_float(row[c], i, c) for c in cov_cols])
    if not time:
        raise ValidationError(f"{path}: no data rows")
    return SurvivalFrame(
        time=np.array(time),
        status=np.array(status),
        entry=np.array(entry),
        covariates=np.array(covs).reshape(len(time), len(cov_cols)),
    )


def write_survival_csv(frame: SurvivalFrame, path) -> None:
    """Write a frame back to CSV; floats use shortest round-trip formatting."""
    has_entry = bool(np.any(frame.entry > 0))
    cov_cols = [f"w{j + 1}" for j in range(frame.d)]
    header = (["entry"] if has_entry else []) + ["time", "status"] + cov_cols
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(frame.n):
            row = []
            if has_entry:
                row.append(repr(float(frame.entry[i])))
            row.append(repr(float(frame.time[i])))
            row.append(int(frame.status[i]))
            row.extend(repr(float(v)) for v in frame.covariates[i])
            writer.writerow(row)


def parse_multistate_csv(path, censor_token: str = CENSORED) -> list[TransitionRecord]:
    """Read long-format multi-state records (id, from, to, t_start, t_stop).

    Rows are grouped by subject id and validated as trajectories: each row's
    source state must equal the previous row's destination, and times must
    chain strictly increasingly.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, header row required")
        for c in ("id", "from", "to", "t_start", "t_stop"):
            if c not in reader.fieldnames:
                raise SchemaError(f"{path}: missing mandatory column '{c}'")
        for i, row in enumerate(reader):
            to_raw = row["to"].strip()
            to_state = None if to_raw == censor_token else int(_parse_float(to_raw, i, "to"))
            records.append(
                TransitionRecord(
                    id=row["id"],
                    from_state=int(_parse_float(row["from"], i, "from")),
                    to_state=to_state,
                    t_start=_parse_float(row["t_start"], i, "t_start"),
                    t_stop=_parse_float(row["t_stop"], i, "t_stop"),
                )
            )
    validate_trajectories(records)
    return records


def write_multistate_csv(records, path, censor_token: str = CENSORED) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "from", "to", "t_start", "t_stop"])
        for r in records:
            to = censor_token if r.to_state is None else r.to_state
            writer.writerow([r.id, r.from_state, to, repr(float(r.t_start)), repr(float(r.t_stop))])


def _group_by_subject(records):
    groups: dict = {}
    for r in records:
        groups.setdefault(r.id, []).append(r)
    for rows in groups.values():
        rows.sort(key=lambda r: r.t_start)
    return groups


def validate_trajectories(records) -> None:
    """Check that per-subject rows chain into consistent trajectories."""
    for sid, rows in _group_by_subject(records).items():
        for a, b in zip(rows[:-1], rows[1:]):
            if a.to_state is None:
                raise ValidationError(f"subject {sid}: row after censoring at t={a.t_stop}")
            if b.from_state != a.to_state:
                raise ValidationError(
                    f"subject {sid}: state mismatch at t={a.t_stop} "
                    f"(arrived in {a.to_state}, next row starts in {b.from_state})"
                )
            if b.t_start != a.t_stop:
                raise ValidationError(
                    f"subject {sid}: time gap between t={a.t_stop} and t={b.t_start}"
                )


def split_transitions(records, transition: tuple[int, int]) -> SurvivalFrame:
    """Reduce trajectories to the survival frame of one direct transition.

    For a transition (l, m) every subject observed entering state l
    contributes one record: entry = entry time into l (0 for the initial
    state), time = exit or censoring time, status = 1 iff the observed exit
    went directly to m.
    """
    src, dst = transition
    if src == dst or src < 0 or dst < 0:
        raise ValidationError(f"transition ({src}, {dst}) not present in the state diagram")
    validate_trajectories(records)
    time, status, entry = [], [], []
    for sid, rows in _group_by_subject(records).items():
        for r in rows:
            if r.from_state == src:
                time.append(r.t_stop)
                status.append(1 if r.to_state == dst else 0)
                entry.append(r.t_start)
                break  # at most one sojourn in src per subject
    if not time:
        raise ValidationError(f"transition ({src}, {dst}): no subjects at risk")
    return SurvivalFrame(
        time=np.array(time),
        status=np.array(status),
        entry=np.array(entry),
        covariates=np.empty((len(time), 0)),
    )


def risk_profile(frame: SurvivalFrame, t: float, beta=None) -> RiskProfile:
    """Size and exp(beta'W)-weighted size of the risk set {L_i < t <= T_i}."""
    beta = np.asarray([] if beta is None else beta, dtype=float).reshape(-1)
    if beta.size != frame.d:
        raise ValidationError(f"beta has length {beta.size}, expected {frame.d}")
    at_risk = (frame.entry < t) & (t <= frame.time)
    if frame.d:
        weights = np.exp(frame.covariates @ beta)
        weighted = float(np.sum(weights[at_risk]))
    else:
        weighted = float(np.sum(at_risk))
    return RiskProfile(
        eval_time=float(t),
        at_risk_count=int(np.sum(at_risk)),
        weighted_risk=weighted,
    )
