"""Illness-death model: per-transition fits and closed-form survival curves.

The three-state model without recovery (initial 0, intermediate 1, absorbing
2) is fitted one transition at a time by reducing trajectories to survival
frames; the 1->2 frame uses the state-1 entry time as left truncation.
Occupation probabilities follow the forward differential equations, which
are solved exactly segment by segment since all intensities are piecewise
constant.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .data import SurvivalFrame, TransitionRecord, split_transitions
from .errors import ValidationError
from .pipeline import FitConfig, HazardFit, fit_hazard
from .stepfun import StepFunction

__all__ = [
    "IllnessDeathModel",
    "SurvivalCurve",
    "TRANSITIONS",
    "fit_illness_death",
    "survival_curves",
    "state_probabilities",
    "kaplan_meier",
]

TRANSITIONS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class IllnessDeathModel:
    """Transition hazards of the illness-death model without recovery.

    Each hazard is a step function on its own fitting window, extended by
    constant continuation outside it (the step-function evaluation already
    does that), so the model is defined on all of [0, inf).
    """

    a01: StepFunction
    a02: StepFunction
    a12: StepFunction

    def __post_init__(self):
        for name in ("a01", "a02", "a12"):
            if not getattr(self, name).is_nonnegative():
                raise ValidationError(f"hazard {name} has negative levels")

    def to_dict(self) -> dict:
        return {"a01": self.a01.to_dict(), "a02": self.a02.to_dict(), "a12": self.a12.to_dict()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "IllnessDeathModel":
        return cls(
            a01=StepFunction.from_dict(d["a01"]),
            a02=StepFunction.from_dict(d["a02"]),
            a12=StepFunction.from_dict(d["a12"]),
        )


@dataclass(frozen=True)
class SurvivalCurve:
    grid: np.ndarray
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SurvivalCurve":
        return cls(np.asarray(d["grid"], dtype=float), np.asarray(d["values"], dtype=float))

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if grid.size != values.size:
            raise ValidationError("grid and values differ in length")
        if grid.size and not np.all(np.diff(grid) > 0):
            raise ValidationError("grid must be strictly increasing")
        if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
            raise ValidationError("survival values must lie in [0, 1]")
        if np.any(np.diff(values) > 1e-12):
            raise ValidationError("survival values must be nonincreasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def fit_illness_death_detailed(records, config=None) -> dict[tuple, HazardFit]:
    """Per-transition hazard fits, keyed by transition tuple.

    ``config`` may be a single :class:`FitConfig` applied to every
    transition or a mapping keyed by transition tuples.  The 1->2 frame
    carries entry times, so its default window starts at the 0.025 quantile
    of its uncensored times.
    """
    out = {}
    for tr in TRANSITIONS:
        frame = split_transitions(records, tr)
        if not np.any(frame.status == 1):
            raise ValidationError(f"transition {tr}: zero events")
        if isinstance(config, dict):
            cfg = config.get(tr, FitConfig())
        else:
            cfg = config or FitConfig()
        # sojourns in the initial state all start at 0: no real truncation
        if tr[0] == 0:
            frame = SurvivalFrame(
                time=frame.time,
                status=frame.status,
                entry=np.zeros(frame.n),
                covariates=frame.covariates,
            )
        out[tr] = fit_hazard(frame, cfg)
    return out


def fit_illness_death(records: list[TransitionRecord], config=None) -> IllnessDeathModel:
    """Fit all three transition hazards from long-format records."""
    fits = fit_illness_death_detailed(records, config)
    return IllnessDeathModel(
        a01=fits[(0, 1)].hazard, a02=fits[(0, 2)].hazard, a12=fits[(1, 2)].hazard
    )


def _phi(delta: float, rate_diff: float) -> float:
    """int_0^delta exp(-rate_diff * v) dv with the removable singularity."""
    if abs(rate_diff) < 1e-10:
        return delta
    return -np.expm1(-rate_diff * delta) / rate_diff


def state_probabilities(model: IllnessDeathModel, grid) -> tuple[np.ndarray, np.ndarray]:
    """Occupation probabilities P00(0, t) and P01(0, t) on a time grid.

    Solved exactly on the common refinement of all hazard breakpoints:
    within a segment all intensities are constant, so P00 decays
    exponentially and P01 picks up a piecewise-exponential convolution term.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise ValidationError("evaluation grid must be strictly increasing")
    if grid.size and grid[0] < 0:
        raise ValidationError("evaluation times must be >= 0")

    knots = np.unique(
        np.concatenate((model.a01.breaks, model.a02.breaks, model.a12.breaks, grid, [0.0]))
    )
    knots = knots[knots >= 0]
    p00 = {0.0: 1.0}
    p01 = {0.0: 0.0}
    cur00, cur01 = 1.0, 0.0
    prev = 0.0
    for t in knots[knots > 0]:
        h01 = float(model.a01(prev))
        h02 = float(model.a02(prev))
        h12 = float(model.a12(prev))
        delta = t - prev
        exit0 = h01 + h02
        decay12 = np.exp(-h12 * delta)
        new01 = cur01 * decay12 + h01 * cur00 * decay12 * _phi(delta, exit0 - h12)
        new00 = cur00 * np.exp(-exit0 * delta)
        cur00, cur01, prev = new00, new01, t
        p00[t] = cur00
        p01[t] = cur01
    out00 = np.array([p00[t] for t in grid])
    out01 = np.array([p01[t] for t in grid])
    return out00, out01


def survival_curves(model: IllnessDeathModel, grid) -> tuple[SurvivalCurve, SurvivalCurve]:
    """Survival functions of the state-0 sojourn and of overall absorption.

    The first curve is P00(0, t); the second is P00(0, t) + P01(0, t), the
    probability of not yet being absorbed in state 2.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0 or grid[0] != 0.0:
        grid = np.concatenate(([0.0], grid[grid > 0]))
    p00, p01 = state_probabilities(model, grid)
    return SurvivalCurve(grid, p00), SurvivalCurve(grid, p00 + p01)


def curves_to_csv(pfs: SurvivalCurve, os_: SurvivalCurve, path) -> None:
    if pfs.grid.size != os_.grid.size or np.any(pfs.grid != os_.grid):
        raise ValidationError("curves must share a grid")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "S_PFS", "S_OS"])
        for t, a, b in zip(pfs.grid, pfs.values, os_.values):
            writer.writerow([repr(float(t)), repr(float(a)), repr(float(b))])


def curves_from_csv(path) -> tuple[SurvivalCurve, SurvivalCurve]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    return SurvivalCurve(rows[:, 0], rows[:, 1]), SurvivalCurve(rows[:, 0], rows[:, 2])


def kaplan_meier(frame: SurvivalFrame) -> SurvivalCurve:
    """Product-limit survival estimator with truncation-adjusted risk sets."""
    if frame.n == 0:
        raise ValidationError("empty frame")
    events = frame.status == 1
    ev_times, inverse = np.unique(frame.time[events], return_inverse=True)
    if ev_times.size == 0:
        return SurvivalCurve(np.array([0.0]), np.array([1.0]))
    d_k = np.bincount(inverse, minlength=ev_times.size).astype(float)
    n_at_risk = np.array(
        [np.sum((frame.entry < t) & (t <= frame.time)) for t in ev_times], dtype=float
    )
    factors = 1.0 - d_k / n_at_risk
    surv = np.cumprod(factors)
    return SurvivalCurve(
        np.concatenate(([0.0], ev_times)), np.concatenate(([1.0], surv))
    )


def km_to_csv(curve: SurvivalCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "survival"])
        for t, v in zip(curve.grid, curve.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def km_from_csv(path) -> SurvivalCurve:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    return SurvivalCurve(rows[:, 0], rows[:, 1])
