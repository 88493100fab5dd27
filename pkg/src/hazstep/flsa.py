"""Exact 1-D fused lasso: fixed-lambda solver, solution path, interpolation.

The solver minimizes

    (1/m) * sum_j (y_j - a_j)^2  +  lambda * sum_{j=2}^m |a_j - a_{j-1}|

exactly, by dynamic programming over clipped piecewise-linear derivative
messages (linear time in m).  The solution path in lambda is computed by
agglomerative block merging: in one dimension, fused blocks only merge and
never split as lambda grows, so all merge events can be enumerated exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
import numpy as np

from .errors import ConvergenceError, ValidationError
from .stepfun import StepFunction, Window

__all__ = [
    "FusedLassoFit",
    "PathBreakpoint",
    "flsa_solve",
    "flsa_path",
    "interpolate",
    "reparametrized_check",
    "elementwise_bound_check",
    "kkt_residual",
]


@dataclass(frozen=True)
class FusedLassoFit:
    """Solution of the fused-lasso problem at a fixed penalty level.

    ``blocks`` lists maximal fused runs as (start, end, level) with 0-based
    inclusive indices; ``changepoints`` are the 0-based indices j such that
    ``alpha[j-1] != alpha[j]`` (i.e. the first index of each new block).
    """

    lam: float
    alpha: np.ndarray
    y: np.ndarray
    blocks: list = field(default_factory=list)
    changepoints: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def m(self) -> int:
        return self.alpha.size

    def residuals(self) -> np.ndarray:
        return self.y - self.alpha

    def objective(self) -> float:
        m = self.m
        fit = float(np.sum((self.y - self.alpha) ** 2)) / m
        tv = float(np.sum(np.abs(np.diff(self.alpha))))
        return fit + self.lam * tv


@dataclass(frozen=True)
class PathBreakpoint:
    """Change-point count valid on the lambda interval starting here."""

    lam: float
    changepoint_count: int


def _blocks_from_alpha(alpha: np.ndarray):
    """Maximal runs of exactly-equal adjacent values."""
    m = alpha.size
    starts = np.flatnonzero(np.diff(alpha) != 0) + 1
    bounds = np.concatenate(([0], starts, [m]))
    blocks = [
        (int(bounds[i]), int(bounds[i + 1] - 1), float(alpha[bounds[i]]))
        for i in range(bounds.size - 1)
    ]
    return blocks, starts


def _dp_fused(ys, gamma: float, snap: float = 0.0) -> np.ndarray:
    """Exact minimizer of (1/2) sum (y_j - b_j)^2 + gamma sum |b_j - b_{j+1}|.

    Dynamic programming with clipped derivative messages; the derivative of
    each message is piecewise linear and stored as a deque of knots carrying
    (slope, intercept) increments.  ``snap`` treats a backward pass that lands
    within that distance of a clip bound as unclipped, so that mathematically
    fused blocks come out exactly equal instead of a few ulps apart.
    """
    y = list(ys)
    n = len(y)
    if n == 1 or gamma == 0.0:
        return np.asarray(ys, dtype=float).copy()

    x = [0.0] * (2 * n)
    a = [0.0] * (2 * n)
    b = [0.0] * (2 * n)
    tm = [0.0] * (n - 1)
    tp = [0.0] * (n - 1)

    tm[0] = y[0] - gamma
    tp[0] = y[0] + gamma
    l = n - 1
    r = n
    x[l] = tm[0]
    x[r] = tp[0]
    a[l] = 1.0
    b[l] = -y[0] + gamma
    a[r] = -1.0
    b[r] = y[0] + gamma
    afirst = 1.0
    bfirst = -gamma - y[1]
    alast = -1.0
    blast = -gamma + y[1]

    for k in range(1, n - 1):
        # walk up from the left until the derivative exceeds -gamma
        alo = afirst
        blo = bfirst
        lo = l
        while lo <= r and alo * x[lo] + blo <= -gamma:
            alo += a[lo]
            blo += b[lo]
            lo += 1
        tm[k] = (-gamma - blo) / alo
        l = lo - 1
        x[l] = tm[k]

        # walk down from the right until the derivative drops below gamma
        ahi = alast
        bhi = blast
        hi = r
        while hi >= l and -(ahi * x[hi] + bhi) >= gamma:
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1
        tp[k] = (gamma + bhi) / (-ahi)
        r = hi + 1
        x[r] = tp[k]

        a[l] = alo
        b[l] = blo + gamma
        a[r] = ahi
        b[r] = bhi + gamma
        afirst = 1.0
        bfirst = -gamma - y[k + 1]
        alast = -1.0
        blast = -gamma + y[k + 1]

    # unconstrained minimum of the final message
    alo = afirst
    blo = bfirst
    lo = l
    while lo <= r and alo * x[lo] + blo <= 0:
        alo += a[lo]
        blo += b[lo]
        lo += 1
    beta = [0.0] * n
    beta[n - 1] = -blo / alo

    for k in range(n - 2, -1, -1):
        nxt = beta[k + 1]
        if nxt > tp[k] + snap:
            beta[k] = tp[k]
        elif nxt < tm[k] - snap:
            beta[k] = tm[k]
        else:
            beta[k] = nxt
    return np.array(beta)


def flsa_solve(y, lam: float, m: int | None = None) -> FusedLassoFit:
    """Exact global minimizer of the fused-lasso objective.

    Parameters
    ----------
    y : array-like, length m
        Observations (the increment responses).
    lam : float
        Nonnegative total-variation penalty level, on the scale of the
        (1/m)-normalized quadratic loss.
    m : int, optional
        Expected length of y, checked if given.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if m is not None and y.size != m:
        raise ValidationError(f"expected y of length {m}, got {y.size}")
    if y.size == 0:
        raise ValidationError("y must be nonempty")
    if np.any(~np.isfinite(y)):
        raise ValidationError("y contains non-finite values")
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")

    # (1/m) loss with penalty lam == (1/2) loss with gamma = m*lam/2
    gamma = 0.5 * y.size * lam
    # scale-relative so the solver stays exactly scaling-equivariant
    snap = 1e-10 * float(np.max(np.abs(y)))
    alpha = _dp_fused(y.tolist(), gamma, snap)
    blocks, starts = _blocks_from_alpha(alpha)
    return FusedLassoFit(lam=float(lam), alpha=alpha, y=y.copy(), blocks=blocks, changepoints=starts)


def kkt_residual(fit: FusedLassoFit) -> float:
    """Worst violation of the optimality conditions, in gradient units.

    Summing the stationarity equations gives the implied boundary
    subgradients s_j = (2/(m*lam)) * sum_{i<j} (alpha_i - y_i); the solution
    is optimal iff every s_j lies in [-1, 1], s_j equals the jump sign at
    every change point, and the residuals sum to zero.
    """
    alpha, y, lam, m = fit.alpha, fit.y, fit.lam, fit.m
    resid_sum = np.cumsum(alpha - y)
    total = abs(resid_sum[-1]) * 2.0 / m
    if lam == 0:
        return float(np.max(np.abs(alpha - y)) * 2.0 / m)
    worst = total
    if m > 1:
        s = (2.0 / (m * lam)) * resid_sum[:-1]  # s_{j+1}, 0-based j = 0..m-2
        worst = max(worst, (float(np.max(np.abs(s))) - 1.0) * lam)
        jumps = np.diff(alpha)
        at_jump = jumps != 0
        if np.any(at_jump):
            worst = max(
                worst,
                float(np.max(np.abs(s[at_jump] - np.sign(jumps[at_jump])))) * lam,
            )
    return float(max(worst, 0.0))


def flsa_path(y) -> list[PathBreakpoint]:
    """All lambdas at which fused blocks merge, with change-point counts.

    Returns breakpoints with strictly increasing lambda, starting at 0; the
    count attached to a breakpoint is the change-point count of the exact
    solution on [this breakpoint, next breakpoint).
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise ValidationError("y must be nonempty")
    if np.any(~np.isfinite(y)):
        raise ValidationError("y contains non-finite values")
    m = y.size

    blocks, _ = _blocks_from_alpha(y)
    nb = len(blocks)
    if nb == 1:
        return [PathBreakpoint(0.0, 0)]

    # Block state.  Values evolve piecewise linearly in lambda and are tracked
    # lazily as value(lam) = base[i] + slope[i] * (lam - base_lam[i]).  The
    # sign of each inter-block gap is bookkept explicitly: a subgradient
    # argument shows adjacent blocks whose values meet must fuse and can never
    # cross or separate, so signs are fixed at initialization and only ever
    # deleted when a boundary fuses; they are never re-derived from (noisy)
    # float values.
    size = [e - s + 1 for s, e, _ in blocks]
    base = [lv for _, _, lv in blocks]
    base_lam = [0.0] * nb
    prev = list(range(-1, nb - 1))
    nxt = list(range(1, nb + 1))
    nxt[-1] = -1
    # sig[i]: sign of val(nxt[i]) - val(i), keyed by the left block
    sig = [0] * nb
    for i in range(nb - 1):
        sig[i] = 1 if base[i + 1] > base[i] else -1
    alive = [True] * nb
    version = [0] * nb

    def slope_of(i):
        sl = 0 if prev[i] == -1 else sig[prev[i]]
        sr = 0 if nxt[i] == -1 else sig[i]
        return (m / (2.0 * size[i])) * (sr - sl)

    slope = [slope_of(i) for i in range(nb)]

    def val(i, lam):
        return base[i] + slope[i] * (lam - base_lam[i])

    heap: list = []
    # mathematically simultaneous merges come out of the float bookkeeping a
    # few ulps apart; gaps below this (scale-relative) tolerance count as
    # touching
    vtol = 1e-9 * float(np.max(np.abs(y)))

    def push_merge(i, lam):
        # arm the merge event of block i with its right neighbour: the value
        # gap is linear in lambda and closes after t = dv/ds
        j = nxt[i]
        if j == -1:
            return
        dv = val(j, lam) - val(i, lam)
        ds = slope[i] - slope[j]
        if abs(dv) <= vtol:
            heapq.heappush(heap, (lam, i, j, version[i], version[j]))
            return
        if ds == 0.0:
            return
        t = dv / ds
        if t <= 0.0:
            return  # diverging pair; it can only merge after another event
        heapq.heappush(heap, (lam + t, i, j, version[i], version[j]))

    for i in range(nb):
        push_merge(i, 0.0)

    out = [PathBreakpoint(0.0, nb - 1)]
    count = nb - 1
    cur = 0.0
    while heap:
        lam_star, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj:
            continue
        cur = max(lam_star, cur)

        # merge j into i at lambda = cur
        merged = (size[i] * val(i, cur) + size[j] * val(j, cur)) / (size[i] + size[j])
        size[i] += size[j]
        base[i] = merged
        base_lam[i] = cur
        sig[i] = sig[j]  # i's right boundary is now j's old right boundary
        alive[j] = False
        version[j] += 1
        nxt[i] = nxt[j]
        if nxt[j] != -1:
            prev[nxt[j]] = i

        # outer boundary signs are untouched by a merge, so only the merged
        # block's slope changes; refresh it and re-arm its two candidate events
        version[i] += 1
        slope[i] = slope_of(i)
        push_merge(i, cur)
        if prev[i] != -1:
            push_merge(prev[i], cur)

        count -= 1
        # merges at (numerically) the same lambda collapse to one breakpoint
        if cur <= out[-1].lam * (1.0 + 1e-9):
            out[-1] = PathBreakpoint(out[-1].lam, count)
        else:
            out.append(PathBreakpoint(cur, count))
    return out


def interpolate(fit: FusedLassoFit, window: Window) -> StepFunction:
    """Constant interpolation of the solution vector onto the window.

    The j-th coefficient (1-based) covers [t_j, t_{j+1}) with
    t_j = tau_min + j*(tau_max - tau_min)/m, the first coefficient also
    covering [t_0, t_1); adjacent equal levels are merged, so the breaks are
    exactly the change points mapped to times tau_min + j*length/m.  A block
    consisting of the last coefficient alone would occupy the single point
    t_m; it is merged into the preceding piece so the result is a proper
    step function on the window.
    """
    m = fit.m
    step = window.length / m
    # a 0-based change point i (first index of a new block) is the 1-based
    # coefficient j = i + 1, hence the break sits at tau_min + (i+1)*step
    changes = fit.changepoints
    levels = np.array([lv for _, _, lv in fit.blocks])
    if changes.size and changes[-1] == m - 1:
        changes = changes[:-1]
        levels = levels[:-1]
    breaks = window.tau_min + (changes + 1) * step
    return StepFunction(window, breaks, levels)


def reparametrized_check(y, lam: float, tol: float = 1e-13, max_sweeps: int = 100_000) -> np.ndarray:
    """Solve the fused lasso through its standard-lasso reparametrization.

    Writing a = X theta with X lower-triangular of ones, the problem becomes
    a lasso in the centered design for theta_2..theta_m with unpenalized
    intercept theta_1; this routine solves that lasso by cyclic coordinate
    descent and returns cumsum(theta).  Used as an independent cross-check of
    :func:`flsa_solve`.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    m = y.size
    if m == 0:
        raise ValidationError("y must be nonempty")
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    if lam == 0 or m == 1:
        return y.copy()  # the unpenalized problem interpolates the data

    ybar = y.mean()
    yc = y - ybar
    # centered design columns X^c_j = 1(i >= j) - (m - j + 1)/m for j = 2..m
    cols = np.arange(2, m + 1)
    xbar = (m - cols + 1) / m
    X = (np.arange(1, m + 1)[:, None] >= cols[None, :]).astype(float) - xbar[None, :]
    norm2 = np.sum(X * X, axis=0)
    thresh = 0.5 * m * lam

    theta = np.diff(y)  # warm start at the unpenalized solution
    r = yc - X @ theta
    scale = max(1.0, float(np.max(np.abs(y))))
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(m - 1):
            old = theta[j]
            z = X[:, j] @ r + norm2[j] * old
            new = np.sign(z) * max(abs(z) - thresh, 0.0) / norm2[j]
            if new != old:
                r += X[:, j] * (old - new)
                theta[j] = new
                delta = max(delta, abs(new - old))
        if delta <= tol * scale:
            break
    else:
        raise ConvergenceError("coordinate descent did not converge")

    theta1 = ybar - xbar @ theta
    return theta1 + np.concatenate(([0.0], np.cumsum(theta)))


def _jump_geometry(truth: np.ndarray):
    """d_j and r_{k(j)} for the discretized step signal (see the bound)."""
    m = truth.size
    jump_idx = np.flatnonzero(np.diff(truth) != 0) + 2  # 1-based jump indices n_k
    bounds = np.concatenate(([1], jump_idx, [m + 1]))
    j = np.arange(1, m + 1)
    seg = np.searchsorted(bounds, j, side="right") - 1
    lo = bounds[seg]
    hi = bounds[seg + 1]
    d = np.minimum(j + 1 - lo, hi - j).astype(float)
    r = (hi - lo).astype(float)
    return d, r


def elementwise_bound_check(
    fit: FusedLassoFit, truth, m: int | None = None, lam: float | None = None
) -> bool:
    """Deterministic elementwise error bound for the exact fused lasso.

    With u = y - truth and kappa the maximal normalized partial sum
    max_{k<=l} |sum_{j=k}^{l} u_j| / sqrt(l-k+1), every coordinate must obey

        |alpha_j - truth_j| <= max{ kappa/sqrt(d_j),
                                    kappa^2/(4*m*lam),
                                    2*m*lam/r_{k(j)} + 2*kappa/sqrt(r_{k(j)}) }

    where d_j is the distance of j to the nearest jump index of the truth
    and r_{k(j)} the length of the surrounding constant segment.  A False
    return certifies that the fitted vector is not the exact minimizer.
    """
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if truth.size != fit.m:
        raise ValidationError("truth grid does not match the fitted grid")
    if m is None:
        m = fit.m
    elif m != fit.m:
        raise ValidationError("m does not match the fitted grid")
    if lam is None:
        lam = fit.lam
    if lam <= 0:
        raise ValidationError("the bound requires lambda > 0")

    u = fit.y - truth
    prefix = np.concatenate(([0.0], np.cumsum(u)))
    diff = prefix[None, :] - prefix[:, None]  # diff[k, l] = sum_{j=k+1}^{l} u_j
    lengths = np.arange(m + 1)[None, :] - np.arange(m + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.abs(diff) / np.sqrt(np.where(lengths > 0, lengths, 1))
    kappa = float(np.max(np.where(lengths > 0, ratios, 0.0)))

    d, r = _jump_geometry(truth)
    rhs = np.maximum(
        kappa / np.sqrt(d),
        np.maximum(kappa**2 / (4.0 * m * lam), 2.0 * m * lam / r + 2.0 * kappa / np.sqrt(r)),
    )
    lhs = np.abs(fit.alpha - truth)
    slack = 1e-9 * max(1.0, float(np.max(np.abs(fit.y))))
    return bool(np.all(lhs <= rhs + slack))
