"""Survival-curve queries and the linear tail extension.

Predicted curves routinely stop at a probability above zero, which leaves
medians and means undefined.  The fix used throughout this package: draw
the line through (0, 1) and the last knot (t_max, S(t_max)) and follow it
down to zero.  Flat curves that never leave 1 get their zero time replaced
by the training Kaplan-Meier zero time, and medians are capped by the same
value.  Values at or before t_max are never altered, so orderings between
curves at observed times are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SurvivalCurve

__all__ = [
    "ExtendedCurve",
    "survival_at",
    "extend_linear",
    "median_survival",
    "mean_survival",
    "average_curves",
    "integrate_curve",
]

FLAT_TOLERANCE = 1e-10  # S(t_max) > 1 - this counts as "never left 1"


@dataclass(frozen=True)
class ExtendedCurve:
    """A survival curve plus the linear tail that carries it to zero.

    ``zero_time`` is where the extension reaches probability 0 and
    ``fallback_applied`` marks curves whose own line never crosses zero
    (flat at 1), where the training-KM zero time was substituted.
    """

    base: SurvivalCurve
    zero_time: float
    fallback_applied: bool = False

    @property
    def t_max(self) -> float:
        return float(self.base.times[-1])


def _eval_base(curve: SurvivalCurve, t: np.ndarray) -> np.ndarray:
    times, probs = curve.times, curve.probs
    if curve.interp == "step":
        idx = np.searchsorted(times, t, side="right") - 1
        out = np.where(idx >= 0, probs[np.clip(idx, 0, len(probs) - 1)], 1.0)
        return out
    # linear: anchor at (0, 1) unless the first knot sits at t = 0
    if times[0] > 0:
        xp = np.concatenate(([0.0], times))
        fp = np.concatenate(([1.0], probs))
    else:
        xp, fp = times, probs
    return np.interp(t, xp, fp)


def survival_at(curve, t):
    """Evaluate a SurvivalCurve or ExtendedCurve at time(s) t >= 0.

    Step curves are right-continuous; linear curves interpolate between
    knots.  Plain curves hold their last probability past the final knot;
    extended curves descend along the extension line and are 0 from
    ``zero_time`` on.  Accepts a scalar or an array, returns the same shape.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if np.any(t_arr < 0):
        raise ValueError("survival curves are only defined for t >= 0")

    if isinstance(curve, ExtendedCurve):
        base = curve.base
        out = _eval_base(base, t_arr)
        t_max = base.times[-1]
        p_last = base.probs[-1]
        after = t_arr > t_max
        if np.any(after):
            width = curve.zero_time - t_max
            if width <= 0:
                tail = np.zeros(after.sum())
            else:
                tail = p_last * (curve.zero_time - t_arr[after]) / width
            out[after] = np.clip(tail, 0.0, None)
    else:
        out = _eval_base(curve, t_arr)

    return float(out[0]) if scalar else out


def extend_linear(c: SurvivalCurve, t0_km: float | None = None) -> ExtendedCurve:
    """Extend a curve to zero along the line through (0, 1) and its last knot.

    If the curve already reaches 0 the extension is the identity.  If it is
    flat at 1 (within machine precision) the line never crosses zero, so
    ``t0_km``, the zero time of the extended training Kaplan-Meier curve,
    is substituted and ``fallback_applied`` is set; a missing or
    non-positive ``t0_km`` is an error in that case.
    """
    p_last = float(c.probs[-1])
    t_max = float(c.times[-1])
    if p_last <= 0.0:
        first_zero = float(c.times[np.argmax(c.probs <= 0.0)])
        return ExtendedCurve(c, first_zero, False)
    if p_last > 1.0 - FLAT_TOLERANCE:
        if t0_km is None or not t0_km > 0:
            raise ValueError(
                "curve is flat at probability 1; a positive training-KM zero "
                f"time is required to extend it (got {t0_km!r})"
            )
        return ExtendedCurve(c, max(float(t0_km), t_max), True)
    return ExtendedCurve(c, t_max / (1.0 - p_last), False)


def median_survival(c: ExtendedCurve, t0_km: float) -> float:
    """Smallest t with S(t) <= 0.5, capped at the training-KM zero time.

    Step segments use the step convention (first knot at or below 0.5);
    linear segments and the extension invert the line exactly.
    """
    base = c.base
    below = base.probs <= 0.5
    if np.any(below):
        k = int(np.argmax(below))
        if base.interp == "step":
            median = float(base.times[k])
        else:
            if k > 0:
                t_prev, p_prev = float(base.times[k - 1]), float(base.probs[k - 1])
            elif base.times[0] > 0:
                t_prev, p_prev = 0.0, 1.0
            else:
                t_prev, p_prev = float(base.times[0]), float(base.probs[0])
            p_k, t_k = float(base.probs[k]), float(base.times[k])
            if p_prev <= 0.5:
                median = t_prev
            else:
                median = t_prev + (p_prev - 0.5) * (t_k - t_prev) / (p_prev - p_k)
    else:
        # crossing happens on the extension line
        p_last = float(base.probs[-1])
        t_max = float(base.times[-1])
        width = c.zero_time - t_max
        median = c.zero_time - 0.5 * width / p_last if width > 0 else t_max
    return min(median, float(t0_km))


def _segment_points(c: ExtendedCurve) -> np.ndarray:
    base = c.base
    pts = [0.0] if base.times[0] > 0 else []
    pts.extend(base.times.tolist())
    if c.zero_time > base.times[-1]:
        pts.append(c.zero_time)
    return np.asarray(pts)


def integrate_curve(c: ExtendedCurve, a: float, b: float) -> float:
    """Exact integral of the extended survival function over [a, b].

    Piecewise exact: between breakpoints the function is constant (step
    base) or linear, so the midpoint value times the width is the integral
    of each elementary piece.
    """
    if b <= a:
        return 0.0
    a = max(a, 0.0)
    pts = _segment_points(c)
    cuts = np.unique(np.concatenate((pts[(pts > a) & (pts < b)], [a, b])))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    widths = np.diff(cuts)
    values = survival_at(c, mids)
    return float(np.sum(values * widths))


def mean_survival(c: ExtendedCurve) -> float:
    """Expected survival time: the area under the extended curve."""
    return integrate_curve(c, 0.0, c.zero_time)


def average_curves(cs) -> SurvivalCurve:
    """Point-wise mean of several curves on the union of their knot times."""
    cs = list(cs)
    if not cs:
        raise ValueError("cannot average an empty set of curves")
    union = np.unique(np.concatenate([c.times for c in cs]))
    stacked = np.vstack([survival_at(c, union) for c in cs])
    mean = stacked.mean(axis=0)
    interp = "step" if all(c.interp == "step" for c in cs) else "linear"
    return SurvivalCurve(union, mean, interp)
