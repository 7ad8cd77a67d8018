"""Calibration metrics: Hosmer-Lemeshow and D'Agostino-Nam single-time
tests, the censoring-weighted Brier score and its integral, and the
distributional calibration (D-calibration) histogram and test.

Brier scores use the event orientation throughout: a death by t* is scored
against a survival-probability target of 0 and a survivor against 1, with
inverse-probability-of-censoring weights 1/G(t_i) and 1/G(t*) from the
censoring Kaplan-Meier curve fit on training data.  D-calibration places
each death at its predicted survival probability S(d | x) and spreads each
censored instance over the bins below S(c | x) by conditional probability,
so every instance contributes total weight 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SurvivalDataset
from .curves import ExtendedCurve, survival_at
from .km import KMCurve, fit_km_arrays, km_at
from .stats import chi2_sf

__all__ = [
    "TestResult",
    "CalibrationBins",
    "DCalHistogram",
    "calibration_table",
    "one_calibration_hl",
    "one_calibration_dn",
    "brier_uncensored",
    "brier_censored",
    "integrated_brier",
    "dcal_histogram",
    "dcal_histogram_from_probs",
    "dcal_test",
]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float


@dataclass(frozen=True)
class CalibrationBins:
    """Per-bin sizes, mean predicted event probabilities, and observed
    deaths (fractional under the D'Agostino-Nam within-bin KM)."""

    n: np.ndarray
    mean_predicted: np.ndarray
    observed: np.ndarray
    members: tuple  # index arrays into the input order, one per bin


def _bin_memberships(probs: np.ndarray, b: int) -> tuple:
    n = probs.size
    if b < 2:
        raise ValueError(f"need at least 2 bins, got {b}")
    if n < b:
        raise ValueError(f"cannot split {n} instances into {b} bins")
    if np.unique(probs).size < 2:
        raise ValueError(
            "all predicted probabilities are identical; instances cannot be "
            "partitioned into calibration bins"
        )
    order = np.argsort(-probs, kind="stable")  # largest predicted survival first
    base, extra = divmod(n, b)
    sizes = [base + 1 if j < extra else base for j in range(b)]
    members, start = [], 0
    for size in sizes:
        members.append(order[start:start + size])
        start += size
    return tuple(members)


def calibration_table(v: SurvivalDataset, probs_at_tstar, tstar: float, b: int,
                      censoring: str = "reject") -> CalibrationBins:
    """Group instances into b bins by predicted survival at t* and tabulate
    observed deaths against mean predicted event probability.

    ``censoring="reject"`` (the Hosmer-Lemeshow setting) demands fully
    uncensored data; ``censoring="km"`` (D'Agostino-Nam) replaces each
    bin's observed deaths with n_j * (1 - KM_j(t*)) from the within-bin
    Kaplan-Meier curve.
    """
    probs = np.asarray(probs_at_tstar, dtype=float)
    if probs.size != len(v):
        raise ValueError(f"{probs.size} probabilities for {len(v)} instances")
    times, events = v.times, v.events
    if censoring == "reject" and not events.all():
        raise ValueError("Hosmer-Lemeshow needs fully uncensored data; use the "
                         "D'Agostino-Nam variant instead")

    members = _bin_memberships(probs, b)
    n = np.array([m.size for m in members], dtype=float)
    pbar = np.array([np.mean(1.0 - probs[m]) for m in members])

    observed = np.empty(len(members))
    for j, m in enumerate(members):
        if censoring == "reject":
            observed[j] = np.sum(times[m] <= tstar)
        else:
            mask_t, mask_e = times[m], events[m]
            if not mask_e.any() and (mask_t < tstar).all():
                raise ValueError(
                    f"bin {j} contains only instances censored before t*={tstar}; "
                    "its within-bin Kaplan-Meier curve cannot be evaluated there"
                )
            km_j = fit_km_arrays(mask_t, mask_e)
            observed[j] = m.size * (1.0 - km_at(km_j, tstar))
    return CalibrationBins(n, pbar, observed, members)


def _hl_statistic(table: CalibrationBins) -> float:
    variance = table.n * table.mean_predicted * (1.0 - table.mean_predicted)
    if np.any(variance <= 0):
        raise ValueError(
            "a calibration bin has degenerate variance (mean predicted event "
            "probability of exactly 0 or 1)"
        )
    expected = table.n * table.mean_predicted
    return float(np.sum((table.observed - expected) ** 2 / variance))


def one_calibration_hl(v_u: SurvivalDataset, probs_at_tstar, tstar: float,
                       b: int = 10) -> TestResult:
    """Hosmer-Lemeshow test of the predicted survival probabilities at t*
    on uncensored data; the statistic follows chi-square with B-2 degrees
    of freedom under calibration."""
    table = calibration_table(v_u, probs_at_tstar, tstar, b, censoring="reject")
    statistic = _hl_statistic(table)
    dof = b - 2
    return TestResult(statistic, dof, chi2_sf(statistic, dof))


def one_calibration_dn(v: SurvivalDataset, probs_at_tstar, tstar: float,
                       b: int = 10) -> TestResult:
    """D'Agostino-Nam translation of the Hosmer-Lemeshow test: within-bin
    Kaplan-Meier supplies the expected death counts so censored instances
    participate; chi-square with B-1 degrees of freedom."""
    table = calibration_table(v, probs_at_tstar, tstar, b, censoring="km")
    statistic = _hl_statistic(table)
    dof = b - 1
    return TestResult(statistic, dof, chi2_sf(statistic, dof))


def brier_uncensored(v_u: SurvivalDataset, probs_at_tstar, tstar: float) -> float:
    """Brier score at t* on uncensored data: deaths by t* are scored
    against survival 0, survivors past t* against 1 (the censored formula
    with G identically 1)."""
    probs = np.asarray(probs_at_tstar, dtype=float)
    if probs.size != len(v_u):
        raise ValueError(f"{probs.size} probabilities for {len(v_u)} instances")
    if not v_u.events.all():
        raise ValueError("uncensored Brier needs fully uncensored data")
    died = v_u.times <= tstar
    per = np.where(died, probs**2, (1.0 - probs) ** 2)
    return float(np.mean(per))


def _g_first_zero(g_hat: KMCurve) -> float:
    curve = g_hat.curve
    zeros = curve.probs <= 0.0
    return float(curve.times[np.argmax(zeros)]) if zeros.any() else np.inf


def brier_censored(v: SurvivalDataset, curves, tstar: float, g_hat: KMCurve) -> float:
    """Inverse-probability-of-censoring-weighted Brier score at t*.

    Deaths by t* weigh in at 1/G(t_i), survivors past t* at 1/G(t*);
    instances censored before t* contribute 0 directly.  Raises when a
    required G evaluation is 0 (the score is only defined while the
    censoring curve is positive; see `integrated_brier` for the truncated
    integral form).
    """
    curves = list(curves)
    if len(curves) != len(v):
        raise ValueError(f"{len(curves)} curves for {len(v)} instances")
    times, events = v.times, v.events
    probs = np.array([survival_at(c, tstar) for c in curves])

    death_terms = (times <= tstar) & events
    alive_terms = times > tstar
    total = 0.0
    if alive_terms.any():
        g_star = km_at(g_hat, tstar)
        if g_star <= 0:
            raise ValueError(
                f"censoring curve G is 0 at t*={tstar}; the IPCW Brier score "
                "is undefined there (truncate at the last time with G > 0)"
            )
        total += np.sum((1.0 - probs[alive_terms]) ** 2) / g_star
    if death_terms.any():
        g_at_death = km_at(g_hat, times[death_terms])
        if np.any(g_at_death <= 0):
            raise ValueError(
                "censoring curve G is 0 at an observed death time; the IPCW "
                "Brier score is undefined there"
            )
        total += np.sum(probs[death_terms] ** 2 / g_at_death)
    return float(total / len(v))


def _piecewise_quad(curve, cuts: np.ndarray, against: float) -> np.ndarray:
    # Per-piece integrals of (against - S(t))**2 by the open 3-point
    # Newton-Cotes rule: exact for the polynomial pieces, and endpoint-free
    # so step discontinuities at piece boundaries cannot leak in.
    a, b = cuts[:-1], cuts[1:]
    widths = b - a
    f1 = (against - survival_at(curve, a + 0.25 * widths)) ** 2
    f2 = (against - survival_at(curve, a + 0.50 * widths)) ** 2
    f3 = (against - survival_at(curve, a + 0.75 * widths)) ** 2
    return widths / 3.0 * (2.0 * f1 - f2 + 2.0 * f3)


def _curve_breakpoints(curve) -> np.ndarray:
    if isinstance(curve, ExtendedCurve):
        return np.concatenate((curve.base.times, [curve.zero_time]))
    return np.asarray(curve.times)


def integrated_brier(v: SurvivalDataset, curves, tau: float, g_hat: KMCurve) -> float:
    """Average of the censored Brier score over [0, tau]:
    (1/tau) * integral of BS_t dt, computed exactly piece by piece.

    Between breakpoints (observed times, curve knots, censoring-curve
    knots) the integrand is polynomial, so a 3-point open rule per piece
    integrates it exactly.  If the censoring curve hits 0 before tau the
    integral and its normalization are truncated at that time.
    """
    if not tau > 0:
        raise ValueError(f"horizon tau must be positive, got {tau}")
    curves = list(curves)
    if len(curves) != len(v):
        raise ValueError(f"{len(curves)} curves for {len(v)} instances")
    times, events = v.times, v.events
    tau_eff = min(tau, _g_first_zero(g_hat))

    g_knots = g_hat.curve.times
    total = 0.0
    for t_i, e_i, curve in zip(times, events, curves):
        own = _curve_breakpoints(curve)

        # alive region [0, min(t_i, tau_eff)): weight 1/G(t), target 1
        hi = min(t_i, tau_eff)
        if hi > 0:
            cuts = np.unique(np.concatenate((
                [0.0, hi],
                own[(own > 0) & (own < hi)],
                g_knots[(g_knots > 0) & (g_knots < hi)],
            )))
            pieces = _piecewise_quad(curve, cuts, against=1.0)
            g_mid = km_at(g_hat, 0.5 * (cuts[:-1] + cuts[1:]))
            usable = g_mid > 0  # G can only vanish at the truncation edge
            total += float(np.sum(pieces[usable] / g_mid[usable]))

        # death region [t_i, tau_eff]: weight 1/G(t_i), target 0
        if e_i and t_i < tau_eff:
            g_i = km_at(g_hat, t_i)
            if g_i <= 0:
                raise ValueError(
                    "censoring curve G is 0 at an observed death inside the "
                    "integration window"
                )
            cuts = np.unique(np.concatenate((
                [t_i, tau_eff],
                own[(own > t_i) & (own < tau_eff)],
            )))
            total += float(np.sum(_piecewise_quad(curve, cuts, against=0.0))) / g_i

    return float(total / (len(v) * tau_eff))


@dataclass(frozen=True)
class DCalHistogram:
    """Fractional bin counts of predicted survival probabilities at event
    times; censored instances are blurred so each contributes weight 1."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_total: float


def dcal_histogram_from_probs(probs_at_event, events, b: int = 10) -> DCalHistogram:
    """Build the D-calibration histogram from precomputed S(t_i | x_i).

    A death adds 1 to the bin containing its probability (bins are
    [k/B, (k+1)/B), top bin closed).  A censored instance with probability
    s spreads conditional mass: (s - lower_edge)/s to s's own bin and
    (1/B)/s to every bin below it; s = 0 degenerates to weight 1 in the
    lowest bin.
    """
    probs = np.asarray(probs_at_event, dtype=float)
    events = np.asarray(events, dtype=bool)
    if probs.shape != events.shape:
        raise ValueError("probabilities and event flags must align")
    if b < 2:
        raise ValueError(f"need at least 2 bins, got {b}")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("survival probabilities must lie in [0, 1]")

    edges = np.arange(b + 1) / b
    counts = np.zeros(b)
    bin_of = np.clip(np.searchsorted(edges, probs, side="right") - 1, 0, b - 1)
    for s, event, k in zip(probs, events, bin_of):
        if event:
            counts[k] += 1.0
        elif s <= edges[1]:
            counts[0] += 1.0  # covers the s = 0 limit as well
        else:
            counts[k] += (s - edges[k]) / s
            counts[:k] += (1.0 / b) / s
    return DCalHistogram(edges, counts, float(probs.size))


def dcal_histogram(v: SurvivalDataset, curves, b: int = 10) -> DCalHistogram:
    """D-calibration histogram of a validation set against its (extended)
    predicted curves; ties d = c count as deaths via the event flag."""
    curves = list(curves)
    if len(curves) != len(v):
        raise ValueError(f"{len(curves)} curves for {len(v)} instances")
    probs = np.array(
        [survival_at(c, inst.time) for c, inst in zip(curves, v.instances)]
    )
    return dcal_histogram_from_probs(probs, v.events, b)


def dcal_test(h: DCalHistogram) -> TestResult:
    """Pearson chi-square of the histogram against uniform bins, with B-1
    degrees of freedom."""
    if not h.n_total > 0:
        raise ValueError("empty histogram; D-calibration is undefined")
    b = h.counts.size
    expected = h.n_total / b
    statistic = float(np.sum((h.counts - expected) ** 2 / expected))
    dof = b - 1
    return TestResult(statistic, dof, chi2_sf(statistic, dof))
