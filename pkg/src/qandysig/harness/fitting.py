"""
Exponential-decay fits of event frequencies against the key length.

An event whose probability behaves like ``exp(-c gap^2 n)`` is linear in ``n`` after
taking logs, so ``ln(freq)`` is fit against ``n`` by least squares. The decay
constant is recovered as ``c = -slope / gap^2``."""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress, t

from qandysig.errors import InsufficientData, ParameterError
from qandysig.harness.experiment import wilson_interval

__all__ = ["FitPoint", "DecayFit", "fit_decay", "fit_summary"]

logger = logging.getLogger(__name__)

# |slope| at or below this is indistinguishable from no decay
SLOPE_ATOL = 1e-12


@dataclass(frozen=True)
class FitPoint:
    n: int
    freq: float
    value: float
    wilson_lo: Optional[float] = None
    wilson_hi: Optional[float] = None
    censored: bool = False


@dataclass(frozen=True)
class DecayFit:
    """ A least-squares fit of ``ln(freq) = intercept + slope * n``.

    Attributes
    ----------
    slope, intercept : float

    stderr : float
        Standard error of the slope.

    slope_ci : Tuple[float, float]
        95% confidence interval of the slope (Student t, ``k - 2`` dof).

    decays : bool
        Whether the confidence interval lies entirely below zero.

    gap : Optional[float]
        The threshold gap governing the event.

    constant : Optional[float]
        ``-slope / gap^2``, when ``gap`` is given.

    points : Tuple[FitPoint, ...]
        Every grid point, usable or not; censored points entered the fit at their
        Wilson upper bound."""

    event: Optional[str]
    slope: float
    intercept: float
    stderr: float
    slope_ci: Tuple[float, float]
    decays: bool
    gap: Optional[float]
    constant: Optional[float]
    points: Tuple[FitPoint, ...]

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["slope_ci"] = list(self.slope_ci)
        out["points"] = [asdict(p) for p in self.points]
        return out


def _points(ns, freqs, trials) -> List[FitPoint]:
    points = []
    for i, (n, freq) in enumerate(zip(ns, freqs)):
        if not 0 <= freq <= 1:
            raise ParameterError(f"frequencies must lie in [0, 1], got {freq} at n={n}")
        if trials is None:
            if freq > 0:
                points.append(FitPoint(int(n), float(freq), math.log(freq)))
            continue
        k = int(round(freq * trials[i]))
        lo, hi = wilson_interval(k, int(trials[i]))
        if k == 0:
            logger.warning("no events at n=%d; censored at the Wilson upper bound %.3g", n, hi)
            points.append(FitPoint(int(n), float(freq), math.log(hi), lo, hi, True))
        else:
            points.append(FitPoint(int(n), float(freq), math.log(freq), lo, hi))
    return points


def fit_decay(
    ns: Sequence[int],
    freqs: Sequence[float],
    *,
    trials: Optional[Sequence[int]] = None,
    event: Optional[str] = None,
    gap: Optional[float] = None,
) -> DecayFit:
    """ Fits ``ln(freq)`` against ``n``.

    Parameters
    ----------
    ns : Sequence[int]
        Grid of key lengths.

    freqs : Sequence[float]
        Event frequency at each grid point.

    trials : Optional[Sequence[int]]
        Trials per grid point. When given, points without events are censored at
        the upper bound of their Wilson 95% interval; otherwise they are dropped.

    event : Optional[str]
        Reported back in the fit.

    gap : Optional[float]
        The threshold gap of the event (``p_f - s_v``, ``s_v - s_a`` or ``s_a - p_e``).

    Returns
    -------
    DecayFit

    Raises
    ------
    InsufficientData
        Fewer than three usable grid points.

    Examples
    --------
    >>> import numpy as np
    >>> ns = np.array([64, 128, 256, 512])
    >>> fit = fit_decay(ns, np.exp(-0.01 * ns))
    >>> round(fit.slope, 6), fit.decays
    (-0.01, True)"""
    ns = np.asarray(ns, dtype=float).reshape(-1)
    freqs = np.asarray(freqs, dtype=float).reshape(-1)
    if ns.shape != freqs.shape:
        raise ParameterError(f"got {ns.size} grid points but {freqs.size} frequencies")
    if trials is not None and len(trials) != ns.size:
        raise ParameterError(f"got {ns.size} grid points but {len(trials)} trial counts")

    points = _points(ns, freqs, trials)
    if len(points) < 3:
        raise InsufficientData(
            f"a decay fit needs at least three usable grid points, got {len(points)}"
        )

    x = np.array([p.n for p in points], dtype=float)
    y = np.array([p.value for p in points])
    fit = linregress(x, y)
    half = t.ppf(0.975, df=len(points) - 2) * fit.stderr
    slope_ci = (float(fit.slope - half), float(fit.slope + half))
    decays = bool(slope_ci[1] < 0 and abs(fit.slope) > SLOPE_ATOL)

    constant = None
    if gap is not None:
        if gap <= 0:
            raise ParameterError(f"`gap` must be positive, got {gap}")
        constant = -float(fit.slope) / gap ** 2

    return DecayFit(
        event=event,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        slope_ci=slope_ci,
        decays=decays,
        gap=gap,
        constant=constant,
        points=tuple(points),
    )


def fit_summary(rows: Sequence[Dict[str, Any]], event: str, *, gap: Optional[float] = None) -> DecayFit:
    """ Fits the rows of a CSV summary (see
    :func:`~qandysig.harness.experiment.read_summary`) for one event."""
    rows = sorted((r for r in rows if r["event"] == event), key=lambda r: r["n"])
    if not rows:
        raise InsufficientData(f"the summary has no rows for the event {event!r}")
    return fit_decay(
        [r["n"] for r in rows],
        [r["count"] / r["trials"] for r in rows],
        trials=[r["trials"] for r in rows],
        event=event,
        gap=gap,
    )
