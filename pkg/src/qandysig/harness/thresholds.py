from typing import Sequence, Tuple

from qandysig._utils import check_fraction
from qandysig.errors import InvalidGap, ParameterError
from qandysig.protocol_base import Outcome

__all__ = ["optimize_thresholds", "gap_for"]


def optimize_thresholds(
    p_e: float, p_f: float, *, weights: Sequence[float] = (1.0, 1.0, 1.0)
) -> Tuple[float, float]:
    """ Places the thresholds ``s_a < s_v`` between the honest mismatch rate ``p_e``
    and the forger's mismatch rate ``p_f``.

    With equal weights the three gaps ``s_a - p_e``, ``s_v - s_a`` and ``p_f - s_v``
    are equal, which balances the exponents of the honest-abort, repudiation and
    forgery bounds. Otherwise the interval ``[p_e, p_f]`` is split in proportion to
    ``weights``.

    Parameters
    ----------
    p_e : float

    p_f : float

    weights : Sequence[float], optional (default=(1, 1, 1))
        Relative sizes of the honest-abort, repudiation and forgery gaps.

    Returns
    -------
    Tuple[float, float]
        ``(s_a, s_v)``

    Raises
    ------
    InvalidGap
        ``p_e >= p_f``

    Examples
    --------
    >>> s_a, s_v = optimize_thresholds(0.0, 0.125)
    >>> round(s_a * 24, 9), round(s_v * 12, 9)
    (1.0, 1.0)"""
    p_e = check_fraction(p_e, "p_e")
    p_f = check_fraction(p_f, "p_f")
    if p_e >= p_f:
        raise InvalidGap(f"thresholds need p_e < p_f, got p_e={p_e}, p_f={p_f}")
    if len(weights) != 3 or any(w <= 0 for w in weights):
        raise ParameterError(f"`weights` must be three positive numbers, got {tuple(weights)}")
    total = float(sum(weights))
    span = p_f - p_e
    s_a = p_e + span * weights[0] / total
    s_v = p_e + span * (weights[0] + weights[1]) / total
    return s_a, s_v


def gap_for(event: str, *, p_e: float, s_a: float, s_v: float, p_f: float) -> float:
    """ The threshold gap that governs the decay of ``event``.

    Examples
    --------
    >>> gap_for("repud_succ", p_e=0.0, s_a=0.05, s_v=0.15, p_f=0.2)
    0.09999999999999999"""
    event = Outcome(event)
    if event in (Outcome.FORGE_SUCC, Outcome.FORGE_FAIL):
        return p_f - s_v
    if event in (Outcome.REPUD_SUCC, Outcome.REPUD_FAIL):
        return s_v - s_a
    return s_a - p_e
