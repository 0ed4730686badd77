"""Limit extrapolation for sequences with known (possibly fractional) error exponents."""
import numpy as np


class ExtrapolationError(RuntimeError):
    """Raised when a sequence does not settle; carries the offending data."""

    def __init__(self, message, steps=None, values=None):
        super().__init__(message)
        self.steps = None if steps is None else list(steps)
        self.values = None if values is None else list(values)


def _basis(h, exponents):
    cols = [np.ones_like(h)]
    seen = []
    for e in exponents:
        if any(abs(e - s) < 1e-8 for s in seen):
            # coincident powers resonate into h^e log h
            cols.append(h ** e * np.log(h))
        else:
            cols.append(h ** e)
        seen.append(e)
    return np.column_stack(cols)


def fit_limit(steps, values, exponents):
    """Least-squares fit ``v(h) = L + sum_j c_j h**e_j``; returns ``L``."""
    h = np.asarray(steps, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(exponents) + 1 > len(h):
        raise ValueError("more unknowns than samples")
    A = _basis(h, list(exponents))
    # column scaling keeps the normal equations sane when h spans decades
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    coef, *_ = np.linalg.lstsq(A / scale, v, rcond=None)
    return float(coef[0] / scale[0])


def extrapolate(steps, values, exponents, max_terms=None):
    """Extrapolate ``values`` to ``h -> 0``.

    Parameters
    ----------
    steps, values : sequences of equal length
        Sample points ``h_i > 0`` and the sequence values there.
    exponents : sequence of float
        Positive error exponents, smallest first.
    max_terms : int, optional
        Cap on the number of correction terms used.

    Returns
    -------
    (limit, error_estimate)
        The estimate is the spread between the best fit and the fits
        obtained by dropping one correction term or the coarsest sample.
    """
    h = np.asarray(steps, dtype=float)
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ExtrapolationError("non-finite sequence value", h, v)
    order = np.argsort(-h)
    h, v = h[order], v[order]
    exps = sorted(float(e) for e in exponents if e > 0)
    m = len(h) - 1
    if max_terms is not None:
        m = min(m, max_terms)
    exps = exps[: max(1, min(m, len(h) - 2))]
    best = fit_limit(h, v, exps)
    alts = []
    if len(exps) > 1:
        alts.append(fit_limit(h, v, exps[:-1]))
    if len(h) - 1 > len(exps):
        alts.append(fit_limit(h[1:], v[1:], exps))
    err = max((abs(best - a) for a in alts), default=abs(v[-1] - best))
    return best, float(err)


def richardson_table(step_ratio, values, order=1):
    """Classic Richardson table for integer-order errors in geometric steps."""
    level = list(values)
    for m in range(order, order + len(values) - 1):
        mult = step_ratio ** m
        level = [(mult * level[i + 1] - level[i]) / (mult - 1.0)
                 for i in range(len(level) - 1)]
    return level[0]
