"""Log-log least-squares helpers for power-law exponents."""

from __future__ import annotations

import numpy as np


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y): (slope, intercept, r^2).

    Non-positive samples are dropped (they carry no power-law content).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if len(lx) < 2:
        raise ValueError("need at least two positive samples to fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = np.sum((ly - np.mean(ly)) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / total) if total > 0 else 1.0
    return float(slope), float(intercept), r2


def powerlaw_fit(x, y) -> tuple[float, float]:
    """(slope, r^2) of the log-log fit y ~ x^slope."""
    slope, _, r2 = loglog_fit(x, y)
    return slope, r2
