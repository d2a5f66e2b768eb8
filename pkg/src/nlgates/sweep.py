"""Grid sweeps over (xi, sin^2 alpha) and their CSV / JSON-lines encodings."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from scipy import optimize

from . import analytics

CSV_HEADER = ("xi", "sin2_alpha", "p_direct", "p_procrustean", "bound",
              "p_small_alpha_approx", "p_small_xi_approx", "better")
TIE_TOL = 1e-10


@dataclass(frozen=True)
class SweepRow:
    xi: float
    sin2_alpha: float
    p_direct: float
    p_procrustean: float
    bound: float
    p_small_alpha_approx: float
    p_small_xi_approx: float
    better: str
    # inserted at a refined direct/Procrustean crossing rather than a grid point
    crossing: bool = False


def make_row(xi: float, s: float, crossing: bool = False) -> SweepRow:
    alpha = analytics.alpha_from_s(s)
    p = analytics.success_probability(xi, alpha)
    p_proc = analytics.procrustean_probability(alpha)
    bound, _ = analytics.majorization_bound(xi, alpha)
    small_alpha, small_xi = analytics.linear_regimes(xi, s)
    if abs(p - p_proc) <= TIE_TOL:
        better = "tie"
    else:
        better = "direct" if p > p_proc else "procrustean"
    return SweepRow(xi, s, p, p_proc, bound, small_alpha, small_xi, better, crossing)


def _gap(xi: float, s: float) -> float:
    return analytics.success_probability_s(xi, s) - 2.0 * s


def find_crossings(xi: float, s_values: np.ndarray) -> list[float]:
    """Roots of ``p(s) - 2s`` bracketed by adjacent grid points."""
    gaps = [_gap(xi, s) for s in s_values]
    roots = []
    for (s0, g0), (s1, g1) in zip(zip(s_values, gaps), zip(s_values[1:], gaps[1:])):
        if abs(g0) <= TIE_TOL or abs(g1) <= TIE_TOL:
            continue
        if (g0 > 0) != (g1 > 0):
            roots.append(optimize.brentq(lambda s: _gap(xi, s), s0, s1, xtol=1e-15, rtol=1e-15))
    return roots


def sweep(xis: Iterable[float], s_values: Iterable[float]) -> list[SweepRow]:
    """Rows in ascending (xi, s) order, with crossing rows merged in."""
    xis = sorted({analytics.check_xi(x) for x in xis})
    grid = np.array(sorted({float(s) for s in s_values}))
    for s in grid:
        analytics.alpha_from_s(s)
    rows = []
    for xi in xis:
        points = [(s, False) for s in grid] + [(s, True) for s in find_crossings(xi, grid)]
        for s, is_crossing in sorted(points):
            rows.append(make_row(xi, s, is_crossing))
    return rows


def s_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid, built by index to avoid drift."""
    if not step > 0:
        raise ValueError("grid step must be positive")
    if not start < stop:
        raise ValueError("grid start must be below stop")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_csv(rows: Iterable[SweepRow], out: TextIO) -> None:
    out.write(",".join(CSV_HEADER) + "\n")
    for r in rows:
        values = [_fmt(getattr(r, k)) for k in CSV_HEADER[:-1]] + [r.better]
        out.write(",".join(values) + "\n")


def write_jsonl(rows: Iterable[SweepRow], out: TextIO) -> None:
    for r in rows:
        record = {k: float(_fmt(getattr(r, k))) for k in CSV_HEADER[:-1]}
        record["better"] = r.better
        record["crossing"] = r.crossing
        out.write(json.dumps(record) + "\n")
