"""Nonlinear incidence functions f(s, i) and sampled checks of (H1)-(H3).

Every callable here must accept numpy arrays and broadcast. The i -> 0+
companions (phi0 and the slope d2f_at_dfe) are supplied analytically: they
feed R0 and the disease-free Lyapunov functional, and a finite difference at
the i = 0 boundary is ill-conditioned. The analysis modules also assume
phi0(s) > 0 for s > 0.

A passing hypothesis report is evidence gathered on a grid, not a proof.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .logger import logger
from .utils import validate_finite, validate_grid

BILINEAR = "bilinear"
SATURATED = "saturated"

INCIDENCE_FAMILIES = (BILINEAR, SATURATED)


@dataclass(frozen=True)
class IncidenceFunction:
    f: Callable
    phi: Callable
    phi0: Callable
    d2f_at_dfe: Callable
    family_tag: str
    saturation: float = 0.0


def builtin_incidence(family_tag: str, saturation: float = 0.0) -> IncidenceFunction:
    if family_tag == BILINEAR:
        return IncidenceFunction(
            f=lambda s, i: np.multiply(s, i),
            phi=lambda s, i: np.broadcast_to(np.asarray(s, dtype=float), np.broadcast(s, i).shape) * 1.0,
            phi0=lambda s: np.asarray(s, dtype=float) * 1.0,
            d2f_at_dfe=lambda s: np.asarray(s, dtype=float) * 1.0,
            family_tag=BILINEAR,
        )
    if family_tag == SATURATED:
        alpha = validate_finite("saturation", saturation)
        return IncidenceFunction(
            f=lambda s, i: np.multiply(s, i) / (1.0 + alpha * np.asarray(i, dtype=float)),
            phi=lambda s, i: np.asarray(s, dtype=float) / (1.0 + alpha * np.asarray(i, dtype=float)),
            phi0=lambda s: np.asarray(s, dtype=float) * 1.0,
            d2f_at_dfe=lambda s: np.asarray(s, dtype=float) * 1.0,
            family_tag=SATURATED,
            saturation=alpha,
        )
    raise ValueError(f"Unknown incidence family '{family_tag}'. Known families: {', '.join(INCIDENCE_FAMILIES)}")


@dataclass(frozen=True)
class HypothesisReport:
    h1_s_increasing: bool
    h1_i_increasing: bool
    h2_bounded: bool
    h2_decreasing: bool
    h3_boundary: bool
    companions_consistent: bool
    phi_supremum: float
    # (clause, s, i) of the first violation found, clauses in the order above
    witness: Optional[Tuple[str, float, float]] = None

    @property
    def passed(self) -> bool:
        return all((self.h1_s_increasing, self.h1_i_increasing, self.h2_bounded,
                    self.h2_decreasing, self.h3_boundary, self.companions_consistent))

    def clauses(self):
        return {
            "H1 (s strictly increasing)": self.h1_s_increasing,
            "H1 (i increasing)": self.h1_i_increasing,
            "H2 (phi bounded on grid)": self.h2_bounded,
            "H2 (phi decreasing in i)": self.h2_decreasing,
            "H3 (f vanishes on the boundary)": self.h3_boundary,
            "companions (phi0 = d2f, phi <= phi0)": self.companions_consistent,
        }


def _first_failure(mask, s_values, i_values):
    """(s, i) at the first False entry of a boolean (s, i)-shaped mask."""
    bad = np.argwhere(~mask)
    if len(bad) == 0:
        return None
    row, col = bad[0]
    return float(s_values[row]), float(i_values[col])


def check_hypotheses(inc: IncidenceFunction, s_grid, i_grid) -> HypothesisReport:
    s = validate_grid("s_grid", s_grid)
    i = validate_grid("i_grid", i_grid, strictly_positive=True)
    S, I = np.meshgrid(s, i, indexing="ij")
    f = np.asarray(inc.f(S, I), dtype=float)
    phi = np.asarray(inc.phi(S, I), dtype=float)
    witness = None

    def note(clause, mask, s_values, i_values):
        nonlocal witness
        if witness is None:
            pair = _first_failure(mask, s_values, i_values)
            if pair is not None:
                witness = (clause, *pair)

    # f(s2, i) > f(s1, i) for neighbouring s, i fixed and positive
    h1_s = f[1:, :] > f[:-1, :]
    note("H1-s", h1_s, s[1:], i)
    h1_i = f[:, 1:] >= f[:, :-1]
    note("H1-i", h1_i, s, i[1:])
    finite = np.isfinite(phi)
    note("H2-bounded", finite, s, i)
    h2_dec = phi[:, 1:] <= phi[:, :-1]
    note("H2-decreasing", h2_dec, s, i[1:])

    f_zero_s = np.asarray(inc.f(np.zeros_like(i), i), dtype=float) == 0
    note("H3", f_zero_s[np.newaxis, :], [0.0], i)
    f_zero_i = np.asarray(inc.f(s, np.zeros_like(s)), dtype=float) == 0
    note("H3", f_zero_i[:, np.newaxis], s, [0.0])

    phi0 = np.asarray(inc.phi0(s), dtype=float)
    slope = np.asarray(inc.d2f_at_dfe(s), dtype=float)
    same_limit = np.isclose(phi0, slope, rtol=1e-12, atol=0.0)
    note("companions", same_limit[:, np.newaxis], s, [0.0])
    below_limit = phi <= phi0[:, np.newaxis] * (1 + 1e-12)
    note("companions", below_limit, s, i)

    report = HypothesisReport(
        h1_s_increasing=bool(h1_s.all()),
        h1_i_increasing=bool(h1_i.all()),
        h2_bounded=bool(finite.all()),
        h2_decreasing=bool(h2_dec.all()),
        h3_boundary=bool(f_zero_s.all() and f_zero_i.all()),
        companions_consistent=bool(same_limit.all() and below_limit.all()),
        phi_supremum=float(np.max(phi[finite])) if finite.any() else float("inf"),
        witness=witness,
    )
    if report.passed:
        logger.debug(f"Incidence '{inc.family_tag}' satisfies H1-H3 on a {s.size}x{i.size} grid")
    else:
        logger.warning(f"Incidence '{inc.family_tag}' violates a hypothesis clause at {witness}")
    return report
