"""Explicit invertibility constants."""

from __future__ import annotations

import math

from ..errors import PreconditionError


def q_constant(tau, gamma_len, line_sq_max):
    """Admissible ``Q = tau/(4|gamma|^2) + 8|gamma|^2/tau * max_x int_0^1 |A(x - xi gamma)|^2 dxi``."""
    if not 0 < tau < 1:
        raise PreconditionError("tau must lie in (0, 1)")
    return tau / (4.0 * gamma_len**2) + 8.0 * gamma_len**2 / tau * line_sq_max


def c2_constant(tau, Q, theta_bar, mu_norm, c_star_h, gamma_len):
    """``(1 - tau) / (1 + Q/(1 - theta) * |gamma|/pi * exp(||mu|| C*(h)))``."""
    if not 0 < tau < 1:
        raise PreconditionError("tau must lie in (0, 1)")
    if Q < 0:
        raise PreconditionError("Q must be non-negative")
    if not 0 <= theta_bar < 1:
        raise PreconditionError("theta_bar must lie in [0, 1)")
    if mu_norm < 1:
        raise PreconditionError("the measure norm is at least 1")
    if c_star_h < 0 or gamma_len <= 0:
        raise PreconditionError("C*(h) must be non-negative and |gamma| positive")
    growth = Q / (1.0 - theta_bar) * gamma_len / math.pi * math.exp(mu_norm * c_star_h)
    return (1.0 - tau) / (1.0 + growth)


def c1_constant(c2, gamma_len):
    """``C_1 = pi C_2 / (2 |gamma|)``."""
    return 0.5 * math.pi * c2 / gamma_len
