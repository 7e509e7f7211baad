"""Unit system and transition constants.

Everything past the CLI boundary is dimensionless: lengths in units of the
transition wavelength lambda0, times in 1/Gamma0, rates and Rabi frequencies
in Gamma0. SI quantities enter and leave only through the converters in this
module, which eliminates an entire class of unit bugs in the propagator.

Defaults are the Rb87 D2-line values; all of them can be overridden through
the experiment config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class TransitionSpec:
    """Physical constants of the two-level transition (SI units)."""

    lambda0: float = 780.2e-9        # wavelength [m]
    gamma0: float = 2 * math.pi * 6e6  # natural linewidth [rad/s]
    isat: float = 16.7               # saturation intensity [W/m^2]

    def __post_init__(self):
        for name in ("lambda0", "gamma0", "isat"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"TransitionSpec.{name} must be strictly positive")

    @property
    def k0(self) -> float:
        """Transition wavenumber [rad/m], derived, never stored."""
        return 2 * math.pi / self.lambda0


#: Default Rb87 D2 constants used when no override is given.
RB87_D2 = TransitionSpec()


def saturation_to_rabi(s: float) -> float:
    """Rabi frequency (Gamma0 units) for an on-resonance saturation s = I/Isat.

    Uses the resonant relation rabi = sqrt(s/2).
    """
    if s < 0:
        raise ConfigError(f"saturation parameter must be >= 0, got {s}")
    return math.sqrt(s / 2.0)


def si_time_to_gamma_units(t: float, spec: TransitionSpec = RB87_D2) -> float:
    """Convert a time in seconds to dimensionless 1/Gamma0 units."""
    return t * spec.gamma0


def gamma_units_to_si_time(t: float, spec: TransitionSpec = RB87_D2) -> float:
    """Convert a dimensionless time (1/Gamma0 units) back to seconds."""
    return t / spec.gamma0
