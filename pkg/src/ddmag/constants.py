"""Physical constants for the electron-spin sensor.

The gyromagnetic ratio is kept in ordinary-frequency units (Hz/T), so a
field B precesses the spin at angular rate 2*pi*gamma*B.  With that
convention the shot-noise prefactor obeys the exact identity

    pi*hbar / (2*g*mu_B) = 1/(4*gamma)

because gamma = g*mu_B/h.  Constants are tied together at construction,
so the identity holds to rounding regardless of which of gamma or g the
caller specifies.
"""

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

PLANCK_HBAR = 1.054571817e-34  # J s
BOHR_MAGNETON = 9.2740100783e-24  # J/T

# NV electron spin, ordinary-frequency convention (Hz/T)
DEFAULT_GAMMA = 28.024e9


@dataclass(frozen=True)
class PhysicalConstants:
    """Gyromagnetic ratio plus the fundamental constants it derives from."""

    gamma: float = DEFAULT_GAMMA  # Hz/T
    g_factor: float = DEFAULT_GAMMA * 2.0 * math.pi * PLANCK_HBAR / BOHR_MAGNETON
    hbar: float = PLANCK_HBAR
    bohr_magneton: float = BOHR_MAGNETON

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise InvalidArgumentError("gamma must be positive")
        pref = math.pi * self.hbar / (2.0 * self.g_factor * self.bohr_magneton)
        if abs(pref * 4.0 * self.gamma - 1.0) > 1e-6:
            raise InvalidArgumentError(
                "inconsistent constants: pi*hbar/(2*g*mu_B) != 1/(4*gamma)"
            )

    @classmethod
    def from_gamma(cls, gamma: float) -> "PhysicalConstants":
        """Build from a gyromagnetic ratio in Hz/T; g is derived."""
        return cls(
            gamma=gamma,
            g_factor=gamma * 2.0 * math.pi * PLANCK_HBAR / BOHR_MAGNETON,
        )

    @classmethod
    def from_g_factor(cls, g_factor: float) -> "PhysicalConstants":
        """Build from a g-factor; gamma = g*mu_B/h is derived."""
        return cls(
            gamma=g_factor * BOHR_MAGNETON / (2.0 * math.pi * PLANCK_HBAR),
            g_factor=g_factor,
        )

    @property
    def eq_prefactor(self) -> float:
        """Shot-noise sensitivity prefactor pi*hbar/(2*g*mu_B), in T s."""
        return math.pi * self.hbar / (2.0 * self.g_factor * self.bohr_magneton)


DEFAULT_CONSTANTS = PhysicalConstants()
