"""Pointwise constitutive laws for the phase-field flow models.

The double well f(p) = p^2 (1-p)^2 / 4 and its time-averaged derivative are
fixed; mobility, permeability weight and viscosity carry their parameters in
:class:`MaterialLaws`.  All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def double_well(phi):
    """Bulk free-energy density f(p) = p^2 (1-p)^2 / 4, minima at 0 and 1."""
    return 0.25 * (phi * phi) * ((1.0 - phi) * (1.0 - phi))


def potential_deriv(phi):
    """f'(p) = p^3 - 1.5 p^2 + 0.5 p."""
    pp = phi * phi
    return (pp * phi - 1.5 * pp) + 0.5 * phi


def potential_deriv2(phi):
    """f''(p) = 3 p^2 - 3 p + 0.5."""
    return (3.0 * (phi * phi) - 3.0 * phi) + 0.5


def dg_potential(a, b):
    """Time average of f' along the linear path from a to b.

    For the quartic double well this equals the divided difference
    (f(b) - f(a)) / (b - a), evaluated here via the symmetric closed form
    so that a == b is regular and returns f'(a) without cancellation.
    """
    aa = a * a
    bb = b * b
    cubic = 0.25 * ((aa * a + aa * b) + (a * bb + bb * b))
    quad = 0.5 * ((aa + a * b) + bb)
    lin = 0.25 * (a + b)
    return (cubic - quad) + lin


def dg_potential_db(a, b):
    """Partial derivative of dg_potential in its second argument.

    At a == b this equals f''(a) / 2; used in the Newton linearization of
    the implicit potential term.
    """
    return 0.25 * ((a * a + 2.0 * (a * b)) + 3.0 * (b * b)) - 0.5 * (a + 2.0 * b) + 0.25


@dataclass(frozen=True)
class MaterialLaws:
    """Model coefficients; defaults are the reference experiment values.

    beta switches the kinetic-energy contribution: 0 for the pure and
    Darcy-coupled models, 1 for the Navier-Stokes coupling.
    """

    gamma: float = 1e-4
    mob_scale: float = 5.0
    mob_floor: float = 1e-6
    alpha0: float = 1e-2
    alpha1: float = 1.0
    eta0: float = 1e-4
    eta1: float = 1e-2
    beta: int = 0

    def validate(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.mob_floor > 0:
            raise ValueError(f"mobility floor must be positive, got {self.mob_floor}")
        for name in ("alpha0", "alpha1", "eta0", "eta1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {self.beta}")

    def mobility(self, phi):
        """m(p) = mob_scale * max(p^2 (1-p)^2, 0) + mob_floor.

        The max clamp is inert (the argument is a square) but kept for
        fidelity to the stated law.
        """
        w = (phi * phi) * ((1.0 - phi) * (1.0 - phi))
        return self.mob_scale * np.maximum(w, 0.0) + self.mob_floor

    def mobility_d(self, phi):
        """dm/dp = 2 * mob_scale * p (1-p) (1-2p)."""
        return 2.0 * self.mob_scale * phi * (1.0 - phi) * (1.0 - 2.0 * phi)

    def alpha(self, phi):
        """Permeability weight: geometric interpolation of alpha0, alpha1."""
        return np.exp(phi * np.log(self.alpha1) + (1.0 - phi) * np.log(self.alpha0))

    def alpha_d(self, phi):
        return self.alpha(phi) * np.log(self.alpha1 / self.alpha0)

    def eta(self, phi):
        """Viscosity: geometric interpolation of eta0, eta1."""
        return np.exp(phi * np.log(self.eta1) + (1.0 - phi) * np.log(self.eta0))

    def eta_d(self, phi):
        return self.eta(phi) * np.log(self.eta1 / self.eta0)
