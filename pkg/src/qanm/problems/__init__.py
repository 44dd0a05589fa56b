"""Test problems in quadratic form."""

from .spring_mass import (spring_mass_analytic, spring_mass_problem, spring_mass_residual,
                          spring_mass_start)

__all__ = ["spring_mass_analytic", "spring_mass_problem", "spring_mass_residual", "spring_mass_start"]
from .beam import (BeamConfigError, BeamModel, BucklingConfig, FlectionConfig, beam_problem, beam_start,
                   critical_load)

__all__ += ["BeamConfigError", "BeamModel", "BucklingConfig", "FlectionConfig", "beam_problem",
            "beam_start", "critical_load"]
