"""Mean-field-game epidemic models with immunity structure and uncertain horizons."""

from .model import (
    EpiParams,
    ModelParams,
    Penalties,
    UtilityParams,
    best_response,
    myopic_contact,
    terminal_penalty_infected,
    utility,
)

__version__ = "0.1.0"

__all__ = [
    "EpiParams",
    "ModelParams",
    "Penalties",
    "UtilityParams",
    "best_response",
    "myopic_contact",
    "terminal_penalty_infected",
    "utility",
]
