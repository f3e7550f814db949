"""Exhaustive verification of fibred-category constructions over finite data."""
from .errors import (CatspecError, DslError, GuardrailExceeded, NotComposable,
                     PreconditionError, UnknownId)
from .guard import guardrail, max_morphisms

__version__ = "0.1.0"
