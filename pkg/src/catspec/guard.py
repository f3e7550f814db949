"""Size guardrail for exhaustive checks."""
import os
from contextlib import contextmanager

from .errors import GuardrailExceeded

DEFAULT_MAX_MORPHISMS = 5000
_override: list[int] = []


def max_morphisms() -> int:
    if _override:
        return _override[-1]
    raw = os.environ.get("CATSPEC_MAX_MORPHISMS")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_MAX_MORPHISMS


@contextmanager
def guardrail(bound: int):
    """Temporarily use ``bound`` as the morphism limit."""
    _override.append(int(bound))
    try:
        yield
    finally:
        _override.pop()


def check_size(*cats, what: str = "category") -> None:
    bound = max_morphisms()
    for c in cats:
        n = len(c.morphisms)
        if n > bound:
            raise GuardrailExceeded(n, bound, what)
