class InputError(ValueError):
    """Malformed or inconsistent user input (files, configs, grids)."""


class GenerationError(RuntimeError):
    """Synthetic volume generation could not satisfy its constraints."""
