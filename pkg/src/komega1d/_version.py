"""Single source of the artifact version (keep pyproject.toml in sync)."""

__version__ = "0.1.0"
