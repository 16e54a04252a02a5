"""``python -m imsp``."""

from .cli import entry

entry()
