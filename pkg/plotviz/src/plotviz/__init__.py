"""Read-only figure rendering for bicavity sweep CSV outputs."""

__version__ = "0.1.0"
