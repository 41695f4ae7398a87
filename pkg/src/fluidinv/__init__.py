"""fluidinv: exact symbolic verification of fluid-flow differential invariants."""

__version__ = "0.1.0"
