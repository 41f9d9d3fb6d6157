"""Executable Hindman/idempotent-type workbench over countable semigroups."""

__version__ = "0.1.0"
