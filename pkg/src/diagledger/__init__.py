"""Provenance-tagged diagnostic indicators with recomputable audit trails."""

__version__ = "0.1.0"
