"""Ranks data-center failure mitigations by their estimated impact on
connection-level performance (flow throughput and completion time)."""

__version__ = "0.1.0"
