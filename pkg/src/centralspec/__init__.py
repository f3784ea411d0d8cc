"""Central configurations, their relative equilibria and real moment map geometry."""

__version__ = "0.1.0"
