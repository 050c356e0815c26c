"""Smart-building telemetry platform.

Synthetic or imported sensor data is published through a miniature sovereign
dataspace, consumed by anomaly/forecast/presence models placed across a
simulated cloud-edge continuum, and served over a monitoring HTTP API.
"""

__version__ = "0.1.0"
