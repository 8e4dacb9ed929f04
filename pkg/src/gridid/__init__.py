"""Small-signal dq impedance identification for a simulated three-phase grid."""

__version__ = "0.1.0"
