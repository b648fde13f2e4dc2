"""Safe versus unconstrained policy-gradient navigation for a car-like robot."""

__version__ = "0.1.0"
