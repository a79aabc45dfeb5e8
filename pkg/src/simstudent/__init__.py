"""simstudent: a simulated-student dialogue service for teacher questioning
practice, with uncertainty-gated escalation to a human supervisor."""

__version__ = "0.1.0"
