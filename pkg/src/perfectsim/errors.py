"""Exception hierarchy for perfectsim."""


class PerfectSimError(Exception):
    """Base class for all perfectsim errors."""


class InvalidLawError(PerfectSimError, ValueError):
    """A probability law violates its structural invariants."""


class IncompatibleMinorizationError(PerfectSimError, ValueError):
    """beta*nu is not compatible with the proposed dominating law."""


class SupercriticalError(PerfectSimError, ValueError):
    """The dominating walk would be null/transient (drift >= 0)."""


class CertificateError(PerfectSimError, ValueError):
    """A drift or minorization certificate is malformed or inconsistent."""


class DepthCapError(PerfectSimError, RuntimeError):
    """Backward search exceeded the configured hard depth cap."""
