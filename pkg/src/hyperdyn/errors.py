"""Error taxonomy shared by the whole package.

Every failure mode carries a stable machine-readable ``code`` so the CLI can
map it onto an exit status, and a human-readable message with the numbers
that triggered it.
"""


class HyperdynError(Exception):
    """Base class.  ``code`` is a stable identifier, ``verdict`` marks errors
    that represent a *validated negative finding* (the input was understood,
    the answer is "no") rather than unusable input."""

    code = "ERROR"
    verdict = False

    def __init__(self, message="", **data):
        self.data = data
        if data:
            extras = ", ".join(f"{k}={v}" for k, v in data.items())
            message = f"{message} ({extras})" if message else extras
        super().__init__(f"{self.code}: {message}" if message else self.code)


class TailRuleMismatch(HyperdynError):
    code = "TAIL_RULE_MISMATCH"


class NoInverse(HyperdynError):
    code = "NO_INVERSE"


class NotSemiInvariant(HyperdynError):
    code = "NOT_SEMI_INVARIANT"
    verdict = True


class NotContracting(HyperdynError):
    code = "NOT_CONTRACTING"
    verdict = True


class WindowInconclusive(HyperdynError):
    code = "WINDOW_INCONCLUSIVE"
    verdict = True


class HilbertOnly(HyperdynError):
    code = "HILBERT_ONLY"


class NotTransition(HyperdynError):
    code = "NOT_TRANSITION"


class NotPeriodic(HyperdynError):
    code = "NOT_PERIODIC"
    verdict = True


class NotShifted(HyperdynError):
    code = "NOT_SHIFTED"
    verdict = True


class CertInvalid(HyperdynError):
    code = "CERT_INVALID"


class SystemSingular(HyperdynError):
    code = "SYSTEM_SINGULAR"


class ReparamSingular(HyperdynError):
    code = "REPARAM_SINGULAR"


class ConeViolated(HyperdynError):
    code = "CONE_VIOLATED"
    verdict = True


class NotConverged(HyperdynError):
    code = "NOT_CONVERGED"


class BadRates(HyperdynError):
    code = "BAD_RATES"


class BadPotential(HyperdynError):
    code = "BAD_POTENTIAL"


class NormConstraint(HyperdynError):
    code = "NORM_CONSTRAINT"


class NormMismatch(HyperdynError):
    code = "NORM_MISMATCH"


class Precondition(HyperdynError):
    code = "PRECONDITION"
    verdict = True
