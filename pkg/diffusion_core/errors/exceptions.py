class DiffusionCoreError(Exception):
    """
    Base class for every failure raised by the toolkit.

    `witness` carries the offending point, vector or measured values so that
    stage reports can show what broke, not only that something broke.
    """

    default_message = "Diffusion core error"

    def __init__(self, message=None, witness=None):
        self.message = message or self.default_message
        self.witness = dict(witness or {})
        super().__init__(self.message)

    def as_dict(self):
        return {"error": type(self).__name__, "message": self.message, "witness": self.witness}


class DomainError(DiffusionCoreError):
    default_message = "Action outside the declared domain"


class InversionError(DiffusionCoreError):
    default_message = "Frequency map inversion did not converge"


class ConvexityError(DiffusionCoreError):
    default_message = "Hessian of the integrable part is not positive definite"


class StepError(DiffusionCoreError):
    default_message = "Implicit integrator step did not converge"


class BudgetError(DiffusionCoreError):
    default_message = "Enumeration budget exceeded"


class HypothesisViolationError(DiffusionCoreError):
    default_message = "Homogeneous problem has a small solution"


class SelectionError(DiffusionCoreError):
    default_message = "No admissible resonance vector in the search ball"


class CoverageError(DiffusionCoreError):
    default_message = "Sample budget exhausted before coverage"


class PartitionError(DiffusionCoreError):
    default_message = "Overlapping double resonance cores"


class DivisorError(DiffusionCoreError):
    default_message = "Vanishing small divisor in the zone"


class SingularityError(DiffusionCoreError):
    default_message = "Slow-fast change is singular"


class DeformationError(DiffusionCoreError):
    default_message = "No nondegenerate deformation found within the tries"


class EllipticPointError(DiffusionCoreError):
    default_message = "Critical point is not hyperbolic"


class BlockFailureError(DiffusionCoreError):
    default_message = "Cone condition failed on the isolating block boundary"


class DivergenceError(DiffusionCoreError):
    default_message = "Graph transform is not contracting"


class MorseViolationError(DiffusionCoreError):
    default_message = "Degenerate critical point; add a generic potential perturbation"


class MetricError(DiffusionCoreError):
    default_message = "Support function maximization failed"


class OptimizationError(DiffusionCoreError):
    default_message = "All restarts failed"


class AssumptionViolationError(DiffusionCoreError):
    default_message = "Saddle assumption check failed"


class OrbitNotFoundError(DiffusionCoreError):
    default_message = "Periodic orbit not found"


class AssemblyError(DiffusionCoreError):
    default_message = "Gap in the energy chain"


class ConfigError(DiffusionCoreError):
    default_message = "Invalid pipeline configuration"


class IntegrityError(DiffusionCoreError):
    default_message = "Artifact hash mismatch"


class UsageError(DiffusionCoreError):
    default_message = "Invalid command usage"
