import numpy as np

from diffusion_core.errors import exceptions
from diffusion_core.response import status


def to_builtin(value):
    """Convert numpy scalars/arrays and dataclass-like payloads to JSON-ready builtins."""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "as_dict"):
        return to_builtin(value.as_dict())
    return value


class ReportHandlerMixin:
    """Standardized stage report envelopes for pipeline stages and CLI commands.
    Provides methods for success, error, and exception reports.
    Usage:
        class SomeStage(ReportHandlerMixin):
            ...
            def run(self, context):
                try:
                    data = {...}
                    return self.success_report(data=data, message="Tree built")
                except Exception as e:
                    return self.exception_report(e)
    """

    stage_name = None

    def success_report(
        self,
        data=None,
        message="Success",
        status_code=status.EXIT_SUCCESS,
        **kwargs,
    ):
        """Return a standardized success report."""
        report = {
            "success": True,
            "stage": self.stage_name,
            "status": status.STAGE_SUCCESS,
            "message": message,
            "status_code": status_code,
            **kwargs,
        }
        if data is not None:
            report["data"] = to_builtin(data)
        return report

    def error_report(
        self,
        errors=None,
        message="Error",
        status_code=status.EXIT_STAGE_FAILURE,
        **kwargs,
    ):
        """Return a standardized failure report."""
        report = {
            "success": False,
            "stage": self.stage_name,
            "status": status.STAGE_FAILURE,
            "message": message,
            "status_code": status_code,
            **kwargs,
        }
        if errors is not None:
            report["errors"] = to_builtin(errors)
        return report

    def skipped_report(self, message="Skipped", **kwargs):
        """Return a report for a stage that did not run."""
        return {
            "success": True,
            "stage": self.stage_name,
            "status": status.STAGE_SKIPPED,
            "message": message,
            "status_code": status.EXIT_SUCCESS,
            **kwargs,
        }

    def exception_report(self, exc, message=None):
        """Map library and builtin exceptions onto failure reports with witnesses."""
        exception_handlers = {
            exceptions.ConfigError: lambda error: self.error_report(
                message="Configuration Error" if message is None else message,
                errors=error.as_dict(),
                status_code=status.EXIT_USAGE_ERROR,
            ),
            exceptions.UsageError: lambda error: self.error_report(
                message="Usage Error" if message is None else message,
                errors=error.as_dict(),
                status_code=status.EXIT_USAGE_ERROR,
            ),
            exceptions.IntegrityError: lambda error: self.error_report(
                message="Integrity Failure" if message is None else message,
                errors=error.as_dict(),
            ),
            FileNotFoundError: lambda error: self.error_report(
                message="Artifact Not Found" if message is None else message,
                errors=str(error),
                status_code=status.EXIT_USAGE_ERROR,
            ),
            ValueError: lambda error: self.error_report(
                message="Invalid Value" if message is None else message,
                errors=str(error),
            ),
            KeyError: lambda error: self.error_report(
                message="Key Error" if message is None else message,
                errors=f"Missing key: {error}",
            ),
        }

        handler = exception_handlers.get(type(exc))
        if handler:
            return handler(exc)

        if isinstance(exc, exceptions.DiffusionCoreError):
            return self.error_report(
                message=exc.message if message is None else message,
                errors=exc.as_dict(),
            )

        return self.error_report(
            message=f"Internal Error: {exc}" if message is None else message,
            errors=str(exc),
        )
