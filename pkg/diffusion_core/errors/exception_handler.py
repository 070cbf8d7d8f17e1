import logging

from diffusion_core.errors import exceptions
from diffusion_core.response import status

logger = logging.getLogger(__name__)


def exit_code_for(exc):
    if isinstance(exc, (exceptions.ConfigError, exceptions.UsageError, FileNotFoundError)):
        return status.EXIT_USAGE_ERROR
    return status.EXIT_STAGE_FAILURE


def report_exception_handler(exc, context=None):
    """
    Uniform envelope for any exception escaping a CLI command.
    """
    code = exit_code_for(exc)
    if isinstance(exc, exceptions.DiffusionCoreError):
        errors = exc.as_dict()
    else:
        logger.exception("unexpected error in %s", (context or {}).get("command", "command"))
        errors = str(exc)

    return {
        "success": False,
        "status_code": code,
        "command": (context or {}).get("command"),
        "errors": errors,
    }
