from typing import Any, Dict, Optional
import json
import logging
import sys

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import EXIT_OK, EXIT_UNEXPECTED, HyperperiodicError
from hyperperiodic.utils.io_utils import convert_numpy_to_python

logger = logging.getLogger(__name__)


class CommandResult:
    """Standardized command outcome written as JSON when a command fails."""

    def __init__(
        self,
        data: Any = None,
        message: str = "Success",
        exit_code: int = EXIT_OK,
    ):
        self.data = data
        self.message = message
        self.exit_code = exit_code

    def to_dict(self) -> Dict[str, Any]:
        """Convert result to dictionary format."""
        return {
            "success": self.exit_code == EXIT_OK,
            "message": self.message,
            "data": convert_numpy_to_python(self.data),
            "exit_code": self.exit_code,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def create_error_result(
    message: str,
    exit_code: int,
    error_code: Optional[str] = None,
    details: Optional[Dict[str, Any]] = None,
) -> CommandResult:
    """Create a standardized error result."""
    result = CommandResult(
        data={"error_code": error_code, "details": details},
        message=message,
        exit_code=exit_code,
    )
    logger.error(f"Error result: {message}", extra={
        "exit_code": exit_code,
        "error_code": error_code,
        "details": details,
    })
    return result


def handle_command_error(error: Exception, command: str) -> int:
    """Map an exception raised by a command to its exit code and report it on stdout."""
    if isinstance(error, HyperperiodicError):
        logger.error(f"{command} failed: {error.message}", extra={
            "command": command,
            "error_type": type(error).__name__,
            "details": error.details,
        })
        result = create_error_result(
            error.message, error.exit_code, error.error_code, error.details
        )
    else:
        logger.error(f"Unexpected error during {command}: {error}", exc_info=True, extra={
            "command": command,
            "error_type": type(error).__name__,
        })
        detail = str(error) if get_settings().ENVIRONMENT == "development" else None
        result = create_error_result(
            "Internal error", EXIT_UNEXPECTED, "internal_error", {"detail": detail}
        )
    sys.stdout.write(result.to_json() + "\n")
    return result.exit_code
