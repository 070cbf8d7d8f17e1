import datetime

import numpy as np
import pytest

from diffusion_core.datetime.date_time import make_timezone_aware, report_timestamp
from diffusion_core.errors.exception_handler import exit_code_for, report_exception_handler
from diffusion_core.errors.exceptions import (
    ConfigError,
    ConvexityError,
    IntegrityError,
    UsageError,
)
from diffusion_core.response import status
from diffusion_core.response.mixins import ReportHandlerMixin, to_builtin


class Stage(ReportHandlerMixin):
    stage_name = "tree"


def test_success_envelope():
    report = Stage().success_report(data={"value": np.float64(2.5)}, message="done", artifacts=["a.json"])
    assert report == {
        "success": True,
        "stage": "tree",
        "status": status.STAGE_SUCCESS,
        "message": "done",
        "status_code": 0,
        "artifacts": ["a.json"],
        "data": {"value": 2.5},
    }


def test_skipped_envelope_is_not_a_failure():
    report = Stage().skipped_report(message="not configured")
    assert report["success"]
    assert report["status"] == status.STAGE_SKIPPED
    assert report["status_code"] == status.EXIT_SUCCESS


@pytest.mark.parametrize(
    "exc, code, message",
    [
        (ConfigError("bad", witness={"key": "seed"}), status.EXIT_USAGE_ERROR, "Configuration Error"),
        (UsageError("bad"), status.EXIT_USAGE_ERROR, "Usage Error"),
        (FileNotFoundError("gone"), status.EXIT_USAGE_ERROR, "Artifact Not Found"),
        (IntegrityError("hash"), status.EXIT_STAGE_FAILURE, "Integrity Failure"),
        (ValueError("nan"), status.EXIT_STAGE_FAILURE, "Invalid Value"),
    ],
)
def test_exception_reports_map_exit_codes(exc, code, message):
    report = Stage().exception_report(exc)
    assert not report["success"]
    assert report["status"] == status.STAGE_FAILURE
    assert report["status_code"] == code
    assert report["message"] == message
    assert exit_code_for(exc) == code


def test_library_errors_keep_their_witness():
    exc = ConvexityError("indefinite Hessian", witness={"I": [0.0, 1.0], "eigenvalues": [1.0, -1.0]})
    report = Stage().exception_report(exc)
    assert report["status_code"] == status.EXIT_STAGE_FAILURE
    assert report["message"] == "indefinite Hessian"
    assert report["errors"] == {
        "error": "ConvexityError",
        "message": "indefinite Hessian",
        "witness": {"I": [0.0, 1.0], "eigenvalues": [1.0, -1.0]},
    }


def test_command_handler_envelope():
    report = report_exception_handler(UsageError("unknown check", witness={"unknown": ["x"]}), {"command": "verify"})
    assert report == {
        "success": False,
        "status_code": status.EXIT_USAGE_ERROR,
        "command": "verify",
        "errors": {"error": "UsageError", "message": "unknown check", "witness": {"unknown": ["x"]}},
    }
    assert report_exception_handler(RuntimeError("boom"))["errors"] == "boom"


def test_to_builtin_handles_complex_and_nested_payloads():
    assert to_builtin({1: (np.int64(3), 1 + 2j, np.array([[1.0]]))}) == {"1": [3, [1.0, 2.0], [[1.0]]]}


def test_report_timestamp():
    moment = datetime.datetime(2024, 3, 1, 12, 0, 0)
    assert report_timestamp(now=moment) == "2024-03-01T12:00:00+00:00"
    assert report_timestamp("Asia/Kathmandu", now=moment) == "2024-03-01T17:45:00+05:45"


def test_unknown_timezone_is_a_value_error():
    with pytest.raises(ValueError):
        make_timezone_aware(datetime.datetime(2024, 1, 1), "Mars/Olympus")


def test_aware_moments_are_converted():
    moment = make_timezone_aware(datetime.datetime(2024, 3, 1, 17, 45), "Asia/Kathmandu")
    assert report_timestamp(now=moment) == "2024-03-01T12:00:00+00:00"
