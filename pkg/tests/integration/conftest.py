"""Fixtures for end-to-end command tests."""
import json
import logging
from typing import Any, Callable, Dict, Tuple

import pytest

from hyperperiodic.cli import main


@pytest.fixture(autouse=True)
def restore_logging():
    """main() reconfigures the root logger; put it back after every test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
    root.setLevel(level)


@pytest.fixture
def run_cli(capsys) -> Callable[..., Tuple[int, Dict[str, Any]]]:
    """Run the command line and parse the JSON it writes to stdout."""
    def run(*argv: str) -> Tuple[int, Dict[str, Any]]:
        code = main(["--log-level", "WARNING", *argv])
        out = capsys.readouterr().out
        return code, json.loads(out) if out.strip() else {}
    return run
