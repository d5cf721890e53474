import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from thinlab.cli import main as thinlab_main  # noqa: E402


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory):
    """Golden CSV artifacts produced through the CLI, once per session."""
    out = tmp_path_factory.mktemp("golden")
    commands = [
        ["thresholds", "--dmax", "5"],
        ["tv-curves", "--step", "0.05"],
        ["box-conditional", "--k", "3", "--step", "0.1"],
        ["box-conditional", "--k", "4", "--step", "0.1"],
        ["box-conditional", "--k", "5", "--step", "0.1"],
    ]
    for cmd in commands:
        assert thinlab_main(["--out", str(out)] + cmd) == 0
    return out
