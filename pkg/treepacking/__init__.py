"""treepacking - labeled packings of trees into their powers."""

import os
import subprocess

__version__ = "2026.10.1"

_REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _git_commit() -> str:
    """Short commit id of a source checkout, or "" outside one."""
    if not os.path.exists(os.path.join(_REPO_ROOT, ".git")):
        return ""
    try:
        result = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=1,
            cwd=_REPO_ROOT,
        )
    except (OSError, subprocess.SubprocessError):
        return ""
    return result.stdout.strip() if result.returncode == 0 else ""


def version_string() -> str:
    """The package version with ``-c<commit>`` appended when run from git."""
    commit = _git_commit()
    return f"{__version__}-c{commit}" if commit else __version__


__version_full__ = version_string()
