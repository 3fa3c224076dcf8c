"""Instance files shipped with the package."""

from pathlib import Path

DATA_DIR = Path(__file__).parent


def instance_path(name: str = "three_state") -> Path:
    """Path of a packaged instance file, e.g. ``three_state``."""
    path = DATA_DIR / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no packaged instance named {name!r}")
    return path
