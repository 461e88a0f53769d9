"""Bundled example frameworks."""

from importlib import resources

from ..model import load_framework


def fixture_names() -> list[str]:
    return sorted(
        p.name[:-5]
        for p in resources.files(__name__).iterdir()
        if p.name.endswith(".json") and not p.name.endswith(".stress.json")
    )


def fixture_path(name: str):
    p = resources.files(__name__) / (name if name.endswith(".json") else f"{name}.json")
    if not p.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}; have {fixture_names()}")
    return p


def load_fixture(name: str):
    return load_framework(fixture_path(name))
