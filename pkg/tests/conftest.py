from importlib import resources
from pathlib import Path

import pytest

from selene.parser import load_program

CORPUS = Path(str(resources.files("selene") / "corpus"))
PROGRAMS = CORPUS / "programs"
EXPERIMENTS = CORPUS / "experiments"


@pytest.fixture
def corpus_program():
    def load(name: str):
        return load_program(PROGRAMS / f"{name}.sel")

    return load
