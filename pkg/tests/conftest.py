import pytest

from blindtrack.ui_model import bundled_model_path, load_model_file


@pytest.fixture(scope="session")
def pacemaker():
    return load_model_file(bundled_model_path())
