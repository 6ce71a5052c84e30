import pytest


@pytest.fixture
def wav_dir(tmp_path):
    return tmp_path
