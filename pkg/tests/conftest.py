import pytest

from spmdgrid import kernel


@pytest.fixture(params=kernel.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def workdir(tmp_path):
    d = tmp_path / "work"
    d.mkdir()
    return d
