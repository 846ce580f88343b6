import pytest
from click.testing import CliRunner

from repeaterlab import create_cli


@pytest.fixture
def cli():
    return create_cli()


@pytest.fixture
def runner():
    return CliRunner()
