import pytest

from gull_trainer.configs import ToyModelSpec
from gull_trainer.model import GullModel


@pytest.fixture(scope="session")
def toy_model():
    return GullModel(ToyModelSpec(), seed=7, disc_windows=(256, 512)).double().eval()
