import numpy as np
import pytest

from qrekit.game import Game, build_paradox_game, build_prism_game


@pytest.fixture(scope="session")
def prism() -> Game:
    return build_prism_game()


@pytest.fixture(scope="session")
def paradox3() -> Game:
    return build_paradox_game(3, (2,))


def random_game(rng: np.random.Generator, counts=(3, 2)) -> Game:
    payoffs = rng.normal(size=(len(counts), *counts)) * 10.0
    return Game(tuple(counts), payoffs)
