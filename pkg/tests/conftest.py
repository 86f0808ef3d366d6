from __future__ import annotations

import pytest

from nilcarnot.carnot import decompose
from nilcarnot.catalog import engel4, engel_heis7, heisenberg3, heisprod4, ladder5


@pytest.fixture(scope="session")
def heis():
    return heisenberg3()


@pytest.fixture(scope="session")
def engel():
    return engel4()


@pytest.fixture(scope="session")
def eh7():
    return engel_heis7()


@pytest.fixture(scope="session")
def hp4():
    return heisprod4()


@pytest.fixture(scope="session")
def l5():
    return ladder5()


@pytest.fixture(scope="session")
def dec_eh7(eh7):
    return decompose(eh7)


@pytest.fixture(scope="session")
def dec_hp4(hp4):
    return decompose(hp4)


@pytest.fixture(scope="session")
def dec_l5(l5):
    return decompose(l5)
