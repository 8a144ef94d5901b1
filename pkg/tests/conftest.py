import pytest

from twistnorm import (build_pipeline, build_space, certify, identity_theta,
                       power)


@pytest.fixture(scope="session")
def f2():
    """power(2) with certified constants."""
    return certify(power(2.0), 2.0)


@pytest.fixture(scope="session")
def z2_noenv(f2):
    """The standard twisted space, without its grid envelope."""
    return build_space(f2, identity_theta(), with_envelope=False, label="z2")


@pytest.fixture(scope="session")
def t2_pipe():
    """Renorm pipeline for the scalar square base."""
    return build_pipeline("t2-pipeline")
