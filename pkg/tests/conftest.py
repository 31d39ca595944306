import pytest

from qcfa.zoo import (
    AnbnParams,
    PalindromeParams,
    build_anbn,
    build_palindrome_3state,
    build_palindrome_single_qubit,
)


@pytest.fixture(scope="session")
def pal3():
    # epsilon 0.5 gives the minimum coin count k = 5
    return build_palindrome_3state(PalindromeParams.from_epsilon(0.5))


@pytest.fixture(scope="session")
def pal3_strict():
    # epsilon 0.01 gives k = 7
    return build_palindrome_3state(PalindromeParams.from_epsilon(0.01))


@pytest.fixture(scope="session")
def qubit_machine():
    return build_palindrome_single_qubit(PalindromeParams.from_epsilon(0.5))


@pytest.fixture(scope="session")
def anbn_machine():
    # epsilon 0.1 gives k = 5
    return build_anbn(AnbnParams.from_epsilon(0.1))
