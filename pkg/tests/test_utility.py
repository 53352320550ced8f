import math

import pytest

from ambisense.models import ContractError, gamma_choice, seu_reference, subjective_utility

from conftest import option


def test_utility_symmetric_cancellation():
    o = option("a", gain=10, loss=10, p_success=0.5, p_detect=0.5)
    assert subjective_utility(o, 1.0) == 0.0


def test_utility_lambda_two():
    o = option("a", gain=10, loss=10, p_success=0.5, p_detect=0.5)
    assert subjective_utility(o, 2.0) == pytest.approx(-5.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 3.0, 17.0])
def test_utility_without_loss_ignores_lambda(lam):
    o = option("a", gain=7, loss=0, p_success=0.3, p_detect=0.9)
    assert subjective_utility(o, lam) == pytest.approx(2.1, abs=1e-12)


def test_utility_rejects_unknown_probability():
    with pytest.raises(ContractError):
        subjective_utility(option("a", p_success=None, p_detect=0.1), 1.0)
    with pytest.raises(ContractError):
        subjective_utility(option("a", p_success=0.4, p_detect=None), 1.0)


def test_gamma_values():
    assert gamma_choice(0.3, 0.3, 4.0) == 0.5
    assert gamma_choice(1, 0, 1) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
    assert gamma_choice(1, 0, 1) == pytest.approx(0.7310586, abs=1e-6)
    assert gamma_choice(0, 1, 2) == pytest.approx(0.1192029, abs=1e-6)


def test_gamma_saturates_without_overflow():
    assert gamma_choice(1e6, 0, 10) == 1.0
    assert gamma_choice(-1e6, 0, 10) == 0.0


def test_gamma_needs_positive_mu():
    with pytest.raises(ValueError):
        gamma_choice(1, 0, 0)


def test_seu_reference_examples():
    assert seu_reference(option("k", gain=10, loss=10, p_success=0.9, p_detect=0.1)) == pytest.approx(8.0, abs=1e-12)
    assert seu_reference(option("u", gain=20, loss=10, p_success=None, p_detect=None)) == pytest.approx(5.0, abs=1e-12)
    assert seu_reference(option("z", gain=0, loss=0, p_success=None, p_detect=None)) == 0.0


def test_option_validation():
    with pytest.raises(ValueError):
        option("x", gain=-1)
    with pytest.raises(ValueError):
        option("x", p_success=1.5)
    with pytest.raises(ValueError):
        option("x", n_uses=1, n_successes=2)
