import numpy as np
import pytest

from lowdp.audit import audit_mechanism
from lowdp.errors import InvalidParameterError
from lowdp.noise import SeededGenerator


def test_unknown_mechanism_rejected():
    with pytest.raises(InvalidParameterError):
        audit_mechanism("gaussian", 1.0, 100, SeededGenerator(0))


def test_count_audit_within_bound():
    report = audit_mechanism("integer-laplace-count", 1.0, 200_000, SeededGenerator(1))
    assert report["max_log_ratio"] <= report["expected_bound"] + 3 * report["standard_error"]
    assert report["within_bound"]
    # the bound is essentially attained for the integer Laplace mechanism
    assert report["max_log_ratio"] > 0.5 * report["expected_bound"]


def test_identical_inputs_have_no_observable_loss():
    # two runs of the same distribution: log-ratios are pure sampling noise
    gen = SeededGenerator(2)
    from lowdp.noise import sample_integer_laplace

    a = 10 + sample_integer_laplace(1.0, gen.split("x"), size=200_000)
    b = 10 + sample_integer_laplace(1.0, gen.split("y"), size=200_000)
    lo, hi = int(min(a.min(), b.min())), int(max(a.max(), b.max()))
    ca = np.bincount(a - lo, minlength=hi - lo + 1).astype(float)
    cb = np.bincount(b - lo, minlength=hi - lo + 1).astype(float)
    mask = (ca >= 50) & (cb >= 50)
    ratios = np.abs(np.log(ca[mask] / cb[mask]))
    ses = np.sqrt(1 / ca[mask] + 1 / cb[mask])
    assert (ratios <= 4 * ses).all()


def test_doubling_epsilon_doubles_the_observed_bound():
    # the observed loss tracks eps: each audit essentially attains its bound
    small = audit_mechanism("integer-laplace-count", 0.5, 400_000, SeededGenerator(3), min_bin=1000)
    large = audit_mechanism("integer-laplace-count", 1.0, 400_000, SeededGenerator(3), min_bin=1000)
    for eps, report in ((0.5, small), (1.0, large)):
        assert report["max_log_ratio"] >= 0.7 * eps
        assert report["max_log_ratio"] <= eps + 3 * report["standard_error"]
    ratio = large["max_log_ratio"] / small["max_log_ratio"]
    assert 1.4 < ratio < 2.6


def test_covariance_entry_audit():
    report = audit_mechanism("covariance-entry", 1.0, 300_000, SeededGenerator(4))
    assert report["expected_bound"] == pytest.approx(1.0 * 2 / 16)
    assert report["within_bound"]


def test_small_sample_warns_instead_of_failing():
    report = audit_mechanism("integer-laplace-count", 1.0, 500, SeededGenerator(5))
    assert report["warning"] is not None
