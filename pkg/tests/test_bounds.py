import math

import pytest

from pilip.bounds import BoundReport


def test_clamps_heuristic_into_bracket():
    rep = BoundReport(1.0, 5.0, 2.0)
    assert rep.certified_lower == 1.0
    assert rep.heuristic_lower == 2.0  # clamped to the upper end
    rep = BoundReport(1.0, 0.5, 2.0)
    assert rep.heuristic_lower == 1.0  # clamped to the lower end


def test_clamps_lower_to_upper():
    rep = BoundReport(3.0, 3.0, 2.0)
    assert rep.certified_lower == 2.0
    assert rep.certified_upper == 2.0


def test_negative_values_clamped_to_zero():
    rep = BoundReport(-1.0, -0.5, 4.0)
    assert rep.certified_lower == 0.0
    assert rep.heuristic_lower == 0.0


def test_infinite_upper_allowed():
    rep = BoundReport(1.0, 2.0, math.inf)
    assert math.isinf(rep.certified_upper)
    assert rep.heuristic_lower == 2.0


def test_nan_rejected():
    with pytest.raises(ValueError):
        BoundReport(math.nan, 0.0, 1.0)


def test_width_and_contains():
    rep = BoundReport(1.0, 1.5, 2.0)
    assert rep.width == 1.0
    assert rep.contains(1.5)
    assert not rep.contains(2.5)
    assert rep.contains(2.02, slack=0.02)


def test_to_dict_keys():
    d = BoundReport(0.0, 0.0, 1.0, method="x", detail={"k": 1}).to_dict()
    assert set(d) == {"certified_lower", "heuristic_lower", "certified_upper",
                      "method", "detail"}
