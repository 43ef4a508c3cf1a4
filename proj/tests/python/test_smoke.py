import pytest

import limitlearn as ll


def test_pairing():
    # (1 + 3)(1 + 3 + 1) / 2 + 3
    assert ll.pair(1, 3) == 13
    assert ll.unpair(13) == (1, 3)


def test_descriptor_prefix():
    assert ll.prefix("01~1", 5) == "01111"
    assert ll.prefix("~10", 5) == "10101"


def test_exact_and_approx_relations():
    assert ll.decide_exact("E0", "0110~0", "~0")
    assert not ll.decide_exact("E0", "~0", "~01")
    assert ll.approx("E0", "~0", "1~0", horizon=256)["verdict"] == ll.approx("E0", "~0", "~0", horizon=256)["verdict"]
    assert ll.approx("E0", "~0", "~1", horizon=256)["verdict"] == "separated"


def test_identity_pipeline():
    assert "identity" in ll.operator_names()
    assert ll.apply_pipeline(["identity"], "011010") == "011010"


def test_learner_trace():
    rows = ll.learn(["omega", "zeta"], "omega", seed=3, horizon=2000, window=200)
    assert len(rows) == 2001
    v = ll.stabilization(rows, 200)
    assert v["index"] == 0


def test_empty_suite(tmp_path):
    res = ll.run_suite({"trials": []}, tmp_path)
    assert res["exit_code"] == 0


def test_errors_surface():
    with pytest.raises(ll.LimitlearnError):
        ll.decide_exact("NOPE", "~0", "~0")
