"""Smoke test for the pysymchaos extension.

Build and run from the repository root:

    cargo build -p symchaos-py --release
    cp target/release/libpysymchaos.so python/pysymchaos.so
    python3 python/smoke_test.py
"""

import os
import sys
from fractions import Fraction

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pysymchaos as sc


def main():
    champ = sc.BitStream("champ")
    assert champ.prefix(6) == "010001"
    assert champ.shift(2).bit(0) == champ.bit(2)
    assert sc.BitStream("const0").distance(sc.BitStream("const1"), 8) == (255, 8)
    assert sc.BitStream("prefix(1101,const0)").is_eventually_zero()

    tau = sc.Tau(k=5, gamma="const1")
    assert tau.bit(360) == 0
    assert tau.segment(360) == "PatternTail(m=5, r=1, offset=0)"
    assert tau.prefix(120) == "0" * 120

    div = sc.divergence_check(0, 6)
    assert div["pass"] and int(div["numerator"]) == 2**64 - 1
    coin = sc.coincidence_check(0, 0, 7)
    assert coin["pass"] and coin["numerator"] == "0"
    track = sc.tracking_check(tau, 1, 0, 10)
    assert track["pass"] and track["related"][0]["pass"]

    tent = sc.PwlMap("tent")
    assert tent.eval(Fraction(2, 7)) == Fraction(4, 7)
    assert tent.iterate("1/3", 2) == [Fraction(1, 3), Fraction(2, 3), Fraction(2, 3)]
    assert sc.PwlMap("h").image("-1/2", 0) == (Fraction(0), Fraction(1, 2))
    d = sc.distances("tent", Fraction(2, 7), Fraction(4, 7), 6)
    assert d[:3] == d[3:] == [Fraction(2, 7), Fraction(2, 7), Fraction(4, 7)]

    w = sc.witness_interval(tent, 0, Fraction(3, 10), Fraction(2, 5))
    assert w["verdict"] == "witness-found"
    assert Fraction(w["sup_estimate"]) >= Fraction(1, 2) - Fraction(1, 2**20)
    assert sc.witness_shift(champ, "0110")["verdict"] == "witness-found"

    cert = sc.turbulence(tent.square())
    assert cert["status"] == "certificate"
    assert (cert["i0"]["lo"], cert["i0"]["hi"], cert["i1"]["hi"]) == ("0", "1/2", "1")
    assert sc.implication_pipeline(sc.PwlMap("h"))["status"] == "holds"

    assert not sc.logistic_membership(5, Fraction(1, 2), 1)

    try:
        sc.PwlMap("pwl: (0,0) (1,")
    except ValueError as e:
        assert "parse error at" in str(e)
    else:
        raise AssertionError("bad map spec accepted")
    try:
        tau.bit(2432902008176640000)
    except OverflowError:
        pass
    else:
        raise AssertionError("indexer guard not raised")

    print("pysymchaos smoke test passed")


if __name__ == "__main__":
    main()
