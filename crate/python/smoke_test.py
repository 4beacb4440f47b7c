"""Smoke test for the circan extension module.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`, or
`cargo build -p circle-analyticity-py --features extension-module --release`
and point CIRCAN_LIB at the directory holding a copy named circan.so.
"""

import cmath
import os
import sys

if "CIRCAN_LIB" in os.environ:
    sys.path.insert(0, os.environ["CIRCAN_LIB"])

import circan


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    fam = circan.Family("t", "1", -1.1, 1.1)
    report = fam.validate()
    assert report["overall"], report
    assert close(report["a"]["margin"], 0.2, 1e-12)
    assert not circan.Family("t", "1", -0.9, 0.9).validate()["overall"]

    assert circan.extendibility_defect(fam, circan.Function.exp(), 0.3) < 1e-9
    assert close(circan.extendibility_defect(fam, circan.Function.conj(), 0.3), 1.0, 1e-10)

    (lo, hi), = circan.incidence_intervals(fam, 0.4j)
    half = (1 - 0.16) ** 0.5
    assert close(lo, -half, 1e-9) and close(hi, half, 1e-9)
    assert close(circan.fiber_point(fam, 0.0, 0.4j), -2.5j, 1e-12)
    assert circan.fiber_point(fam, 0.0, 0j) is None
    loop, = circan.fiber_loops(fam, 0.4j)
    assert close(loop[0], -0.4j, 1e-8) and close(loop[-1], -0.4j, 1e-8)

    plus, minus = circan.sliding_points(fam, 0.25)
    assert close(plus, 0.25 - 1j, 1e-12) and close(minus, 0.25 + 1j, 1e-12)
    assert circan.case_label(fam, "+", 0.25) == "case1"

    trace = circan.continuation(fam)["trace"]
    kinds = [e["kind"] for e in trace["events"]]
    assert kinds.count("CROSS_INFINITY") == 1, kinds
    assert trace["selected"] is not None

    sq = circan.Function.poly([(2, 0, 1.0)])
    assert circan.dbar_residual(sq, -0.5, 0.5, -0.5, 0.5, 0.1) < 1e-12
    assert close(circan.dbar_residual(circan.Function.conj(), -0.5, 0.5, -0.5, 0.5, 0.1), 2.0, 1e-10)
    assert close(circan.Function.exp()(1j), cmath.exp(1j), 1e-15)

    verdict = circan.verify(fam, circan.Function.exp())["verdict"]
    assert verdict["verdict"] == "consistent-with-holomorphic", verdict
    verdict = circan.verify(fam, circan.Function.conj())["verdict"]
    assert verdict["verdict"] == "hypothesis-fails", verdict

    try:
        circan.Family("t +", "1", 0, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("bad expression accepted")
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
