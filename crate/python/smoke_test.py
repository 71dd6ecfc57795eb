# Copyright 2026 Spinorbit Contributors
# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the Python bindings.

Build the extension and put it on the path, e.g.

    cargo build --release -p spinorbit-python --features extension-module
    cp target/release/libspinorbit.so python/spinorbit.so
    python3 python/smoke_test.py
"""

import math
import pathlib
import sys

import spinorbit as so

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol=1e-9):
    assert abs(a - b) < tol, (a, b)


def main():
    assert "hom-scan" in so.scenario_names()

    r = so.run_scenario("entanglement", input="H")
    close(r.metrics["concurrence"], 1.0)
    assert r.summary.startswith("entanglement: C=1.000000")

    r = so.run_scenario("entanglement", noise={"p": 0.1})
    close(r.metrics["concurrence"], 1.0 - 1.5 * 0.1)

    r = so.run_scenario("double-transfer", preset="paper-2009")
    assert 0.935 <= r.metrics["chi_II"] <= 0.965, r.summary

    r = so.run_scenario("hom-scan", delays_ps=[-1.5, 0.0, 1.5])
    assert len(r.scan) == 3 and abs(r.scan[1][1]) < 1e-12

    r = so.run_scenario("coalescence")
    close(r.metrics["gamma"], 2.0)

    circuit = so.Circuit.from_json((ROOT / "circuits" / "fig1.json").read_text())
    biphoton = so.PhotonicState.from_json((ROOT / "circuits" / "biphoton.json").read_text())
    out = circuit.apply(biphoton)
    close(so.outcome_probability(out, "D_A=kA,D_B=kB"), 0.0, 1e-12)
    assert 0.0 < out.success_probability < 1.0

    h = so.PhotonicState.from_modes([("a", "H", 0, 0)])
    assert h.photon_number == 1 and len(h) == 1
    empty = so.Circuit.from_json("[]")
    close(abs(empty.apply(h).inner_product(h)), 1.0)

    s = 1 / math.sqrt(2)
    bell = [s, 0, 0, s]
    rho = so.DensityMatrix.pure(bell)
    close(so.concurrence(rho), 1.0)
    close(so.pure_state_fidelity(rho, bell), 1.0)

    counts = so.run_scenario("entanglement", shots=20000, seed=3)
    assert "mle_converged" in counts.metrics
    assert counts.metrics["fidelity"] > 0.98

    try:
        so.run_scenario("teleport")
    except ValueError as e:
        assert "entanglement" in str(e)
    else:
        raise AssertionError("unknown scenario accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    sys.exit(main())
