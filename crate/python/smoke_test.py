#!/usr/bin/env python3
"""Smoke test for the fga_vqe extension module.

Builds nothing itself: run `cargo build -p fga-vqe-py` (or --release)
first, then `python3 python/smoke_test.py`. The script locates the
compiled cdylib in target/, stages it under a temp dir as fga_vqe.so and
exercises the main entry points.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def import_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libfga_vqe.so", "fga_vqe.so", "libfga_vqe.dylib")
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("extension not built; run: cargo build -p fga-vqe-py")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="fga_vqe_"))
    shutil.copy2(lib, stage / "fga_vqe.so")
    sys.path.insert(0, str(stage))
    import fga_vqe

    return fga_vqe


def main():
    fga = import_module()

    # instance generation and exact oracle
    inst = fga.generate_instance(seed=7, flights=3, gates=4)
    assert inst.n_flights == 3 and inst.n_gates == 4
    round_trip = fga.Instance.from_json(inst.to_json())
    assert round_trip.to_json() == inst.to_json()

    solved = inst.solve_exact()
    assert solved is not None
    min_cost, optima = solved
    assert optima and all(inst.is_feasible(a) for a in optima)
    assert all(inst.total_time(a) == min_cost for a in optima)

    # Hamiltonian encoding agrees with the classical cost
    h = fga.Hamiltonian(inst)
    assert h.n_qubits == 6
    for b in range(2**h.n_qubits):
        a = h.decode(b)
        expected = inst.total_time(a)
        if not h.is_feasible_state(b):
            assert h.energy(b) > expected
        else:
            assert h.energy(b) == expected
    ground_energy, ground_states = h.ground_states()
    assert ground_energy == min_cost
    assert sorted(h.decode(b) for b in ground_states) == sorted(optima)

    # CVaR hand cases
    assert fga.cvar_from_samples([1.0, 2.0, 3.0, 4.0], 0.5) == 1.5
    assert abs(fga.cvar_from_samples([1.0, 2.0, 3.0, 4.0], 1.0) - 2.5) < 1e-12
    assert fga.cvar_exact([0.5, 0.5], [1.0, 3.0], 0.25) == 1.0

    # simulator: normalized state, deterministic sampling
    amps = fga.prepare_state(4, 2, [0.3] * 8)
    assert abs(sum(a * a for a in amps) - 1.0) < 1e-12
    hist1 = fga.sample_state(4, 2, [0.3] * 8, shots=500, seed=1)
    hist2 = fga.sample_state(4, 2, [0.3] * 8, shots=500, seed=1)
    assert hist1 == hist2 and sum(hist1.values()) == 500

    # short exact-mode VQE run converges to the oracle minimum
    result = fga.run_vqe(h, layers=2, epsilon=0.5, shots=None, rng_seed=3)
    assert result["iterations"] <= 50 * h.n_qubits
    best_cvar = min(cvar for _, cvar, _ in result["trace"])
    assert abs(best_cvar - min_cost) < 1e-6, best_cvar

    # inference at the optimized parameters finds the ground state
    inf = fga.run_inference(h, result["final_params"], shots=5000, seed=9)
    assert inf["ground_energy"] == min_cost
    assert inf["ground_mass_empirical"] > 0.3
    assert abs(inf["ground_mass_empirical"] - inf["ground_mass_exact"]) < 0.05

    # fidelity bound sanity
    assert fga.fidelity_upper_bound([0.5, 0.5], [0.5, 0.5]) == 1.0
    assert fga.fidelity_upper_bound([0.5, 0.5], [1.0, 0.0]) == 0.5
    probs = [a * a for a in amps]
    assert fga.fidelity_upper_bound(probs, probs) > 0.999999

    print("smoke test passed")


if __name__ == "__main__":
    main()
