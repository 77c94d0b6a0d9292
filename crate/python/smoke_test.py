"""Smoke test for the tomoforge extension module.

Build and install first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import tomoforge


def close(a, b, tol=1e-9):
    return all(abs(x - y) <= tol for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def main():
    assert tomoforge.RNG_FAMILY == "chacha20/sha256-stream-v1"

    rho = tomoforge.random_density(2, 2, seed=7)
    assert abs(sum(rho[i][i] for i in range(2)) - 1) < 1e-12
    assert abs(tomoforge.fidelity(rho, rho) - 1) < 1e-9
    assert tomoforge.trace_distance(rho, rho) < 1e-12

    p = tomoforge.sym_projector(2, 2)
    assert abs(sum(p[i][i] for i in range(4)).real - 3) < 1e-12

    schur = tomoforge.SchurTransform(3, 2)
    dims = sum(spec * weyl for _, spec, weyl in schur.blocks())
    assert dims == 8, dims
    report = schur.validate(probes=3, seed=1)
    assert report["dimension_ok"] and report["unitarity_residual"] < 1e-9
    probs = schur.block_probabilities(rho)
    assert abs(sum(p for _, p in probs) - 1) < 1e-9

    chan = tomoforge.PurificationChannel(2, 2, 2)
    assert chan.projector_identity_residual() < 1e-9
    assert chan.kraus_completeness_residual() < 1e-9
    assert close(chan.apply(rho), chan.final_formula(rho))
    lam, block = chan.sample(rho, seed=3)
    assert sum(lam) == 2 and len(block) == 16

    est = tomoforge.estimate("mix-plus-gps", rho, 2, 3, seed=2)
    assert est["algorithm"] == "mix-plus-gps" and est["lambda"] is not None
    trace = sum(est["estimate"][i][i] for i in range(2))
    assert abs(trace - 1) < 1e-9

    mix = tomoforge.mix_gps_moments(rho, 2, 2)
    plus = tomoforge.mix_plus_gps_moments(rho, 2)
    gap = mix["fitted_swap"] - plus["fitted_swap"]
    assert abs(gap - (2 - plus["expected_length"]) / 4) < 1e-9

    check = tomoforge.purify_check(rho, 2, 2, samples=2000, seed=4)
    assert check["mc_trace_distance"] < check["mc_bound"]

    pgm = tomoforge.pgm_check(2, 1, 2, samples=2000, adjoint_probes=3, seed=5)
    assert pgm["adjoint_lemma_max_residual"] < 1e-9

    avg = tomoforge.run_k_entangled(rho, 8, 2, seed=6)
    assert abs(sum(avg[i][i] for i in range(2)) - 1) < 1e-9

    rows = tomoforge.run_shadows(rho, [("I", [[1, 0], [0, 1]])], n_prime=3, k_mom=3, seed=8)
    assert rows[0]["abs_error"] < 1e-9

    try:
        tomoforge.estimate("gps", rho, 1, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("pure-only algorithm accepted a mixed state")

    print("tomoforge python smoke test: ok")


if __name__ == "__main__":
    main()
