"""Smoke test for the ptrdp extension module.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math
import random

import ptrdp

EPS, DELTA, TAU = 1.0, 0.05, 0.05
R = math.sqrt(2.0)
L = 1.0 / (math.e * math.sqrt(2.0 * math.pi))


def main():
    rng = random.Random(7)
    data = [rng.gauss(0.0, 1.0) for _ in range(10_000)]

    s = ptrdp.Sample(data)
    assert len(s) == 10_000 and s.ell == 5000
    assert s.order_stat(s.ell) == ptrdp.empirical_median(data) == s.sorted()[s.ell - 1]
    assert s.values() == data and repr(s) == "Sample(n=10000)"

    c = ptrdp.compute_c(EPS, DELTA, TAU)
    assert abs(c - 14.3295) < 1e-3, c
    eta = ptrdp.median_eta(10_000, R, L, EPS, DELTA, TAU)

    small = [0.0, 0.0, 3.0, 6.0, 6.0, 9.0]
    assert ptrdp.breakdown_stat(small, 3.5, rule="endpoint") == ptrdp.breakdown_stat_oracle(small, 3.5) == 3
    assert ptrdp.breakdown_stat(small, 3.5) <= 3

    a = ptrdp.dp_median(s, R, L, EPS, DELTA, TAU, seed=1)
    b = ptrdp.dp_median(data, R, L, EPS, DELTA, TAU, seed=1)
    assert a == b and a["seed"] == 1
    assert abs(a["eta_used"] - eta) < 1e-15
    assert a["outcome"] != "no_reply" and abs(a["outcome"]) < a["theoretical_bound"]
    print(f"dp_median: {a['outcome']:.4f} (bound {a['theoretical_bound']:.4f})")

    try:
        ptrdp.dp_median(data[:50], R, L, EPS, DELTA, TAU, seed=1)
    except ptrdp.PreconditionError as e:
        print(f"small sample rejected: {e}")
    else:
        raise AssertionError("expected PreconditionError")

    rho = (2.0 * math.sqrt(2.0 / math.pi)) ** (1.0 / 3.0)
    big = [rng.gauss(0.0, 1.0) for _ in range(65_536)]
    m = ptrdp.dp_mom(big, 1.0, rho, 256, EPS, DELTA, TAU, seed=2)
    d = ptrdp.dp_mom_density(big, 1.0, rho, 256, EPS, DELTA, TAU, seed=2)
    assert abs(ptrdp.mom_density_eta(65_536, 256, 1.0, 1.0, EPS, DELTA, TAU) - 0.430305) < 1e-5
    assert len(ptrdp.block_means(big, 256)) == 256
    assert ptrdp.mom_eta(65_536, 256, 1.0, rho, EPS, DELTA, TAU) == m["eta_used"]
    assert abs(ptrdp.mom_point_estimate(big, 256)) < 0.05
    print(f"dp_mom: {m['outcome']}, dp_mom_density: {d['outcome']}")

    sim = ptrdp.simulate("normal", [0.0, 1.0], "median", 2000, EPS, DELTA, TAU, trials=100, seed=3)
    print(f"simulate: coverage {sim['coverage']['rate']:.2f}, no-reply {sim['noreply']['rate']:.2f}")

    audit = ptrdp.audit("laplace-sum", EPS, DELTA, trials=20_000, seed=4)
    assert audit["report"]["epsilon_hat"] < EPS + 0.2
    print(f"audit laplace-sum: eps_hat {audit['report']['epsilon_hat']:.3f}")
    print("ok")


if __name__ == "__main__":
    main()
