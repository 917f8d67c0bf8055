"""Smoke test for the carleson_py extension. Run after building it with maturin."""

import math
import sys

import carleson_py as cp


def main():
    heat = cp.System.builtin("heat-neumann", 2000)
    assert len(heat) == 2000
    assert heat.verdict(1.5, 0.0)["classification"] == "admissible"
    assert heat.verdict(1.25, 0.0)["classification"] == "not_admissible"

    parabolic = cp.System.builtin("parabolic-2n", 40)
    assert parabolic.verdict(2.0, -1.0)["classification"] == "admissible"
    assert parabolic.verdict(2.0, -0.5)["classification"] == "not_admissible"

    assert cp.gamma(5.0) == 24.0
    assert abs(cp.gamma(0.5) - math.sqrt(math.pi)) < 1e-14
    assert abs(cp.laplace_exp_power(1.0, 1.0, 1 + 0j) - 0.25) < 1e-15

    r = cp.sectorial([(4 + 1j, 2.0)], 2.0, 2.0)
    assert abs(r["sup"] - 0.5) < 1e-15

    custom = cp.System([-1 + 0.5j, -3 + 0j], [1 + 0j, 0.5j])
    x, norm = custom.infinite_time_map(0.0, 1.0)
    # b_k / (1 - lambda_k) for u = e^{-t}.
    expected = [1 / (2 - 0.5j), 0.5j / 4]
    assert all(abs(a - b) < 1e-12 for a, b in zip(x, expected))
    assert abs(norm - math.sqrt(sum(abs(v) ** 2 for v in expected))) < 1e-12

    norm = heat.operator_norm("hardy", 50)
    assert norm["size"] == 50 and norm["norm"] > 0

    try:
        cp.System.builtin("nope", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown system accepted")

    report = cp.reproduce(heat_modes=2000, parabolic_modes=60)
    for c in report["criteria"]:
        print(f"criterion {c['id']} {c['name']}: {'PASS' if c['passed'] else 'FAIL'}")
    assert report["all_passed"]
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
