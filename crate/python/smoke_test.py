"""Smoke test for the pyposcub extension module.

Build and install the module first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pyposcub-*.whl

then run `python python/smoke_test.py`.
"""

import json
import math

import pyposcub as pc


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok   {msg}")


def main():
    square = pc.Domain.cube([0.0, 0.0], 1.0)
    check(square.dimension == 2 and square.contains([0.5, -1.0]), "cube domain")

    trig0 = pc.FunctionSpace.trigonometric(2, 0)
    rule = pc.construct(square, trig0).cubature
    check(len(rule) == 1 and abs(rule.weights[0] - 4.0) < 1e-10, "trig m=0 rule has one node of weight 4")

    p4 = pc.FunctionSpace.algebraic(2, 4)
    built = pc.construct(square, p4)
    rule = built.cubature
    check(len(rule) <= p4.size and min(rule.weights) > 0, f"P_4 rule: N = {len(rule)} <= K = {p4.size}")
    check(all(square.contains(x) for x in rule.nodes), "nodes inside the square")
    check(rule.exactness_residual(p4, built.moments) < 1e-8 * (1 + max(map(abs, built.moments))), "P_4 exactness")
    check(abs(rule.evaluate(lambda x: x[0] ** 2 * x[1] ** 2) - 4.0 / 9.0) < 1e-12, "integrates x^2 y^2")
    check(built.ls_history[-1] >= p4.size and "Steinitz" in built.report, "construction trace")

    ball = pc.Domain.ball([0.0, 0.0, 0.0], 1.0)
    sqrt_w = pc.Weight.radial_power(0.5)
    p2 = pc.FunctionSpace("algebraic", 3, 2)
    built = pc.construct(ball, p2, weight=sqrt_w)
    check(len(built.cubature) <= 10, "weighted 3-ball rule has at most 10 nodes")
    check(abs(built.cubature.weight_sum() - 8 * math.pi / 7) < 1e-8, "weight sum equals 8π/7")

    union = pc.Domain.from_json(json.dumps({
        "type": "union", "disjoint": True,
        "parts": [{"type": "ball", "center": [0, 0], "radius": 1},
                  {"type": "cube", "center": [1.5, 1.5], "radius": 0.5}],
    }))
    built = pc.construct(union, pc.FunctionSpace.algebraic(2, 0), moments="qmc")
    w = built.cubature.weights[0]
    check(abs(w - (math.pi + 1)) <= 3 * built.moment_error, f"union m=0 weight {w:.6f} ~ π+1")

    text = rule.to_json()
    back = pc.Cubature.from_json(text)
    check(back.nodes == rule.nodes and back.weights == rule.weights, "JSON round-trip")
    check(rule.to_csv().splitlines()[0] == "x_1,x_2,w", "CSV header")

    x, wts = pc.gauss_legendre(2)
    check(abs(x[1] - 1 / math.sqrt(3)) < 1e-15 and abs(sum(wts) - 2) < 1e-15, "2-point Gauss-Legendre")
    disk = pc.gauss_legendre_rule(pc.Domain.ball([0.0, 0.0], 1.0), 4)
    check(len(disk) == 32 and abs(disk.weight_sum() - math.pi) < 1e-10, "disk reference rule")

    try:
        pc.Cubature([[0.0, 0.0]], [-1.0])
    except ValueError:
        check(True, "negative weight rejected")
    else:
        check(False, "negative weight rejected")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
