import numpy as np
import pytest

from qbarrier import (
    Certificate,
    constant_dynamics,
    eval_real,
    full_sphere,
    full_template,
    parse_region,
    standard_gate,
    tensor,
)
from qbarrier.smt.builtin import parse_problem
from qbarrier.smt.encode import EncodeError, conditions_for, encode_condition


def z_setup(a=-10.0, b=13.0, flavor="finite-horizon"):
    dyn = constant_dynamics(tensor([standard_gate("Z")] * 3))
    init = parse_region(["prob(0) >= 0.9"], 8, "init")
    unsafe = parse_region(["prob(1) >= 0.2"], 8, "unsafe")
    glob = full_sphere(8, "global")
    constants = (
        {"gamma": 4.0, "lam": 5.0, "delta": 0.0, "T": 5}
        if flavor == "finite-horizon"
        else {"gamma": 1.0}
    )
    cert = Certificate(
        template=full_template(8, 2).prefix(2),
        coeff_vectors=(np.array([b, a], dtype=complex),),
        flavor=flavor,
        constants=constants,
        decimals=6,
    )
    return cert, init, unsafe, glob, dyn


def test_finite_horizon_emits_five_conditions():
    cert, *_ = z_setup()
    ids = [s.condition_id for s in conditions_for(cert)]
    assert ids == ["init", "unsafe", "step", "side-drift", "side-margin"]


def test_invariant_condition_ids():
    cert, *_ = z_setup(flavor="invariant")
    ids = [s.condition_id for s in conditions_for(cert)]
    assert ids == ["init", "unsafe", "step", "side-positivity"]


def test_init_query_contains_sphere_and_sorted_declarations():
    cert, init, unsafe, glob, dyn = z_setup()
    q = encode_condition(cert, "init", init, unsafe, glob, dyn)
    text = q.text
    assert "(set-logic QF_NRA)" in text
    decls = [l for l in text.splitlines() if l.startswith("(declare-const")]
    names = [l.split()[1] for l in decls]
    assert names == sorted(names)
    assert any(c.op == "=" for c in q.constraints)  # sphere equation
    # negated condition is strict and last
    assert q.constraints[-1].negated_condition
    assert q.constraints[-1].op == ">"


def test_emission_is_byte_stable():
    cert, init, unsafe, glob, dyn = z_setup()
    a = encode_condition(cert, "init", init, unsafe, glob, dyn).text
    b = encode_condition(cert, "init", init, unsafe, glob, dyn).text
    assert a == b


def test_encoding_round_trip_matches_eval_real():
    cert, init, unsafe, glob, dyn = z_setup()
    q = encode_condition(cert, "init", init, unsafe, glob, dyn)
    problem = parse_problem(q.text)
    negated = problem.constraints[-1]
    rng = np.random.default_rng(21)
    for _ in range(100):
        raw = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps = raw / np.linalg.norm(raw)
        point = {}
        for j in range(8):
            point[f"x{j}"] = amps[j].real
            point[f"y{j}"] = amps[j].imag
        vec = [point.get(nm, 0.0) for nm in problem.names]
        acc = 0.0
        for exps, coef in negated.poly.float_items():
            term = coef
            for i, e in enumerate(exps):
                term *= vec[i] ** e
            acc += term
        # the parser normalizes direction; the signed margin of the negated
        # condition must match B(z) - gamma from the direct evaluation
        margin = (
            acc - float(negated.rhs)
            if negated.op in (">", ">=")
            else float(negated.rhs) - acc
        )
        direct = eval_real(cert, amps) - cert.constants["gamma"]
        assert abs(margin - direct) < 1e-9


def test_z_step_condition_collapses_to_zero_polynomial():
    cert, init, unsafe, glob, dyn = z_setup()
    q = encode_condition(cert, "step", init, unsafe, glob, dyn)
    negated = q.constraints[-1]
    assert not negated.poly.coeffs  # identically zero after substitution


def test_unknown_condition_id_rejected():
    cert, init, unsafe, glob, dyn = z_setup()
    with pytest.raises(EncodeError):
        encode_condition(cert, "k-step", init, unsafe, glob, dyn)


def test_uncertain_step_encoding_declares_parameters():
    from qbarrier.quantum import Dynamics, Schedule, StepMap, hadamard_uncertain

    ug = hadamard_uncertain(0.9, 1.1)
    dyn = Dynamics(
        maps=(StepMap(n=1, factors=((ug, (0,)),)),), schedule=Schedule((0,))
    )
    cert = Certificate(
        template=full_template(2, 2).prefix(2),
        coeff_vectors=(np.array([1.0, -2.0], dtype=complex),),
        flavor="finite-horizon",
        constants={"gamma": 0.0, "lam": 1.0, "delta": 0.5, "T": 1},
        decimals=6,
    )
    init = parse_region(["prob(0) >= 0.9"], 2, "init")
    unsafe = parse_region(["prob(0) <= 0.1"], 2, "unsafe")
    q = encode_condition(cert, "step", init, unsafe, full_sphere(2), dyn)
    assert "u0" in q.declarations  # gate parameter
    assert "v0" in q.declarations  # normalization auxiliary
    ops = [c.op for c in q.constraints]
    assert ops.count("=") >= 2  # sphere plus the normalization equation
