import numpy as np
import pytest

from qbarrier import (
    Dynamics,
    Schedule,
    SynthesisConfig,
    build_lp,
    constant_dynamics,
    full_sphere,
    full_template,
    parse_region,
    recheck_solution,
    sample_scenarios,
    solve_lp,
    standard_gate,
    synthesis_loop,
    tensor,
)
from qbarrier.lp import (
    LPError,
    LPProblem,
    NoCandidateError,
    ScenarioLP,
    Scenarios,
    extract_certificate,
)
from qbarrier.quantum import fixed_step


def z3_dynamics():
    return constant_dynamics(tensor([standard_gate("Z")] * 3))


def z3_regions():
    return (
        parse_region(["prob(0) >= 0.9"], 8, "init"),
        parse_region(["prob(1) >= 0.2"], 8, "unsafe"),
        full_sphere(8, "global"),
    )


def test_invariant_flavor_has_exactly_3n_rows():
    init, unsafe, glob = z3_regions()
    for n in (50, 173):
        cfg = SynthesisConfig(flavor="invariant", degree=2, samples=n, seed=2)
        scen = sample_scenarios(init, unsafe, glob, cfg)
        problem = build_lp(full_template(8, 2).prefix(3), z3_dynamics(), cfg, scen)
        assert problem.n_rows == 3 * n


def test_solve_trivial_bounded_lp():
    problem = LPProblem(
        a_ub=np.array([[1.0]]),
        b_ub=np.array([1.0]),
        bounds=[(None, None)],
        objective=np.array([1.0]),
        var_names=["g"],
        families=[("only", 0, 1)],
        flavor="invariant",
    )
    sol = solve_lp(problem)
    assert sol.status == "optimal"
    assert abs(sol.objective - 1.0) < 1e-9


def test_solve_infeasible_pair():
    problem = LPProblem(
        a_ub=np.array([[-1.0], [1.0]]),
        b_ub=np.array([-1.0, 0.0]),  # g >= 1 and g <= 0
        bounds=[(None, None)],
        objective=np.array([1.0]),
        var_names=["g"],
        families=[("rows", 0, 2)],
        flavor="invariant",
    )
    assert solve_lp(problem).status == "infeasible"


def test_finite_horizon_decrement_rows_vanish_for_phase_gates():
    # the evolved probability terms equal the originals, so the step rows
    # carry no coefficient mass beyond the drift variable
    init, unsafe, glob = z3_regions()
    cfg = SynthesisConfig(
        flavor="finite-horizon", degree=2, samples=40, seed=3, horizon=5
    )
    scen = sample_scenarios(init, unsafe, glob, cfg)
    slp = ScenarioLP(full_template(8, 2).prefix(3), z3_dynamics(), cfg, scen)
    problem = slp.build()
    (start, stop), = [
        (s, e) for fam, s, e in problem.families if fam == "step"
    ]
    delta_col = slp.flavor_vars["delta"]
    rows = problem.a_ub[start:stop]
    coef_part = np.delete(rows, delta_col, axis=1)
    assert np.max(np.abs(coef_part)) < 1e-12
    assert np.allclose(rows[:, delta_col], -1.0)


def test_hybrid_kstep_rows_use_schedule_composition():
    cx, cz = standard_gate("CX"), standard_gate("CZ")
    dyn = Dynamics(
        maps=(fixed_step(cx), fixed_step(cz)), schedule=Schedule((0, 1))
    )
    init = parse_region(["prob(0) >= 0.9"], 4, "init")
    unsafe = parse_region(["prob(1)+prob(2)+prob(3) >= 0.5"], 4, "unsafe")
    glob = full_sphere(4, "global")
    cfg = SynthesisConfig(flavor="hybrid", degree=2, samples=25, seed=5, k=2)
    scen = sample_scenarios(init, unsafe, glob, cfg)
    slp = ScenarioLP(full_template(4, 2).prefix(3), dyn, cfg, scen)
    before_T, after_T = slp.kstep_data
    composed = cz.matrix @ cx.matrix
    expected = slp.template.evaluate_terms(scen.global_states @ composed.T)
    assert np.allclose(after_T, expected, atol=1e-12)


def test_returned_solution_rechecks_feasible():
    init, unsafe, glob = z3_regions()
    cfg = SynthesisConfig(
        flavor="finite-horizon", degree=2, samples=300, seed=9, horizon=6
    )
    scen = sample_scenarios(init, unsafe, glob, cfg)
    problem = build_lp(full_template(8, 2).prefix(2), z3_dynamics(), cfg, scen)
    sol = solve_lp(problem)
    assert sol.status == "optimal"
    assert recheck_solution(problem, sol.x) <= 1e-6


def test_extract_requires_positive_objective():
    init, unsafe, glob = z3_regions()
    cfg = SynthesisConfig(flavor="invariant", degree=2, samples=30, seed=4)
    scen = sample_scenarios(init, unsafe, glob, cfg)
    slp = ScenarioLP(full_template(8, 2).prefix(1), z3_dynamics(), cfg, scen)
    problem = slp.build()
    sol = solve_lp(problem)  # constant-only template cannot separate
    assert sol.status != "optimal" or sol.objective < cfg.margin
    with pytest.raises(NoCandidateError):
        extract_certificate(slp, problem, sol)


def test_extracted_certificate_satisfies_rows_and_side_condition():
    init, unsafe, glob = z3_regions()
    cfg = SynthesisConfig(
        flavor="finite-horizon", degree=2, samples=500, seed=11, horizon=6
    )
    scen = sample_scenarios(init, unsafe, glob, cfg)
    slp = ScenarioLP(full_template(8, 2).prefix(2), z3_dynamics(), cfg, scen)
    problem = slp.build()
    sol = solve_lp(problem)
    cert = extract_certificate(slp, problem, sol)
    c = cert.constants
    assert c["gamma"] + c["delta"] * c["T"] < c["lam"]
    assert slp.row_violation(cert) <= 1e-6
    # independent sampled re-check of the final certificate
    from qbarrier.templates import eval_real_batch

    vals_init = eval_real_batch(cert, scen.init_all())
    assert vals_init.max() <= c["gamma"] + 1e-6


def test_template_growth_is_monotone_prefix():
    tmpl = full_template(4, 2)
    prev = set()
    for size in range(1, 8):
        cur = set(t.exponents for t in tmpl.prefix(size).terms)
        assert prev.issubset(cur) and len(cur) == size
        prev = cur


def test_uncertain_dynamics_expand_step_rows_per_parameter_point():
    from qbarrier.quantum import Dynamics, Schedule, StepMap, hadamard_uncertain

    ug = hadamard_uncertain(0.9, 1.1)
    dyn = Dynamics(
        maps=(StepMap(n=1, factors=((ug, (0,)),)),), schedule=Schedule((0,))
    )
    init = parse_region(["prob(0) >= 0.9"], 2, "init")
    unsafe = parse_region(["prob(0) <= 0.1"], 2, "unsafe")
    glob = full_sphere(2, "global")
    n = 40
    cfg = SynthesisConfig(
        flavor="finite-horizon",
        degree=2,
        samples=n,
        seed=6,
        horizon=1,
        uncertainty_samples=5,
    )
    scen = sample_scenarios(init, unsafe, glob, cfg)
    slp = ScenarioLP(full_template(2, 2).prefix(2), dyn, cfg, scen)
    problem = slp.build()
    assert problem.family_rows("step") == 5 * n
    # the loop terminates cleanly on the uncertain job (verdict may be
    # unknown: the gate parameter enters the queries nonlinearly)
    res = synthesis_loop(dyn, init, unsafe, glob, cfg, workdir="/tmp/he-loop")
    assert res.status in ("solved", "unknown", "unsolved")


def test_loop_returns_certificate_only_with_verified_gate():
    dyn = constant_dynamics(standard_gate("Z"))
    init = parse_region(["prob(0) >= 0.9"], 2, "init")
    unsafe = parse_region(["prob(0) <= 0.1"], 2, "unsafe")
    cfg = SynthesisConfig(flavor="invariant", degree=2, samples=150, seed=4)
    res = synthesis_loop(dyn, init, unsafe, full_sphere(2), cfg, workdir="/tmp/zloop")
    assert res.status == "solved"
    assert res.verification is not None and res.verification.overall == "verified"
    assert all(v.status == "unsat" for v in res.verification.verdicts)


def test_flavor_schedule_compatibility_checks():
    cx, cz = standard_gate("CX"), standard_gate("CZ")
    dyn = Dynamics(maps=(fixed_step(cx), fixed_step(cz)), schedule=Schedule((0, 1)))
    init = parse_region(["prob(0) >= 0.9"], 4, "init")
    unsafe = parse_region(["prob(1) >= 0.5"], 4, "unsafe")
    glob = full_sphere(4)
    scen = Scenarios(
        init=np.eye(4, dtype=complex)[:2],
        unsafe=np.eye(4, dtype=complex)[1:3],
        global_states=np.eye(4, dtype=complex),
    )
    cfg = SynthesisConfig(flavor="invariant", degree=2, samples=4, seed=1)
    with pytest.raises(LPError):
        ScenarioLP(full_template(4, 2).prefix(2), dyn, cfg, scen)
    cfg2 = SynthesisConfig(flavor="hybrid", degree=2, samples=4, seed=1, k=3)
    with pytest.raises(LPError):
        ScenarioLP(full_template(4, 2).prefix(2), dyn, cfg2, scen)
