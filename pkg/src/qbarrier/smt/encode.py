"""Emission of certificate conditions as SMT-LIB2 problems over QF_NRA.

Each universally quantified condition is negated into an existential search
for a violating state: the query asserts region membership, the unit-sphere
equation, parameter bounds, and the negated condition, all with exact
rational literals. Files are byte-stable given the same certificate and
configuration: declarations are sorted and monomials follow a fixed order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..quantum import Dynamics, Gate, StepMap, UncertainGate
from ..realpoly import (
    ComplexPoly,
    RealPoly,
    amplitude_vars,
    certificate_realpoly,
    constraint_poly,
    linear_substitution_forms,
    sphere_poly,
)
from ..regions import Region
from ..templates import Certificate


class EncodeError(ValueError):
    pass


def rational_sexpr(fr: Fraction) -> str:
    if fr < 0:
        return f"(- {rational_sexpr(-fr)})"
    if fr.denominator == 1:
        return str(fr.numerator)
    return f"(/ {fr.numerator} {fr.denominator})"


def poly_sexpr(poly: RealPoly, names: Sequence[str]) -> str:
    items = sorted(poly.coeffs.items())
    if not items:
        return "0"
    terms = []
    for exps, coeff in items:
        factors = []
        for i, e in enumerate(exps):
            factors.extend([names[i]] * e)
        lit = rational_sexpr(coeff)
        if not factors:
            terms.append(lit)
        elif coeff == 1 and len(factors) == 1:
            terms.append(factors[0])
        else:
            terms.append("(* " + " ".join([lit] + factors) + ")")
    if len(terms) == 1:
        return terms[0]
    return "(+ " + " ".join(terms) + ")"


@dataclass(frozen=True)
class StructConstraint:
    """One assertion kept in structured form for numeric re-checks."""

    poly: RealPoly
    op: str  # "<=", ">=", "<", ">", "="
    rhs: Fraction
    negated_condition: bool = False

    def sexpr(self, names: Sequence[str]) -> str:
        return f"(assert ({self.op} {poly_sexpr(self.poly, names)} {rational_sexpr(self.rhs)}))"

    def holds(self, point: np.ndarray, slack: float = 1e-9) -> bool:
        val = float(self.poly.eval_floats(point.reshape(1, -1))[0])
        rhs = float(self.rhs)
        if self.op == "<=":
            return val <= rhs + slack
        if self.op == ">=":
            return val >= rhs - slack
        if self.op == "<":
            return val < rhs - slack if self.negated_condition else val < rhs + slack
        if self.op == ">":
            return val > rhs + slack if self.negated_condition else val > rhs - slack
        return abs(val - rhs) <= slack


@dataclass(frozen=True)
class SMTQuery:
    """Self-contained negated-condition problem plus structured mirror."""

    condition_id: str
    dim: int
    var_names: tuple[str, ...]
    constraints: tuple[StructConstraint, ...]
    timeout_s: float
    logic: str = "QF_NRA"

    @property
    def declarations(self) -> tuple[str, ...]:
        return tuple(sorted(self._used_names()))

    def _used_names(self) -> set[str]:
        used: set[str] = set()
        for c in self.constraints:
            for exps in c.poly.coeffs:
                for i, e in enumerate(exps):
                    if e:
                        used.add(self.var_names[i])
        return used

    @property
    def text(self) -> str:
        lines = [f"(set-logic {self.logic})"]
        for name in self.declarations:
            lines.append(f"(declare-const {name} Real)")
        for c in self.constraints:
            lines.append(c.sexpr(self.var_names))
        lines.append("(check-sat)")
        lines.append("(get-model)")
        return "\n".join(lines) + "\n"

    def amplitude_point(self, model: dict[str, float]) -> np.ndarray:
        """Assemble the (x, y, extras) vector from a model, zero-filling."""
        return np.array([model.get(name, 0.0) for name in self.var_names])


def _var_names(dim: int, n_params: int, n_aux: int) -> tuple[str, ...]:
    names = [f"x{j}" for j in range(dim)] + [f"y{j}" for j in range(dim)]
    names += [f"u{i}" for i in range(n_params)]
    names += [f"v{i}" for i in range(n_aux)]
    return tuple(names)


def _region_constraints(region: Region, dim: int, nvars: int) -> list[StructConstraint]:
    out = []
    for c in region.constraints:
        out.append(
            StructConstraint(
                poly=constraint_poly(c, dim, nvars), op=c.op, rhs=c.bound_exact
            )
        )
    return out


def _sphere_constraint(dim: int, nvars: int) -> StructConstraint:
    return StructConstraint(poly=sphere_poly(dim, nvars), op="=", rhs=Fraction(1))


def _const_fr(value: float) -> Fraction:
    return Fraction(float(value))


def _symbolic_step_matrix(
    step: StepMap, dim: int, nvars: int, param_base: int, aux_base: int
):
    """Matrix of ComplexPoly entries for a step map, threading uncertainty
    parameters (u vars) and any auxiliary normalization variables (v vars).

    Returns (matrix, extra_constraints, params_used, aux_used).
    """
    mat = [
        [ComplexPoly.constant(nvars, Fraction(int(i == j)), 0) for j in range(2 ** step.n)]
        for i in range(2 ** step.n)
    ]
    extra: list[StructConstraint] = []
    p_used = 0
    a_used = 0
    size = 2 ** step.n
    for f in step.factors:
        if isinstance(f, Gate):
            fmat = [
                [
                    ComplexPoly.constant(
                        nvars,
                        Fraction(float(f.matrix[i, j].real)),
                        Fraction(float(f.matrix[i, j].imag)),
                    )
                    for j in range(size)
                ]
                for i in range(size)
            ]
        else:
            ug, targets = f
            sym = getattr(ug, "symbolic_entries", None)
            if sym is None:
                sym = _KNOWN_SYMBOLIC.get(ug.name)
            if sym is None:
                raise EncodeError(
                    f"uncertain gate {ug.name!r} has no polynomial form for "
                    "SMT encoding"
                )
            small, constraints, n_par, n_aux = sym(
                ug, nvars, param_base + p_used, dim + dim, aux_base + a_used
            )
            p_used += n_par
            a_used += n_aux
            extra.extend(constraints)
            fmat = _lift_symbolic(small, targets, step.n, nvars)
        mat = _matmul_symbolic(fmat, mat, nvars)
    return mat, extra, p_used, a_used


def _lift_symbolic(small, targets, n, nvars):
    m = len(targets)
    size = 2 ** n
    zero = ComplexPoly.constant(nvars, 0, 0)
    full = [[zero for _ in range(size)] for _ in range(size)]
    shifts = [n - 1 - q for q in targets]
    for col in range(size):
        sub = 0
        for sh in shifts:
            sub = (sub << 1) | ((col >> sh) & 1)
        base = col
        for sh in shifts:
            base &= ~(1 << sh)
        for sub_out in range(2 ** m):
            row = base
            for pos, sh in enumerate(shifts):
                if (sub_out >> (m - 1 - pos)) & 1:
                    row |= 1 << sh
            full[row][col] = small[sub_out][sub]
    return full


def _matmul_symbolic(a, b, nvars):
    size = len(a)
    zero = ComplexPoly.constant(nvars, 0, 0)
    out = [[zero for _ in range(size)] for _ in range(size)]
    for i in range(size):
        for k in range(size):
            acc = ComplexPoly.constant(nvars, 0, 0)
            for j in range(size):
                acc = acc.add(a[i][j].mul(b[j][k]))
            out[i][k] = acc
    return out


def _he_symbolic(ug: UncertainGate, nvars, param_index, _unused, aux_index):
    """Polynomial form of the tunable mixing gate: entries (s, s*e; s*e, -s)
    with s the normalization 1/sqrt(1+e^2) introduced as an auxiliary
    variable constrained by s^2*(1+e^2) = 1 and s >= 0."""
    e = RealPoly.variable(nvars, param_index)
    s = RealPoly.variable(nvars, aux_index)
    zero = RealPoly(nvars)
    entries = [
        [ComplexPoly(s, zero), ComplexPoly(s.mul(e), zero)],
        [ComplexPoly(s.mul(e), zero), ComplexPoly(s.scale(-1), zero)],
    ]
    norm = s.mul(s).add(s.mul(s).mul(e).mul(e))
    (lo, hi) = ug.domain[0]
    constraints = [
        StructConstraint(poly=norm, op="=", rhs=Fraction(1)),
        StructConstraint(poly=s, op=">=", rhs=Fraction(0)),
        StructConstraint(poly=e, op=">=", rhs=_const_fr(lo)),
        StructConstraint(poly=e, op="<=", rhs=_const_fr(hi)),
    ]
    return entries, constraints, 1, 1


_KNOWN_SYMBOLIC = {"HE": _he_symbolic}


def _substitute_cert(
    cert: Certificate, offset: int, matrix_polys, dim: int, nvars: int
) -> RealPoly:
    base = certificate_realpoly(cert, offset, extra_vars=nvars - 2 * dim)
    forms: list[RealPoly | None] = [None] * nvars
    for k in range(dim):
        forms[k] = matrix_row_re(matrix_polys, k, dim, nvars)
        forms[dim + k] = matrix_row_im(matrix_polys, k, dim, nvars)
    return base.substitute(forms).snap()


def matrix_row_re(mat, k, dim, nvars) -> RealPoly:
    acc = RealPoly(nvars)
    for j in range(dim):
        entry = mat[k][j]
        acc = acc.add(entry.re.mul(RealPoly.variable(nvars, j)))
        acc = acc.add(entry.im.mul(RealPoly.variable(nvars, dim + j)).scale(-1))
    return acc


def matrix_row_im(mat, k, dim, nvars) -> RealPoly:
    acc = RealPoly(nvars)
    for j in range(dim):
        entry = mat[k][j]
        acc = acc.add(entry.im.mul(RealPoly.variable(nvars, j)))
        acc = acc.add(entry.re.mul(RealPoly.variable(nvars, dim + j)))
    return acc


@dataclass(frozen=True)
class ConditionSpec:
    """Descriptor for one flavor condition checked one query at a time."""

    condition_id: str
    kind: str  # init | unsafe | step | time-shift | k-step | side
    offset: int = 0


def conditions_for(cert: Certificate) -> list[ConditionSpec]:
    """Canonical per-flavor condition list; verification order follows it."""
    flavor = cert.flavor
    if flavor == "invariant":
        return [
            ConditionSpec("init", "init"),
            ConditionSpec("unsafe", "unsafe"),
            ConditionSpec("step", "step"),
            ConditionSpec("side-positivity", "side"),
        ]
    if flavor == "k-inductive":
        return [
            ConditionSpec("init", "init"),
            ConditionSpec("unsafe", "unsafe"),
            ConditionSpec("step", "step"),
            ConditionSpec("k-step", "k-step"),
            ConditionSpec("side-margin", "side"),
        ]
    if flavor == "hybrid":
        k = cert.k
        out = [ConditionSpec("init", "init")]
        out += [ConditionSpec(f"unsafe-t{t}", "unsafe", t) for t in range(k)]
        out += [ConditionSpec(f"step-t{t}", "step", t) for t in range(k)]
        out += [ConditionSpec(f"shift-t{t}", "time-shift", t) for t in range(k)]
        out.append(ConditionSpec("k-step", "k-step"))
        out.append(ConditionSpec("side-margin", "side"))
        return out
    # finite-horizon
    return [
        ConditionSpec("init", "init"),
        ConditionSpec("unsafe", "unsafe"),
        ConditionSpec("step", "step"),
        ConditionSpec("side-drift", "side"),
        ConditionSpec("side-margin", "side"),
    ]


def _threshold(cert: Certificate, kind: str, which: str) -> Fraction:
    c = cert.constants
    dec = cert.decimals

    def f(v):
        return Fraction(format(v, f".{dec}f")) if dec is not None else Fraction(float(v))

    flavor = cert.flavor
    if which == "init":
        return f(c["gamma"]) if flavor == "finite-horizon" else Fraction(0)
    if which == "unsafe":
        if flavor == "invariant":
            return f(c["gamma"])
        if flavor == "finite-horizon":
            return f(c["lam"])
        return f(c["d"])
    if which == "step":
        if flavor == "finite-horizon":
            return f(c["delta"])
        if flavor in ("k-inductive", "hybrid"):
            return f(c["eps"])
        return Fraction(0)
    if which == "time-shift":
        return f(c["gamma"])
    if which == "k-step":
        return Fraction(0)
    raise EncodeError(f"no threshold for {which}")


def _uncertain_step_poly(cert, offset, dyn, t0, count, dim, base_nvars):
    """B after `count` scheduled steps from t0, allowing uncertain factors.

    Allocates u/v variables lazily: two passes, first to count them, then to
    build with the final variable width.
    """
    steps = [dyn.map_at(t0 + i) for i in range(count)]
    n_params = sum(s.n_params for s in steps)
    n_aux = sum(
        sum(1 for f in s.factors if not isinstance(f, Gate)) for s in steps
    )
    nvars = amplitude_vars(dim, n_params + n_aux)
    mat = None
    extra: list[StructConstraint] = []
    p_base, a_base = 2 * dim, 2 * dim + n_params
    for s in steps:
        m, cons, p_used, a_used = _symbolic_step_matrix(s, dim, nvars, p_base, a_base)
        extra.extend(cons)
        p_base += p_used
        a_base += a_used
        mat = m if mat is None else _matmul_symbolic(m, mat, nvars)
    poly = _substitute_cert(cert, offset, mat, dim, nvars)
    return poly, extra, nvars, n_params, n_aux


def encode_condition(
    cert: Certificate,
    spec: ConditionSpec | str,
    init_region: Region,
    unsafe_region: Region,
    global_region: Region,
    dynamics: Dynamics | None,
    timeout_s: float = 300.0,
) -> SMTQuery:
    """Build the negated-condition query for one condition id."""
    if isinstance(spec, str):
        matches = [s for s in conditions_for(cert) if s.condition_id == spec]
        if not matches:
            raise EncodeError(
                f"condition {spec!r} not applicable to flavor {cert.flavor!r}"
            )
        spec = matches[0]
    dim = cert.dim
    k = cert.k
    flavor = cert.flavor
    kind = spec.kind
    t = spec.offset

    if kind == "side":
        c = cert.constants
        zero = RealPoly(0)
        if spec.condition_id == "side-positivity":
            con = StructConstraint(
                poly=RealPoly.constant(0, _threshold(cert, kind, "unsafe")),
                op="<=",
                rhs=Fraction(0),
                negated_condition=True,
            )
        elif spec.condition_id == "side-drift":
            con = StructConstraint(
                poly=RealPoly.constant(0, Fraction(float(c["delta"]))),
                op="<",
                rhs=Fraction(0),
                negated_condition=True,
            )
        else:  # side-margin
            if flavor == "finite-horizon":
                margin = Fraction(float(c["lam"])) - Fraction(float(c["gamma"])) - Fraction(
                    float(c["delta"])
                ) * int(c["T"])
            elif flavor == "hybrid":
                margin = Fraction(float(c["d"])) - k * (
                    Fraction(float(c["eps"])) + Fraction(float(c["gamma"]))
                )
            else:
                margin = Fraction(float(c["d"])) - k * Fraction(float(c["eps"]))
            con = StructConstraint(
                poly=RealPoly.constant(0, margin),
                op="<=",
                rhs=Fraction(0),
                negated_condition=True,
            )
        return SMTQuery(
            condition_id=spec.condition_id,
            dim=dim,
            var_names=(),
            constraints=(con,),
            timeout_s=timeout_s,
        )

    if kind in ("init", "unsafe", "time-shift"):
        nvars = amplitude_vars(dim)
        names = _var_names(dim, 0, 0)
        cons: list[StructConstraint] = []
        if kind == "init":
            cons += _region_constraints(init_region, dim, nvars)
            cons.append(_sphere_constraint(dim, nvars))
            body = certificate_realpoly(cert, 0)
            cons.append(
                StructConstraint(
                    poly=body,
                    op=">",
                    rhs=_threshold(cert, kind, "init"),
                    negated_condition=True,
                )
            )
        elif kind == "unsafe":
            cons += _region_constraints(unsafe_region, dim, nvars)
            cons.append(_sphere_constraint(dim, nvars))
            body = certificate_realpoly(cert, t if flavor == "hybrid" else 0)
            cons.append(
                StructConstraint(
                    poly=body,
                    op="<",
                    rhs=_threshold(cert, kind, "unsafe"),
                    negated_condition=True,
                )
            )
        else:  # time-shift: B_{t+1} - B_t <= gamma over the global region
            cons += _region_constraints(global_region, dim, nvars)
            cons.append(_sphere_constraint(dim, nvars))
            nxt = certificate_realpoly(cert, (t + 1) % k)
            cur = certificate_realpoly(cert, t)
            cons.append(
                StructConstraint(
                    poly=nxt.sub(cur),
                    op=">",
                    rhs=_threshold(cert, kind, "time-shift"),
                    negated_condition=True,
                )
            )
        return SMTQuery(
            condition_id=spec.condition_id,
            dim=dim,
            var_names=names,
            constraints=tuple(cons),
            timeout_s=timeout_s,
        )

    # step and k-step need the dynamics
    if dynamics is None:
        raise EncodeError(f"condition {spec.condition_id!r} needs the dynamics")
    offset = t if flavor == "hybrid" else 0
    count = k if kind == "k-step" else 1
    t0 = 0 if kind == "k-step" else t
    target_offset = 0 if kind == "k-step" and flavor == "hybrid" else offset
    if any(dynamics.map_at(t0 + i).n_params for i in range(count)):
        after, extra, nvars, n_params, n_aux = _uncertain_step_poly(
            cert, target_offset, dynamics, t0, count, dim, amplitude_vars(dim)
        )
        names = _var_names(dim, n_params, n_aux)
    else:
        mat = dynamics.composed_matrix(t0, count)
        nvars = amplitude_vars(dim)
        names = _var_names(dim, 0, 0)
        forms = linear_substitution_forms(mat, dim, nvars)
        after = certificate_realpoly(cert, target_offset).substitute(forms).snap()
        extra = []
    before = certificate_realpoly(
        cert, offset, extra_vars=nvars - 2 * dim
    )
    cons = _region_constraints(global_region, dim, nvars)
    cons.append(_sphere_constraint(dim, nvars))
    cons.extend(extra)
    cons.append(
        StructConstraint(
            poly=after.sub(before),
            op=">",
            rhs=_threshold(cert, kind, kind),
            negated_condition=True,
        )
    )
    return SMTQuery(
        condition_id=spec.condition_id,
        dim=dim,
        var_names=names,
        constraints=tuple(cons),
        timeout_s=timeout_s,
    )
