"""Fallback decision engine for the emitted QF_NRA query class.

Reads an SMT-LIB2 file (the subset this package emits: real constants,
polynomial assertions with rational/decimal literals) and adjudicates it:

* queries whose constraints are affine in the squared-magnitude features
  x_j^2 + y_j^2 and in bounded parameters are decided exactly by a rational
  two-phase simplex over the probability simplex, including the touching
  cases strict solvers care about;
* otherwise a structured sampling probe hunts for a satisfying point and an
  interval branch-and-prune pass tries to refute the query; when neither
  succeeds within budget the verdict is unknown.

Sat answers always come with a concrete model; reported models satisfy the
asserted system numerically with the strict assertion violated by more than
1e-9, mirroring the caller's re-check.

The module doubles as a console entry point so it can be invoked through the
same external-command contract as any other solver:

    qbarrier-smt FILE.smt2 [--timeout SECONDS]
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

STRICT_RESOLUTION = Fraction(1, 10 ** 9)


class SmtParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# s-expression parsing


def tokenize(text: str):
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "()":
            out.append(ch)
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SmtParseError("unterminated quoted symbol")
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def parse_sexprs(text: str):
    tokens = tokenize(text)
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse())
            if pos >= len(tokens):
                raise SmtParseError("unbalanced parentheses")
            pos += 1
            return items
        if tok == ")":
            raise SmtParseError("unexpected ')'")
        return tok

    out = []
    while pos < len(tokens):
        out.append(parse())
    return out


def parse_numeral(expr) -> Fraction:
    """Evaluate a constant numeric expression (rationals, decimals, -, /)."""
    if isinstance(expr, str):
        try:
            return Fraction(expr)
        except ValueError:
            raise SmtParseError(f"not a numeral: {expr!r}") from None
    if not expr:
        raise SmtParseError("empty numeral expression")
    head = expr[0]
    if head == "-" and len(expr) == 2:
        return -parse_numeral(expr[1])
    if head == "/" and len(expr) == 3:
        return parse_numeral(expr[1]) / parse_numeral(expr[2])
    if head == "+":
        return sum((parse_numeral(e) for e in expr[1:]), Fraction(0))
    if head == "*":
        acc = Fraction(1)
        for e in expr[1:]:
            acc *= parse_numeral(e)
        return acc
    raise SmtParseError(f"not a numeral expression: {expr!r}")


class Poly:
    """Polynomial over an indexed variable list with Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs: dict[tuple[int, ...], Fraction] = dict(coeffs or {})

    @staticmethod
    def const(nv, value):
        p = Poly()
        if value:
            p.coeffs[(0,) * nv] = Fraction(value)
        return p

    @staticmethod
    def var(nv, idx):
        e = [0] * nv
        e[idx] = 1
        return Poly({tuple(e): Fraction(1)})

    def add(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly(out)

    def neg(self):
        return Poly({e: -c for e, c in self.coeffs.items()})

    def mul(self, other):
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, Fraction(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly(out)

    def constant_part(self, nv):
        return self.coeffs.get((0,) * nv, Fraction(0))

    def is_constant(self, nv):
        return all(sum(e) == 0 for e in self.coeffs)

    def float_items(self):
        return [(e, float(c)) for e, c in sorted(self.coeffs.items())]


@dataclass
class Constraint:
    poly: Poly
    op: str  # normalized: "<=", "<", "="
    rhs: Fraction


def _expr_to_poly(expr, names: dict[str, int], nv: int) -> Poly:
    if isinstance(expr, str):
        if expr in names:
            return Poly.var(nv, names[expr])
        return Poly.const(nv, parse_numeral(expr))
    head = expr[0]
    args = expr[1:]
    if head == "+":
        acc = Poly.const(nv, 0)
        for a in args:
            acc = acc.add(_expr_to_poly(a, names, nv))
        return acc
    if head == "-":
        if len(args) == 1:
            return _expr_to_poly(args[0], names, nv).neg()
        acc = _expr_to_poly(args[0], names, nv)
        for a in args[1:]:
            acc = acc.add(_expr_to_poly(a, names, nv).neg())
        return acc
    if head == "*":
        acc = Poly.const(nv, 1)
        for a in args:
            acc = acc.mul(_expr_to_poly(a, names, nv))
        return acc
    if head == "/":
        acc = _expr_to_poly(args[0], names, nv)
        for a in args[1:]:
            d = parse_numeral(a)
            acc = Poly({e: c / d for e, c in acc.coeffs.items()})
        return acc
    if head == "^":
        base = _expr_to_poly(args[0], names, nv)
        power = parse_numeral(args[1])
        if power.denominator != 1 or power < 0:
            raise SmtParseError(f"unsupported exponent {power}")
        acc = Poly.const(nv, 1)
        for _ in range(int(power)):
            acc = acc.mul(base)
        return acc
    raise SmtParseError(f"unsupported operator {head!r}")


@dataclass
class Problem:
    names: list[str]
    constraints: list[Constraint]

    @property
    def nv(self) -> int:
        return len(self.names)


def parse_problem(text: str) -> Problem:
    forms = parse_sexprs(text)
    declared: list[str] = []
    raw_asserts = []
    for form in forms:
        if not isinstance(form, list) or not form:
            continue
        head = form[0]
        if head in ("declare-const", "declare-fun"):
            declared.append(form[1])
        elif head == "assert":
            raw_asserts.append(form[1])
    names = {n: i for i, n in enumerate(declared)}
    nv = len(declared)
    constraints: list[Constraint] = []

    def add(expr):
        if isinstance(expr, list) and expr and expr[0] == "and":
            for sub in expr[1:]:
                add(sub)
            return
        if not isinstance(expr, list) or expr[0] not in ("<=", ">=", "<", ">", "="):
            raise SmtParseError(f"unsupported assertion {expr!r}")
        op = expr[0]
        lhs = _expr_to_poly(expr[1], names, nv)
        rhs = _expr_to_poly(expr[2], names, nv)
        diff = lhs.add(rhs.neg())  # lhs - rhs OP 0
        rhs_c = -diff.constant_part(nv)
        body = Poly({e: c for e, c in diff.coeffs.items() if sum(e) > 0})
        if op == ">=":
            body, rhs_c, op = body.neg(), -rhs_c, "<="
        elif op == ">":
            body, rhs_c, op = body.neg(), -rhs_c, "<"
        constraints.append(Constraint(poly=body, op=op, rhs=rhs_c))

    for a in raw_asserts:
        add(a)
    return Problem(names=declared, constraints=constraints)


# ---------------------------------------------------------------------------
# exact rational simplex


class Simplex:
    """Two-phase tableau simplex with Bland's rule over Fractions.

    Variables are nonnegative; rows are equalities after the caller adds
    slack variables. Used on tiny systems, so clarity beats speed.
    """

    def __init__(self, a_rows, b_vals, n_vars):
        self.m = len(a_rows)
        self.n = n_vars
        self.rows = [list(r) for r in a_rows]
        self.b = list(b_vals)
        for i in range(self.m):
            if self.b[i] < 0:
                self.rows[i] = [-x for x in self.rows[i]]
                self.b[i] = -self.b[i]

    def solve(self, objective):
        """Maximize objective . x subject to rows == b, x >= 0.

        Returns (status, value, point) where status is "optimal",
        "infeasible", or "unbounded".
        """
        m, n = self.m, self.n
        # phase 1: artificials
        t = [row + [Fraction(int(i == j)) for j in range(m)] + [self.b[i]] for i, row in enumerate(self.rows)]
        basis = [n + i for i in range(m)]
        cost = [Fraction(0)] * n + [Fraction(1)] * m + [Fraction(0)]
        self._price_out(t, basis, cost)
        val = self._iterate(t, basis, cost, n + m)
        if -val > 0:
            return "infeasible", None, None
        # drive out remaining artificials where possible
        for i in range(m):
            if basis[i] >= n:
                piv = next((j for j in range(n) if t[i][j] != 0), None)
                if piv is not None:
                    self._pivot(t, basis, i, piv)
        # phase 2
        rows2 = []
        for i in range(m):
            if basis[i] >= n:
                continue  # zero row
            rows2.append(t[i][:n] + [t[i][-1]])
        basis2 = [b for b in basis if b < n]
        t2 = rows2
        cost2 = [-Fraction(c) for c in objective] + [Fraction(0)]
        self._price_out(t2, basis2, cost2)
        val = self._iterate(t2, basis2, cost2, n)
        if val is None:
            return "unbounded", None, None
        point = [Fraction(0)] * n
        for i, bv in enumerate(basis2):
            point[bv] = t2[i][-1]
        return "optimal", val, point

    @staticmethod
    def _price_out(t, basis, cost):
        for i, bv in enumerate(basis):
            if cost[bv]:
                f = cost[bv]
                for j in range(len(cost)):
                    cost[j] -= f * t[i][j] if j < len(t[i]) else 0
        # note: cost has same length as rows plus rhs

    @staticmethod
    def _pivot(t, basis, i, j):
        piv = t[i][j]
        t[i] = [x / piv for x in t[i]]
        for r in range(len(t)):
            if r != i and t[r][j]:
                f = t[r][j]
                t[r] = [a - f * b for a, b in zip(t[r], t[i])]
        basis[i] = j

    def _iterate(self, t, basis, cost, width):
        guard = 0
        while True:
            guard += 1
            if guard > 20000:
                raise RuntimeError("simplex iteration guard tripped")
            enter = next((j for j in range(width) if cost[j] < 0), None)
            if enter is None:
                return cost[-1]
            ratios = [
                (t[i][-1] / t[i][enter], basis[i], i)
                for i in range(len(t))
                if t[i][enter] > 0
            ]
            if not ratios:
                return None  # unbounded
            _, _, leave = min(ratios, key=lambda z: (z[0], z[1]))
            self._pivot(t, basis, leave, enter)
            f = cost[enter]
            if f:
                for j in range(len(cost)):
                    cost[j] -= f * (t[leave][j] if j < len(t[leave]) else 0)
        # unreachable


def solve_linear_system(eqs, les, strict, n_vars, var_free):
    """Decide a linear system over variables, maximizing strict slack.

    eqs/les/strict: lists of (coeff list, rhs Fraction). Free variables are
    split into differences of nonnegatives. Returns (status, point) where
    status is "sat", "unsat", or "margin" (feasible closed system but strict
    slack below resolution).
    """
    # column layout: for each var: one col (nonneg) or two (free +/-); then s
    col_of = []
    ncols = 0
    for i in range(n_vars):
        if var_free[i]:
            col_of.append((ncols, ncols + 1))
            ncols += 2
        else:
            col_of.append((ncols, None))
            ncols += 1
    s_col = ncols
    has_strict = bool(strict)
    if has_strict:
        ncols += 1

    def expand(coeffs, extra_s):
        row = [Fraction(0)] * ncols
        for i, c in enumerate(coeffs):
            if not c:
                continue
            pos, negc = col_of[i]
            row[pos] += c
            if negc is not None:
                row[negc] -= c
        if extra_s and has_strict:
            row[s_col] = Fraction(1)
        return row

    a_rows, b_vals = [], []
    slack_count = 0
    rows_spec = []
    for coeffs, rhs in eqs:
        rows_spec.append((expand(coeffs, False), rhs, False))
    for coeffs, rhs in les:
        rows_spec.append((expand(coeffs, False), rhs, True))
    for coeffs, rhs in strict:
        rows_spec.append((expand(coeffs, True), rhs, True))
    if has_strict:
        cap = [Fraction(0)] * ncols
        cap[s_col] = Fraction(1)
        rows_spec.append((cap, Fraction(1), True))
    n_slack = sum(1 for _, _, ineq in rows_spec if ineq)
    width = ncols + n_slack
    si = 0
    for row, rhs, ineq in rows_spec:
        full = row + [Fraction(0)] * n_slack
        if ineq:
            full[ncols + si] = Fraction(1)
            si += 1
        a_rows.append(full)
        b_vals.append(rhs)
    objective = [Fraction(0)] * width
    if has_strict:
        objective[s_col] = Fraction(1)
    sx = Simplex(a_rows, b_vals, width)
    status, value, point = sx.solve(objective)
    if status == "infeasible":
        return "unsat", None
    if status == "unbounded":
        # objective is bounded by construction; treat defensively
        return "unknown", None

    def extract(pt):
        vals = []
        for i in range(n_vars):
            pos, negc = col_of[i]
            v = pt[pos] - (pt[negc] if negc is not None else 0)
            vals.append(v)
        return vals

    if not has_strict:
        return "sat", extract(point)
    if value > STRICT_RESOLUTION:
        return "sat", extract(point)
    if value > 0:
        return "margin", None
    return "unsat", None


# ---------------------------------------------------------------------------
# reduction to squared-magnitude features


def _amplitude_pairs(names):
    """Map x<j>/y<j> names to amplitude index j; everything else is a parameter."""
    xs, ys = {}, {}
    for i, n in enumerate(names):
        if len(n) > 1 and n[0] in "xy" and n[1:].isdigit():
            (xs if n[0] == "x" else ys)[int(n[1:])] = i
    indices = sorted(set(xs) & set(ys))
    if sorted(xs) != indices or sorted(ys) != indices:
        return None
    return {j: (xs[j], ys[j]) for j in indices}


def reduce_to_features(problem: Problem):
    """Rewrite constraints as affine forms over (p_j, params) if possible.

    Succeeds only when every monomial is a parameter at degree one, a square
    of one amplitude coordinate matched by its partner with an equal
    coefficient, or a constant. Returns (p_indices, param_indices, rows) or
    None when the query does not fit.
    """
    pairs = _amplitude_pairs(problem.names)
    if pairs is None:
        return None
    amp_vars = {i for x, y in pairs.values() for i in (x, y)}
    params = [i for i in range(problem.nv) if i not in amp_vars]
    p_order = sorted(pairs)
    p_col = {j: k for k, j in enumerate(p_order)}
    u_col = {i: len(p_order) + k for k, i in enumerate(params)}
    width = len(p_order) + len(params)
    rows = []
    for con in problem.constraints:
        coeffs = [Fraction(0)] * width
        squares: dict[int, dict[str, Fraction]] = {}
        for e, c in con.poly.coeffs.items():
            active = [(i, p) for i, p in enumerate(e) if p]
            if not active:
                continue
            if len(active) == 1 and active[0][1] == 1 and active[0][0] in u_col:
                coeffs[u_col[active[0][0]]] += c
                continue
            if len(active) == 1 and active[0][1] == 2 and active[0][0] in amp_vars:
                idx = active[0][0]
                j = next(j for j, (x, y) in pairs.items() if idx in (x, y))
                part = "x" if pairs[j][0] == idx else "y"
                squares.setdefault(j, {})[part] = (
                    squares.setdefault(j, {}).get(part, Fraction(0)) + c
                )
                continue
            return None
        for j, parts in squares.items():
            cx = parts.get("x", Fraction(0))
            cy = parts.get("y", Fraction(0))
            if cx != cy:
                return None
            coeffs[p_col[j]] += cx
        rows.append((coeffs, con.op, con.rhs))
    return p_order, params, rows


def decide_feature_lp(problem: Problem):
    reduced = reduce_to_features(problem)
    if reduced is None:
        return None
    p_order, params, rows = reduced
    n_vars = len(p_order) + len(params)
    var_free = [False] * len(p_order) + [True] * len(params)
    eqs, les, strict = [], [], []
    for coeffs, op, rhs in rows:
        if op == "=":
            eqs.append((coeffs, rhs))
        elif op == "<=":
            les.append((coeffs, rhs))
        else:
            strict.append((coeffs, rhs))
    status, point = solve_linear_system(eqs, les, strict, n_vars, var_free)
    if status == "sat":
        model = {}
        for k, j in enumerate(p_order):
            p = max(point[k], Fraction(0))
            model[f"x{j}"] = math.sqrt(float(p))
            model[f"y{j}"] = 0.0
        for k, i in enumerate(params):
            model[problem.names[i]] = float(point[len(p_order) + k])
        return "sat", model
    if status == "margin":
        return "unknown", None
    if status == "unsat":
        return "unsat", None
    return "unknown", None


# ---------------------------------------------------------------------------
# single-qubit feature relaxation

_D2_FEATURES = (
    "p0", "p1", "s0", "t0", "s1", "t1", "r", "i", "rp", "ip",
    "x0", "y0", "x1", "y1",
)


def _decompose_d2(poly: Poly, idx: dict[str, int]):
    """Rewrite a degree<=2 polynomial over one qubit's coordinates into the
    feature basis: probabilities p_j, bare coordinates (norm-bounded by
    sqrt(p_j) per pair), same-qubit quadratics s_j = x_j^2-y_j^2 and
    t_j = 2 x_j y_j, and cross products r/i (conjugated) and rp/ip
    (unconjugated), each pair norm-bounded by the probabilities."""
    x0, y0, x1, y1 = idx["x0"], idx["y0"], idx["x1"], idx["y1"]
    feats = dict.fromkeys(_D2_FEATURES, 0.0)
    coord_name = {x0: "x0", y0: "y0", x1: "x1", y1: "y1"}
    for e, c in poly.coeffs.items():
        c = float(c)
        active = [(i, p) for i, p in enumerate(e) if p]
        if len(active) == 1 and active[0][1] == 1:
            feats[coord_name[active[0][0]]] += c
        elif len(active) == 1 and active[0][1] == 2:
            i = active[0][0]
            if i == x0:
                feats["p0"] += c / 2; feats["s0"] += c / 2
            elif i == y0:
                feats["p0"] += c / 2; feats["s0"] -= c / 2
            elif i == x1:
                feats["p1"] += c / 2; feats["s1"] += c / 2
            elif i == y1:
                feats["p1"] += c / 2; feats["s1"] -= c / 2
            else:
                return None
        elif len(active) == 2 and active[0][1] == 1 and active[1][1] == 1:
            pair = {active[0][0], active[1][0]}
            if pair == {x0, y0}:
                feats["t0"] += c / 2
            elif pair == {x1, y1}:
                feats["t1"] += c / 2
            elif pair == {x0, x1}:
                feats["r"] += c / 2; feats["rp"] += c / 2
            elif pair == {y0, y1}:
                feats["r"] += c / 2; feats["rp"] -= c / 2
            elif pair == {x0, y1}:
                feats["ip"] += c / 2; feats["i"] -= c / 2
            elif pair == {y0, x1}:
                feats["ip"] += c / 2; feats["i"] += c / 2
            else:
                return None
        else:
            return None
    return feats


def qubit_feature_refute(problem: Problem, deadline: float):
    """Sound unsat test for one-qubit degree-2 queries.

    Eliminates the sphere (p1 = 1 - p0) and bounds every feature pair by its
    exact norm on the sphere; adaptive splitting on p0 then certifies that
    some constraint is infeasible on every piece. Returns "unsat" or None.
    """
    pairs = _amplitude_pairs(problem.names)
    if not pairs or sorted(pairs) != [0, 1] or problem.nv != 4:
        return None
    idx = {
        "x0": pairs[0][0],
        "y0": pairs[0][1],
        "x1": pairs[1][0],
        "y1": pairs[1][1],
    }
    rows = []
    saw_sphere = False
    for con in problem.constraints:
        feats = _decompose_d2(con.poly, idx)
        if feats is None:
            return None
        if con.op == "=":
            # accept only the sphere equation p0 + p1 = 1
            clean = (
                abs(feats["p0"] - 1.0) < 1e-12
                and abs(feats["p1"] - 1.0) < 1e-12
                and all(
                    abs(feats[f]) < 1e-12 for f in _D2_FEATURES if f not in ("p0", "p1")
                )
                and abs(float(con.rhs) - 1.0) < 1e-12
            )
            if not clean:
                return None
            saw_sphere = True
            continue
        rows.append((feats, con.op, float(con.rhs)))
    if not saw_sphere:
        return None

    def possible(feats, op, rhs, pl, ph):
        # substitute p1 = 1 - p0 and take the relaxed minimum of the LHS
        lin = [feats["p0"] * p + feats["p1"] * (1.0 - p) for p in (pl, ph)]
        lo = min(lin)
        q = min(max(0.5, pl), ph)
        r_pair = math.sqrt(max(q * (1.0 - q), 0.0))
        lo -= math.hypot(feats["r"], feats["i"]) * r_pair
        lo -= math.hypot(feats["rp"], feats["ip"]) * r_pair
        lo -= math.hypot(feats["s0"], feats["t0"]) * ph
        lo -= math.hypot(feats["s1"], feats["t1"]) * (1.0 - pl)
        lo -= math.hypot(feats["x0"], feats["y0"]) * math.sqrt(ph)
        lo -= math.hypot(feats["x1"], feats["y1"]) * math.sqrt(1.0 - pl)
        if op == "<=":
            return lo <= rhs + 1e-12
        return lo < rhs - 1e-12  # strict

    stack = [(0.0, 1.0)]
    nodes = 0
    while stack:
        nodes += 1
        if nodes > 4000 or time.monotonic() > deadline:
            return None
        pl, ph = stack.pop()
        if all(possible(f, op, rhs, pl, ph) for f, op, rhs in rows):
            if ph - pl < 1e-7:
                return None  # cannot separate; leave to other engines
            mid = (pl + ph) / 2.0
            stack.append((pl, mid))
            stack.append((mid, ph))
    return "unsat"


# ---------------------------------------------------------------------------
# numeric probing and interval refutation


def _constraint_arrays(problem: Problem):
    out = []
    for con in problem.constraints:
        items = con.poly.float_items()
        exps = np.array([e for e, _ in items], dtype=int) if items else np.zeros(
            (0, problem.nv), dtype=int
        )
        coefs = np.array([c for _, c in items])
        out.append((exps, coefs, con.op, float(con.rhs)))
    return out


def _eval_batch(exps, coefs, points):
    if exps.shape[0] == 0:
        return np.zeros(points.shape[0])
    acc = np.zeros(points.shape[0])
    for e, c in zip(exps, coefs):
        term = np.full(points.shape[0], c)
        for i in np.nonzero(e)[0]:
            term = term * points[:, i] ** e[i]
        acc += term
    return acc


def _feasible_mask(arrays, points, strict_margin=1e-9):
    ok = np.ones(points.shape[0], dtype=bool)
    for exps, coefs, op, rhs in arrays:
        vals = _eval_batch(exps, coefs, points)
        if op == "=":
            ok &= np.abs(vals - rhs) <= 1e-9
        elif op == "<=":
            ok &= vals <= rhs
        else:  # "<", strict
            ok &= vals < rhs - strict_margin
    return ok


def _var_bounds(problem: Problem):
    """Interval per variable: amplitudes in [-1, 1]; parameters from any
    single-variable linear constraints, else a wide guard box."""
    nv = problem.nv
    lo = np.full(nv, -1e3)
    hi = np.full(nv, 1e3)
    pairs = _amplitude_pairs(problem.names) or {}
    amp_vars = {i for x, y in pairs.values() for i in (x, y)}
    for i in amp_vars:
        lo[i], hi[i] = -1.0, 1.0
    for con in problem.constraints:
        items = list(con.poly.coeffs.items())
        if len(items) != 1:
            continue
        e, c = items[0]
        active = [(i, p) for i, p in enumerate(e) if p]
        if len(active) != 1 or active[0][1] != 1:
            continue
        i = active[0][0]
        bound = float(con.rhs / c)
        if (c > 0) == (con.op in ("<=", "<")):
            hi[i] = min(hi[i], bound)
        else:
            lo[i] = max(lo[i], bound)
    return lo, hi


def probe_sat(problem: Problem, deadline: float, rng_seed: int = 20240917):
    """Structured randomized hunt for a satisfying point."""
    arrays = _constraint_arrays(problem)
    pairs = _amplitude_pairs(problem.names)
    lo, hi = _var_bounds(problem)
    nv = problem.nv
    rng = np.random.default_rng(rng_seed)
    batch = 256
    rounds = 48
    pj = sorted(pairs) if pairs else []
    d = len(pj)
    for r in range(rounds):
        if time.monotonic() > deadline:
            return None
        pts = np.empty((batch, nv))
        for i in range(nv):
            pts[:, i] = rng.uniform(lo[i], hi[i], batch)
        if d:
            probs = rng.dirichlet(np.ones(d), size=batch)
            if r % 4 == 1:
                corners = rng.integers(0, d, batch)
                probs = np.full((batch, d), 1e-12)
                probs[np.arange(batch), corners] = 1.0
                probs /= probs.sum(axis=1, keepdims=True)
            elif r % 4 == 2:
                probs = rng.dirichlet(np.ones(d) * 0.3, size=batch)
            amp = np.sqrt(probs)
            mode = r % 3
            if mode == 0:
                theta = rng.uniform(0, 2 * math.pi, (batch, d))
            elif mode == 1:
                theta = rng.integers(0, 4, (batch, d)) * (math.pi / 2)
            else:
                theta = np.repeat(rng.uniform(0, 2 * math.pi, (batch, 1)), d, axis=1)
            for k, j in enumerate(pj):
                xi, yi = pairs[j]
                pts[:, xi] = amp[:, k] * np.cos(theta[:, k])
                pts[:, yi] = amp[:, k] * np.sin(theta[:, k])
        ok = _feasible_mask(arrays, pts)
        if ok.any():
            point = pts[np.argmax(ok)]
            return {problem.names[i]: float(point[i]) for i in range(nv)}
    return None


def _interval_eval(exps, coefs, lo, hi):
    tot_lo, tot_hi = 0.0, 0.0
    for e, c in zip(exps, coefs):
        t_lo, t_hi = c, c
        for i in np.nonzero(e)[0]:
            p_lo, p_hi = lo[i], hi[i]
            for _ in range(e[i]):
                cands = (t_lo * p_lo, t_lo * p_hi, t_hi * p_lo, t_hi * p_hi)
                t_lo, t_hi = min(cands), max(cands)
        tot_lo += t_lo
        tot_hi += t_hi
    pad = 1e-12 * (1.0 + abs(tot_lo) + abs(tot_hi))
    return tot_lo - pad, tot_hi + pad


def icp_refute(problem: Problem, deadline: float, max_nodes: int = 20000):
    """Branch-and-prune: "unsat" if every box is refuted, "sat" with a model
    if a center probe lands inside, else "unknown"."""
    arrays = _constraint_arrays(problem)
    pairs = _amplitude_pairs(problem.names) or {}
    amp_vars = sorted(i for x, y in pairs.values() for i in (x, y))
    lo0, hi0 = _var_bounds(problem)
    stack = [(lo0.copy(), hi0.copy())]
    nodes = 0
    while stack:
        nodes += 1
        if nodes > max_nodes or time.monotonic() > deadline:
            return "unknown", None
        lo, hi = stack.pop()
        pruned = False
        for exps, coefs, op, rhs in arrays:
            v_lo, v_hi = _interval_eval(exps, coefs, lo, hi)
            if op == "=" and (v_hi < rhs or v_lo > rhs):
                pruned = True
                break
            if op in ("<=", "<") and v_lo > rhs:
                pruned = True
                break
        if pruned:
            continue
        center = (lo + hi) / 2.0
        if amp_vars:
            norm = math.sqrt(sum(center[i] ** 2 for i in amp_vars))
            if norm > 1e-12:
                for i in amp_vars:
                    center[i] /= norm
        point = center.reshape(1, -1)
        if bool(_feasible_mask(arrays, point)[0]):
            return "sat", {
                problem.names[i]: float(center[i]) for i in range(problem.nv)
            }
        widths = hi - lo
        split = int(np.argmax(widths))
        if widths[split] < 1e-7:
            return "unknown", None
        mid = (lo[split] + hi[split]) / 2.0
        l2, h2 = lo.copy(), hi.copy()
        h2[split] = mid
        stack.append((l2, h2))
        l3, h3 = lo.copy(), hi.copy()
        l3[split] = mid
        stack.append((l3, h3))
    return "unsat", None


# ---------------------------------------------------------------------------
# top-level decision


def solve_problem(problem: Problem, timeout_s: float = 300.0):
    """Returns (status, model|None) with status in {"sat","unsat","unknown"}."""
    deadline = time.monotonic() + min(timeout_s, 30.0)
    nv = problem.nv
    live: list[Constraint] = []
    for con in problem.constraints:
        if con.poly.is_constant(nv):
            val = con.poly.constant_part(nv)
            if con.op == "=":
                holds = val == con.rhs
            elif con.op == "<=":
                holds = val <= con.rhs
            else:
                holds = val < con.rhs
            if not holds:
                return "unsat", None
        else:
            live.append(con)
    if not live:
        return "sat", {}
    trimmed = Problem(names=problem.names, constraints=live)
    result = decide_feature_lp(trimmed)
    if result is not None and result[0] != "unknown":
        return result
    model = probe_sat(trimmed, deadline)
    if model is not None:
        return "sat", model
    if qubit_feature_refute(trimmed, deadline) == "unsat":
        return "unsat", None
    status, icp_model = icp_refute(trimmed, deadline)
    if status == "sat":
        return "sat", icp_model
    if status == "unsat":
        return "unsat", None
    return "unknown", None


def solve_text(text: str, timeout_s: float = 300.0):
    return solve_problem(parse_problem(text), timeout_s)


def solve_file(path: str, timeout_s: float = 300.0):
    with open(path, "r", encoding="utf-8") as fh:
        return solve_text(fh.read(), timeout_s)


def format_model(model: dict[str, float]) -> str:
    lines = ["(model"]
    for name in sorted(model):
        frac = Fraction(model[name]).limit_denominator(10 ** 15)
        lines.append(f"  (define-fun {name} () Real {_frac_text(frac)})")
    lines.append(")")
    return "\n".join(lines)


def _frac_text(fr: Fraction) -> str:
    if fr < 0:
        return f"(- {_frac_text(-fr)})"
    if fr.denominator == 1:
        return str(fr.numerator)
    return f"(/ {fr.numerator} {fr.denominator})"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbarrier-smt", description="decide an emitted QF_NRA query"
    )
    parser.add_argument("file")
    parser.add_argument("--timeout", type=float, default=300.0)
    args = parser.parse_args(argv)
    try:
        status, model = solve_file(args.file, args.timeout)
    except (SmtParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(status)
    if status == "sat" and model is not None:
        print(format_model(model))
    return 0


if __name__ == "__main__":
    sys.exit(main())
