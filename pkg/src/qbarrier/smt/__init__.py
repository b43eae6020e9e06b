from .encode import SMTQuery, StructConstraint, conditions_for, encode_condition
from .run import (
    SolverToolError,
    Verdict,
    VerificationReport,
    run_solver,
    verify_certificate,
)

__all__ = [
    "SMTQuery",
    "StructConstraint",
    "conditions_for",
    "encode_condition",
    "Verdict",
    "VerificationReport",
    "SolverToolError",
    "run_solver",
    "verify_certificate",
]
