"""Quasi-Poisson structures on twisted conjugacy classes of matrix Lie groups.

Modules:
    lie_core        algebra contexts, invariant forms, involutions, Ad and exp
    double          the double G x G, its split pairing, r-matrix and phi^sigma
    quasi_poisson   bivectors on S, Schouten bracket, invariance and leaves
    btz             the SL(2, R) chart, calibration, quotient and leaf tracing
    verify          seeded invariant suites producing JSON reports
    cli             the ``qplab`` command
"""

from importlib import resources

from .lie_core import LieContext, make_context, make_involution
from .double import QuasiTriple
from .verify import run_suite

__all__ = ["LieContext", "QuasiTriple", "make_context", "make_involution", "run_suite",
           "report_schema"]


def report_schema() -> dict:
    """The JSON schema that every verification report satisfies."""
    import json
    text = resources.files(__package__).joinpath("schemas/verification_report.schema.json")
    return json.loads(text.read_text(encoding="utf-8"))
