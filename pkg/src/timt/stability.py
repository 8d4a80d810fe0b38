"""Perturbation bounds linking traits, fields and persistence diagrams.

Moving a trait moves its induced distance field by at most the Hausdorff
distance between the two traits, and the persistence diagram of the
field's merge tree moves by at most the field perturbation.  Both ends
of that chain are computable here:

    bottleneck(diag1, diag2)  <=  sup |h1 - h2|  <=  hausdorff(T1, T2)

The middle inequality holds exactly for point traits; for sampled
Hausdorff estimates one sampling step of slack is added so grid
discretization cannot produce false alarms.  A violated chain indicates
a bug in the distance evaluation or the tree/diagram pipeline, which is
why the verifier is wired into the CLI as a health check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .fields import MultiField, ScalarField
from .mergetree import bottleneck_distance, compute_merge_tree, persistence_diagram
from .traits import TraitExpr, hausdorff_distance, induced_distance_field


def sup_norm_diff(h1: ScalarField, h2: ScalarField) -> float:
    """Largest pointwise gap between two fields on the same grid."""
    if h1.grid != h2.grid:
        raise GridMismatchError("fields live on different grids")
    return float(np.max(np.abs(h1.values - h2.values)))


@dataclass(frozen=True)
class StabilityReport:
    d_hausdorff: float
    hausdorff_exact: bool
    sample_step: float | None
    sup_diff: float
    d_bottleneck: float
    tol: float
    diagram_ok: bool        # d_B <= sup_diff + tol
    field_ok: bool          # sup_diff <= d_H + tol (+ sample step if sampled)
    chain_ok: bool

    def as_dict(self) -> dict:
        return {
            "d_hausdorff": self.d_hausdorff,
            "hausdorff_exact": self.hausdorff_exact,
            "sample_step": self.sample_step,
            "sup_diff": self.sup_diff,
            "d_bottleneck": self.d_bottleneck,
            "tol": self.tol,
            "diagram_ok": self.diagram_ok,
            "field_ok": self.field_ok,
            "chain_ok": self.chain_ok,
        }


def verify_stability_chain(t1: TraitExpr, t2: TraitExpr, mf: MultiField,
                           tol: float = 1e-9, semantics: str = "csg",
                           sampling: float = 0.05) -> StabilityReport:
    """Check both computable inequalities for a pair of traits on a field.

    Evaluates both induced fields on the grid, their merge trees and
    persistence diagrams, and the trait Hausdorff distance.  Errors from
    unsupported trait combinations or oversized diagrams propagate to the
    caller untouched.
    """
    h1 = induced_distance_field(t1, mf, semantics)
    h2 = induced_distance_field(t2, mf, semantics)
    sup = sup_norm_diff(h1, h2)
    d1 = persistence_diagram(compute_merge_tree(h1))
    d2 = persistence_diagram(compute_merge_tree(h2))
    d_b = bottleneck_distance(d1, d2)
    dh = hausdorff_distance(t1, t2, sampling=sampling)
    step = dh.sample_step
    field_slack = tol if step is None else tol + step
    diagram_ok = bool(d_b <= sup + tol)
    field_ok = bool(sup <= dh.value + field_slack)
    return StabilityReport(float(dh.value), step is None, step, sup, d_b,
                           tol, diagram_ok, field_ok,
                           diagram_ok and field_ok)
