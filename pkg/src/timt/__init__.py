"""Trait-induced scalar fields, merge trees and topological segmentation.

The package turns multi-channel data on structured grids into segmentations
driven by user-defined traits (regions of attribute space).  The pieces:

``grid`` / ``fields``   grids, channels, tensor shape measures
``traits``              trait primitives, boolean composition, induced fields
``mergetree``           merge trees, persistence, simplification, diagrams
``queries``             segmentation extraction from trees
``dictionary``          sparse dictionary learning and atom-trait suggestion
``stability``           distance chain verification between traits
``formats``             on-disk artifacts
``fixtures``            synthetic datasets
``cli`` / ``service``   command line and HTTP front ends
"""

from .grid import GridSpec
from .fields import (
    Channel,
    MultiField,
    ScalarField,
    Sym3Tensor,
    EigenTriple,
    assemble_attribute_space,
    derive_channel,
    max_shear,
    sym3_eigenvalues,
    westin_measures,
)
from .traits import (
    And,
    BoxTrait,
    Leaf,
    Not,
    Or,
    PointTrait,
    PolygonTrait,
    ProductL2,
    SegmentTrait,
    hausdorff_distance,
    induced_distance_field,
)
from .mergetree import (
    MergeTree,
    bottleneck_distance,
    branch_decomposition,
    compute_merge_tree,
    hypervolume_per_pair,
    persistence_diagram,
    persistence_pairs,
    simplify,
)
from .queries import (
    QuerySpec,
    Segment,
    Segmentation,
    run_query,
    segmentation_report,
    validate_segmentation,
)
from .dictionary import (
    Dictionary,
    SparseCodes,
    cluster_atoms,
    ksvd_learn,
    omp_sparse_code,
    sparse_code,
    suggest_atom_traits,
)
from .stability import StabilityReport, sup_norm_diff, verify_stability_chain
from .fixtures import generate_fixture
from .formats import (
    canonical_json,
    load_dataset,
    load_dictionary,
    load_field,
    load_segmentation,
    load_trait,
    load_tree,
    save_dataset,
    save_dictionary,
    save_field,
    save_segmentation,
    save_trait,
    save_tree,
    trait_from_doc,
    trait_to_doc,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "Channel",
    "MultiField",
    "ScalarField",
    "Sym3Tensor",
    "EigenTriple",
    "assemble_attribute_space",
    "derive_channel",
    "max_shear",
    "sym3_eigenvalues",
    "westin_measures",
    "And",
    "BoxTrait",
    "Leaf",
    "Not",
    "Or",
    "PointTrait",
    "PolygonTrait",
    "ProductL2",
    "SegmentTrait",
    "hausdorff_distance",
    "induced_distance_field",
    "MergeTree",
    "bottleneck_distance",
    "branch_decomposition",
    "compute_merge_tree",
    "hypervolume_per_pair",
    "persistence_diagram",
    "persistence_pairs",
    "simplify",
    "QuerySpec",
    "Segment",
    "Segmentation",
    "run_query",
    "segmentation_report",
    "validate_segmentation",
    "Dictionary",
    "SparseCodes",
    "cluster_atoms",
    "ksvd_learn",
    "omp_sparse_code",
    "sparse_code",
    "suggest_atom_traits",
    "StabilityReport",
    "sup_norm_diff",
    "verify_stability_chain",
    "generate_fixture",
    "canonical_json",
    "load_dataset",
    "load_dictionary",
    "load_field",
    "load_segmentation",
    "load_trait",
    "load_tree",
    "save_dataset",
    "save_dictionary",
    "save_field",
    "save_segmentation",
    "save_trait",
    "save_tree",
    "trait_from_doc",
    "trait_to_doc",
    "__version__",
]
