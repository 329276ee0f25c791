"""Pfaffian chains, architecture-only topology bounds, and desk-scale measurements
for feedforward networks with Riccati-class activations."""

__version__ = "0.1.0"

from .activations import (
    RiccatiActivation,
    builtins,
    custom_from_declaration,
    eval_derivative,
    get_activation,
    register_activation,
    riccati_residual,
)
from .bounds import (
    BigBound,
    betti_bound,
    bracket_count,
    gv_bound,
    rankdrop_bound,
    s_count,
    zero_bound,
)
from .chain import (
    ChainFunction,
    PfaffianFormat,
    build_chain,
    chain_values,
    compute_format,
    derive_certificates,
    format_combine,
    verify_chain,
)
from .errors import BudgetError, ConfigError, DomainError, PfaffnetError, ShapeError
from .jets import Jet
from .liegeom import (
    BracketMatrix,
    BracketTerm,
    VectorFieldFamily,
    bracket_eval,
    bracket_matrix,
    enumerate_brackets,
    grushin_family,
    heisenberg_family,
    locus_sample,
    minors,
    rank_at,
)
from .network import (
    LayerTrace,
    NetworkSpec,
    analyticity_check,
    forward,
    forward_batch,
    jet_forward,
    network_from_json,
    network_to_json,
    sample_network,
)
from .polynomials import SparsePoly
from .topology import (
    BettiVector,
    SignGrid,
    ZeroSearchOptions,
    betti_z2,
    components,
    count_zeros_1d,
    sign_grid,
    superlevel_intervals_1d,
)
