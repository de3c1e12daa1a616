"""torapot: toric pluripotential objects at desk scale.

Convex grid potentials, Alexandrov Monge-Ampere measures, constrained
envelopes, model potentials, weighted energies, entropies, and executable
certificates for the inequalities they satisfy.
"""

from .grid import (
    DiscreteMeasure,
    GradientBody,
    GridDomain,
    ModelContext,
    ScalarField,
    build_domain,
    integrate,
    pointwise_max,
    pointwise_min,
    shift,
    sup_rel,
    superlevel_mass,
    uniform_measure,
)
from .convex import (
    DualGrid,
    biconjugate,
    build_dual_grid,
    contact_set,
    hull_structure,
    is_admissible,
    is_convex,
    legendre,
    p_envelope,
)
from .ma import (
    build_context,
    ma_density,
    ma_measure,
    mass,
    mixed_ma,
    perturbed_ma,
    plurifine_restriction,
    slope_excess,
)
from .envelopes import (
    ModelCheck,
    SingularityOrder,
    StabilizationError,
    cutoff,
    is_model,
    model_envelope,
    rooftop,
    singularity_cmp,
)
from .functionals import (
    Weight,
    chi2_from_chi1,
    conj_chi,
    conj_inequality_check,
    conj_pair,
    construct_weight,
    energy_chi,
    entropy,
    rel_entropy,
    tau2_at_one,
    weight_from_table,
    weight_power,
)
from .certificates import (
    Assertion,
    CertificateReport,
    SkodaSurrogate,
    atomic_entropy_demo,
    fit_skoda,
    inclusion_check,
    energy_monotone_certificate,
    mass_profile_bound,
    moreau_smooth,
    plurifine_certificate,
    weight_construction_certificate,
    mt_certificate,
    normalized_below,
    perturbation_scan,
    random_admissible,
    subentropy_check,
)
from .kernels import backend_name

__version__ = "0.1.0"
