"""Poincare-metric distortion calculus for one-dimensional maps.

Cross-ratios and the hyperbolic model of the interval, interval-map
descriptors with distortion norms, standard compositions with the uniform
bounded-distortion estimate, cancellation of nearly Moebius stage
distortions, critical circle dynamics, and the pure-singularity
experiments that tie them together.
"""

__version__ = "0.1.0"

from .intervals import (
    EPS_GUARD,
    GUARD_LIMIT,
    Interval,
    PointQuadruple,
    cross_ratio,
    cross_ratio_alt,
    guarded_grid,
    poincare_coordinate,
    poincare_distance,
    poincare_inverse_coordinate,
)
from .maps import (
    AffineMap,
    CompositionMap,
    ConstantNonlinearityMap,
    LinearFractionalMap,
    MapDescriptor,
    PowerLawMap,
    SmoothSampledMap,
    affine_normalizer,
    classical_distortion_norm,
    cubic_perturbation_map,
    distortion_norm,
    evaluate,
    koebe_check,
    nonlinearity,
    nonlinearity_integral,
    poincare_model,
    relocate,
    rho,
    scaled_tangent_map,
    schwarzian,
)
from .compositions import (
    LOG2,
    StandardComposition,
    d1_norm,
    d2_norm,
    extend_domain_dprime,
    normalize_split,
    reshuffle,
    ubdl_verify,
)
from .cancellation import (
    CancellationDecomposition,
    cancellation_verify,
    d_tilde,
    delta_max,
    sigma_composition,
)
from .circle import (
    GOLDEN_MEAN,
    ChainOfIntervals,
    CircleArc,
    CircleMapLift,
    ContinuedFraction,
    DynamicalPartition,
    arnold_map,
    build_chain,
    chain_stage,
    coarseness,
    dynamical_partition,
    find_parameter,
    fineness_order,
    first_return_map,
    renormalization_interval,
    rigid_rotation,
    rotation_number,
    symmetric_neighborhood,
)
from .experiments import (
    ApproximateMap,
    DecayFit,
    DensityProfile,
    ExperimentReport,
    approximate,
    d_tilde_circle,
    delta_circle,
    density_profile,
    fit_decay,
    h_prescription,
    induced_cancellation,
    main_theorem_gap,
    pure_singularity_report,
    standard_chain,
)
