"""Gas-of-circles contour model: stability analysis, level-set evolution,
polygon energy oracle, and a synthetic detection benchmark."""

__version__ = "0.1.0"

from .interaction import GIntegrals, InteractionParams, KernelValues, QuadratureNotConverged
from .interaction import g_integrals, kernels, phi, phi_double_prime, phi_prime
from .stability import (
    DegenerateG10,
    PriorParams,
    StabilityReport,
    beta_for_minimum,
    e0,
    e1,
    e2,
    extrema_scan,
    validate,
)
from .contour import (
    EnergyBreakdown,
    FourierPerturbation,
    NonPositiveRadius,
    PolyContour,
    build_contour,
    energy,
    taylor_residual,
)
from .likelihood import (
    DegenerateClass,
    ImageGrid,
    LikelihoodParams,
    classify,
    energy_terms,
    fit,
    image_laplacian,
)
from .levelset import (
    BoundaryLoop,
    BoundarySample,
    EmptyRegion,
    EvolveOpts,
    EvolveResult,
    LevelSetField,
    data_force,
    evolve,
    extract_boundary,
    field_from_mask,
    init_shape,
    mask_from_field,
    prior_force,
    redistance,
)
from .synth import (
    BENCH_MARGINS,
    ConstantImage,
    DetectionReport,
    PlacementFailed,
    SceneTruth,
    add_noise,
    bench_prior,
    bench_setup,
    bench_snr,
    extract_mask,
    gen_circles,
    gen_dumbbell,
    rescale01,
    score,
)
from .config import InvalidConfig, RunConfig, config_hash, load_config, parse_config
