"""Numerical laboratory for the detection / false-positive trade-off of
stateful defenses against query-based black-box attacks.

The package provides the feature extractors under study, a threshold
detector over a query buffer, closed-form bounds on the achievable detection
rate, and Monte Carlo experiments that validate each bound at desk scale.
"""

__version__ = "0.1.0"

from .defense import DetectorState, Verdict, check_and_insert, reset, verdicts_to_csv
from .errors import (
    BadRecordLength,
    ChannelMismatch,
    ConfigError,
    DecodeError,
    DimensionMismatch,
    DomainError,
    EmptyDataset,
    EmptyOutput,
    FileMissing,
    FingerprintMismatch,
    MixedDimensions,
    SdtradeError,
    TagMismatch,
    TooSmall,
    WindowTooLarge,
    ZeroEstimate,
    ZeroGradient,
)
from .extractors import (
    BlacklightConfig,
    ExtractorConfig,
    LinearConfig,
    LinearExtractor,
    PihaConfig,
    ToyConfig,
    blacklight_extract,
    config_fingerprint,
    feature_distance,
    linear_extract,
    make_extractor,
    piha_extract,
    toy_quantize,
)
from .features import (
    BitString,
    DigestSet,
    Feature,
    IntVector,
    RealVector,
    feature_from_record,
    feature_to_record,
)
from .imagekit import GrayPlane, Image, gaussian_blur_3x3, lbp, rgb_to_hue, sum_pool
from .sampling import (
    ProjectionConfig,
    RngStream,
    ToyLoss,
    ToyModelConfig,
    loss_and_grad,
    nes_estimate,
    project_gradient,
    sample_natural,
    sample_perturbation,
)
from .theory import (
    BoundInput,
    chi_cdf,
    general_bound,
    gradient_bound,
    projection_tail_bound,
    reg_lower_gamma,
    std_normal_cdf,
    toy_bound,
)
