"""capcloak: targeted-omission attacks on image captioners.

Craft small image perturbations that make a captioning model drop one
chosen object from its caption while still mentioning everything else,
then measure how often that works (removal, retention, and joint
success rates), how close the adversarial captions land to a reference
caption, and how visible the perturbation is.

Typical flow: load a manifest of samples, pick a model bundle, run
FGSM or PGD under a loss variant (label-anchored or caption-anchored),
and aggregate metrics with the harness or the ``capcloak`` CLI.
"""

__version__ = "0.1.0"

from .attacks import (
    AttackConfig,
    FastGradientSign,
    ProjectedGradientDescent,
    attack_from_config,
    clamp_pixels,
    default_config,
    fgsm_attack,
    perturbation_norm,
    pgd_attack,
    project,
    step_direction,
)
from .bundles import (
    ModelBundle,
    StubBundle,
    caption_image,
    cosine_similarity,
    demo_bundle,
    encode_image,
    encode_text,
    load_bundle,
    rigged_similarity_bundle,
)
from .exceptions import (
    CapabilityError,
    CapcloakError,
    CaptionerError,
    ConfigError,
    CoverageError,
    EncoderError,
    ManifestError,
    OptimizationError,
    PipelineError,
    ValidationError,
)
from .harness import (
    CellSpec,
    ExperimentConfig,
    MetricReport,
    emit_report,
    run_experiment,
    sweep_epsilon,
    sweep_lambda1,
)
from .objectives import (
    LossSpec,
    baseline_spec,
    build_objective,
    cap_spec,
    caption_concealment_loss,
    cls_spec,
    concealment_loss,
    label_concealment_loss,
    loss_gradient,
    spec_for_sample,
)
from .records import (
    AttackResult,
    SampleRecord,
    load_image,
    load_manifest,
    save_image,
    save_manifest,
)


__all__ = [
    "__version__",
    "AttackConfig",
    "FastGradientSign",
    "ProjectedGradientDescent",
    "attack_from_config",
    "clamp_pixels",
    "default_config",
    "fgsm_attack",
    "perturbation_norm",
    "pgd_attack",
    "project",
    "step_direction",
    "ModelBundle",
    "StubBundle",
    "caption_image",
    "cosine_similarity",
    "demo_bundle",
    "encode_image",
    "encode_text",
    "load_bundle",
    "rigged_similarity_bundle",
    "CapabilityError",
    "CapcloakError",
    "CaptionerError",
    "ConfigError",
    "CoverageError",
    "EncoderError",
    "ManifestError",
    "OptimizationError",
    "PipelineError",
    "ValidationError",
    "CellSpec",
    "ExperimentConfig",
    "MetricReport",
    "emit_report",
    "run_experiment",
    "sweep_epsilon",
    "sweep_lambda1",
    "LossSpec",
    "baseline_spec",
    "build_objective",
    "cap_spec",
    "caption_concealment_loss",
    "cls_spec",
    "concealment_loss",
    "label_concealment_loss",
    "loss_gradient",
    "spec_for_sample",
    "AttackResult",
    "SampleRecord",
    "load_image",
    "load_manifest",
    "save_image",
    "save_manifest",
]
