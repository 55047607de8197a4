"""Probability distributions over screw displacements.

Matrix von Mises-Fisher densities on V(2, 3) for the screw axis, truncated
normals for the moment norm and configurations, screw geometry, synthetic
articulation labels, maximum-likelihood fitting and evaluation metrics.
"""
from .distributions import (
    JointScrewDistribution,
    MatrixVMFParams,
    NotOnManifold,
    TruncatedNormalParams,
    VectorVMFParams,
    joint_log_density,
    joint_sample,
    map_raw_parameters,
    mvmf_concentration,
    mvmf_log_density,
    mvmf_mode,
    mvmf_sample,
    truncnorm_log_density,
    truncnorm_sample,
    vvmf_log_density,
    vvmf_sample,
)
from .estimation import (
    FitConfig,
    FitReport,
    fit,
    fit_direct_f,
    fit_vm_soft_ortho,
    nll,
    nll_gradient,
)
from .estimators import DirectFScrewEstimator, ScrewDistributionEstimator, SoftOrthoScrewEstimator
from .geometry import (
    Configuration,
    InconsistentAxis,
    PluckerLine,
    RigidTransform,
    ScrewAxis,
    line_motion_matrix,
    relative_screw_sequence,
    screw_to_transform,
    transform_to_screw,
)
from .metrics import MetricReport, evaluate, maad, screw_loss
from .special import DivergenceWarning, gen_pochhammer, hyp0f1_matrix, log_hyp0f1_grad, partitions, vmf_norm_c3, zonal
from .synthetic import (
    ArticulationSpec,
    LabeledSequence,
    NoiseSpec,
    generate_dataset,
    generate_sequence,
    inject_noise,
)
from .validation import InvalidLabel, check_label_array

__version__ = "0.1.0"
