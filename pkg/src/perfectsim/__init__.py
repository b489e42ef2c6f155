"""Perfect simulation of geometrically ergodic Markov chains: dominated
coupling-from-the-past on a Foster-Lyapunov scale, with a validation
testbed that certifies exactness statistically."""

from .certificates import (
    ChainModel,
    ComposedChain,
    FLCertificate,
    MinorizationCertificate,
    SubsamplingVariant,
    choose_subsampling_k,
    dominating_jump_law,
    dominating_jump_survival,
    subsample_certificate,
    threshold_h,
    verify_fl_monte_carlo,
)
from .coupling import RegenSplit, StepRandomness, build_mu, coupled_step, regen_split, subtract_rescale
from .engine import CftpRun, classic_cftp, diagnostics_summary, perfect_sample, sample_many
from .errors import (
    CertificateError,
    DepthCapError,
    IncompatibleMinorizationError,
    InvalidLawError,
    PerfectSimError,
    SupercriticalError,
)
from .measures import (
    CouplingTicket,
    ExpPiece,
    ParetoPiece,
    Prob1D,
    ResidualLaw,
    UniformPiece,
    dominates,
    fixed_point_sigma,
    monotone_coupled_pair,
    ticket_for_value,
)
from .stats import chi_square_gof, ks_one_sample, ks_two_sample
from .testbed import (
    AtomChain,
    CounterexampleChain,
    CounterexampleParams,
    FiniteChain,
    longrun_oracle,
    minimal_dominator_drift,
    partition_class,
)
from .workload import (
    DominatingPath,
    QueueParams,
    equilibrium_u,
    extend_back_to_subthreshold,
    forward_step_u,
    reversed_step_u,
)

__version__ = "0.1.0"

__all__ = [
    "AtomChain",
    "CertificateError",
    "CftpRun",
    "ChainModel",
    "ComposedChain",
    "CounterexampleChain",
    "CounterexampleParams",
    "CouplingTicket",
    "DepthCapError",
    "DominatingPath",
    "ExpPiece",
    "FLCertificate",
    "FiniteChain",
    "IncompatibleMinorizationError",
    "InvalidLawError",
    "MinorizationCertificate",
    "ParetoPiece",
    "PerfectSimError",
    "Prob1D",
    "QueueParams",
    "RegenSplit",
    "ResidualLaw",
    "StepRandomness",
    "SubsamplingVariant",
    "SupercriticalError",
    "UniformPiece",
    "build_mu",
    "chi_square_gof",
    "choose_subsampling_k",
    "classic_cftp",
    "coupled_step",
    "diagnostics_summary",
    "dominates",
    "dominating_jump_law",
    "dominating_jump_survival",
    "equilibrium_u",
    "extend_back_to_subthreshold",
    "fixed_point_sigma",
    "forward_step_u",
    "ks_one_sample",
    "ks_two_sample",
    "longrun_oracle",
    "minimal_dominator_drift",
    "monotone_coupled_pair",
    "partition_class",
    "perfect_sample",
    "regen_split",
    "reversed_step_u",
    "sample_many",
    "subsample_certificate",
    "subtract_rescale",
    "threshold_h",
    "ticket_for_value",
    "verify_fl_monte_carlo",
]
