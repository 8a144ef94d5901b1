"""Twisted Orlicz sequence-space norms, envelopes and renorming toolkit.

Layers, bottom up:

- ``scalarfn``  — scalar Orlicz functions and their certified constants;
- ``youngmap``  — even maps on R^n, the twisted two-variable map, grid
  convex envelopes, quasi-convexity certificates, mollification;
- ``seqspace``  — finitely supported sequences and Luxemburg norms;
- ``twisted``   — the quasi-linear map F, the twisted quasi-norm, and
  the norm-equivalence certificates;
- ``renorm``    — gauges, the extension, star-iterated norms, and the
  finite-support invariants behind the renorming;
- ``cli``       — the ``twistnorm`` command.
"""

from .errors import BracketError, NumericSignal, UnboundedConstant
from .scalarfn import (DEFAULT_PLAN, OrliczFn, SamplingPlan, ScalarConstants,
                       certify, delta2_constant, derive_M_prime,
                       estimate_indices, estimate_type_constant, extend,
                       from_spec, power, power_log, scale_constant,
                       subadditivity_constant)
from .seqspace import (VecSeq, luxemburg_norm, luxemburg_norm_batch,
                       membership_margin, modular)
from .youngmap import (EnvelopeGrid, GridMap, LipschitzTheta, MollifyResult,
                       QuasiconvexityResult, YoungMap, convex_envelope,
                       equivalence_constant, identity_theta, kalton_peck_map,
                       kp_theoretical_bound, mollify, quasiconvexity_constant,
                       radial_power, scale_theta, soft_clip_theta,
                       young_from_orlicz)
from .twisted import (PairSeq, QuasiLinearityResult, TwistedSpace,
                      build_space, equivalence_certificate, from_preset,
                      kp_F, quasi_linearity_constant, quasi_triangle_constant,
                      s_functional, twisted_norm, twisted_norm_batch)
from .renorm import (BlockSeq, GaugeSpec, RenormPipeline, StarNorm,
                     SubstitutionReport, SuffReport, build_phitilde,
                     build_pipeline, build_star_norm, lambda_norm,
                     level_constant, match_lambda_norm, minkowski_gauge,
                     prefix_substitution_check, select_alpha, star_iterate,
                     suff_criterion_check, triangle_violation)

__version__ = "0.1.0"
