"""IQC verification and converse-theorem destabilizer synthesis for LTI systems."""

from .analysis import (
    PassivityClass,
    PassivityReport,
    classify_passivity,
    hinf_norm,
    input_passivity_index,
    output_passivity_index,
)
from .converse import (
    Branch,
    DestabilizationCertificate,
    chain_scatter,
    destabilize,
    divergence_sweep,
    verify_certificate,
)
from .errors import IQCError
from .feedback import ClosedLoop, closed_loop_gain, closed_loop_stable, interconnect
from .lti import (
    Domain,
    FrequencyGrid,
    FrequencyResponse,
    StateSpaceSystem,
    adjoint,
    combine,
    default_grid,
    evaluate,
    gain,
    is_stable,
    poles,
)
from .multiplier import (
    JSpectralFactors,
    MembershipVerdict,
    Multiplier,
    Profile,
    SetId,
    catalog,
    check_conditions,
    factorize_constant,
    fw_passivity_check,
    fw_smallgain_check,
    membership,
    q_form,
)
from .smallgain import PeakCertificate, allpass_match, peak_gain, rank_one_delta

__version__ = "0.1.0"
