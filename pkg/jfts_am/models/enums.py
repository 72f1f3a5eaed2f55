"""
Enums for the adaptation toolkit
All policy kinds and numerical switches in one place
"""
from enum import Enum


class PolicyKind(str, Enum):
    """Adaptation policies - rate/power freedom and BER constraint"""
    ARATE_CPOW_IBER = "arate_cpow_iber"
    ARATE_CPOW_ABER = "arate_cpow_aber"
    CRATE_APOW_IBER = "crate_apow_iber"
    ARATE_APOW_IBER = "arate_apow_iber"

    @property
    def cli_name(self) -> str:
        return self.value.replace("_", "-")

    @property
    def adapts_rate(self) -> bool:
        return self is not PolicyKind.CRATE_APOW_IBER

    @property
    def inverts_channel(self) -> bool:
        """Power follows S(γ) ∝ 1/γ inside each region"""
        return self in (PolicyKind.CRATE_APOW_IBER, PolicyKind.ARATE_APOW_IBER)


class SeriesForm(str, Enum):
    """How the JFTS density series is assembled"""
    # Coefficients derived from the Ricean x TWDP composite the sampler draws
    CONDITIONAL = "conditional"
    # closed-form series exactly as printed, renormalized by Z
    PRINTED = "printed"


class PhaseRule(str, Enum):
    """Average over the relative phase of the two specular waves"""
    # Four symmetric pairs a_i, T_i = cos((i-1)π/7)
    NEWTON_COTES = "newton-cotes"
    MIDPOINT = "midpoint"


class IberReading(str, Enum):
    """Identity that pins an I-BER boundary"""
    INSTANTANEOUS = "instantaneous"  # inst_ber(γ_l) = TBER
    TAIL = "tail"  # ∫_{γ_l}^∞ BER f dγ = TBER


class BerWeighting(str, Enum):
    BITS = "bits"
    UNWEIGHTED = "unweighted"


class CheckStatus(str, Enum):
    """Outcome of one acceptance check"""
    PASS = "pass"
    FAIL = "fail"
    FLAGGED = "flagged"  # failed, and tied to a recorded open question
