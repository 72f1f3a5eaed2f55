from pydantic import BaseModel, ConfigDict


class AppBaseModel(BaseModel):
    model_config = ConfigDict(
        arbitrary_types_allowed=True,  # numpy arrays on result payloads
        str_strip_whitespace=True,  # Auto-strip string whitespace
        validate_assignment=True,  # Validate on attribute assignment
        extra="forbid",  # Typos in preset files fail loudly
    )


class FrozenModel(AppBaseModel):
    """Hashable inputs, usable as cache keys for precomputed tables"""

    model_config = ConfigDict(frozen=True)
