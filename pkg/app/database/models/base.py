"""Base model module for shared model functionality.

This module provides the BaseSchema class which serves as the foundation
for all models in the application, ensuring consistent configuration and behavior.
"""

from pydantic import BaseModel, ConfigDict


class BaseSchema(BaseModel):
    """Base Pydantic model class for all application schemas.

    This base class provides common configuration shared across all model
    classes. Arbitrary types are allowed so numpy arrays can be carried as
    fields; ``FrozenSchema`` additionally makes instances immutable.
    """

    model_config = ConfigDict(
        from_attributes=True,
        populate_by_name=True,
        arbitrary_types_allowed=True,
    )


class FrozenSchema(BaseSchema):
    """Immutable variant of ``BaseSchema`` for values passed between stages."""

    model_config = ConfigDict(frozen=True)
