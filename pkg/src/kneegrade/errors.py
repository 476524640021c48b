"""Exception types shared across the pipeline."""


class KneegradeError(Exception):
    pass


class ManifestError(KneegradeError):
    """Invalid or unreadable dataset manifest."""


class SchemaError(KneegradeError):
    """Feature table / model file does not match the expected schema."""


class CompartmentAbsentError(KneegradeError):
    """A joint-space compartment has too few labelled pixels to measure."""

    def __init__(self, compartment, pixel_count):
        self.compartment = compartment
        self.pixel_count = pixel_count
        super().__init__(
            f"compartment {compartment!r} absent or too small ({pixel_count} px)"
        )


class NotFittedError(KneegradeError):
    """A normalizer/imputer/reference was used before fitting."""
