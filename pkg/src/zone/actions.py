"""Edit action vocabulary shared by the classifier, denoiser, and sessions."""

from __future__ import annotations

from enum import IntEnum


class EditAction(IntEnum):
    """The three supported edit intents; values match classifier labels."""

    CHANGE = 0
    ADD = 1
    REMOVE = 2

    @classmethod
    def from_label(cls, label: int) -> "EditAction":
        try:
            return cls(label)
        except ValueError:
            raise ValueError(f"unknown action label {label}") from None

    @classmethod
    def from_name(cls, name: str) -> "EditAction":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown action name {name!r}") from None
