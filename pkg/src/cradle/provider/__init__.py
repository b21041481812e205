"""Multimodal model access: request types, mock, cassette and HTTP providers."""

from .base import (
    CompletionRequest,
    ImagePart,
    Message,
    Provider,
    TextPart,
    canonical_request,
    pixel_digest,
    request_digest,
)
from .cassette import CassetteProvider
from .mock import FunctionProvider, HashEmbedder, ScriptedProvider
from .remote import KEY_ENV, RemoteProvider
from .sections import FieldSpec, SectionSchema, parse_sections

__all__ = [
    "CassetteProvider", "CompletionRequest", "FieldSpec", "FunctionProvider", "HashEmbedder", "ImagePart",
    "KEY_ENV", "Message", "Provider", "RemoteProvider", "ScriptedProvider", "SectionSchema", "TextPart",
    "canonical_request", "parse_sections", "pixel_digest", "request_digest",
]
