from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any

from requests import Response, Session
from requests.adapters import HTTPAdapter
from requests_toolbelt.utils import dump
from urllib3.util.retry import Retry

from src.core.constants import ENCODING_UTF_8

if TYPE_CHECKING:
    from requests.structures import CaseInsensitiveDict  # pragma: no cover

logger = logging.getLogger(__name__)

LARGE_BODY_PLACEHOLDER = "<body removed: binary content>"
REDACTED_PLACEHOLDER = "<redacted>"
RETRY_STATUS_CODES = (429, 500, 502, 503, 504)


class BaseAPIClient:
    """
    A `requests` session with retries and a debug logging hook.

    Every response is dumped at DEBUG level; large or binary bodies are replaced by a placeholder
    and the Authorization header value is redacted.

    Attributes
    ----------
    session (Session): The shared HTTP session.

    """

    def __init__(self, max_retries: int = 3, backoff_factor: float = 1.0) -> None:
        self.session = Session()
        retry = Retry(
            total=max_retries,
            backoff_factor=backoff_factor,
            status_forcelist=RETRY_STATUS_CODES,
            allowed_methods=None,
        )
        self.session.mount("https://", HTTPAdapter(max_retries=retry))
        self.session.mount("http://", HTTPAdapter(max_retries=retry))
        self.session.hooks["response"] = [self.logging_hook]

    def set_session_headers(self, headers: dict[str, str]) -> None:
        """Set default headers sent with every request of the session."""
        if headers:
            self.session.headers.update(headers)

    @staticmethod
    def is_large_content(headers: CaseInsensitiveDict, max_size: int = 100_000) -> bool:
        """Check if the content is too large to be logged."""
        if not headers:
            return False
        content_length = headers.get("Content-Length")
        return bool(content_length and content_length.isdigit() and int(content_length) > max_size)

    @staticmethod
    def is_binary_content(headers: CaseInsensitiveDict) -> bool:
        """Check if the content is binary (image, archive, etc.)."""
        content_type = headers.get("Content-Type", "").lower()
        return any(ctype in content_type for ctype in ("image", "video", "audio", "application/octet-stream"))

    @classmethod
    def should_replace_large_body(cls, headers: CaseInsensitiveDict) -> bool:
        """Determine whether to replace the body based on content length or content type."""
        return cls.is_large_content(headers) or cls.is_binary_content(headers)

    @classmethod
    def logging_hook(cls, response: Response, *args: tuple[Any, ...], **kwargs: dict[str, Any]) -> None:  # noqa: ARG003
        """Log request and response, hiding credentials and large binary bodies."""
        raw_data = (dump.dump_all(response, request_prefix=b"> ", response_prefix=b"< ")
                    .decode(ENCODING_UTF_8, errors="replace"))

        authorization = response.request.headers.get("Authorization")
        if authorization:
            raw_data = raw_data.replace(authorization, REDACTED_PLACEHOLDER)

        request_body = response.request.body
        if isinstance(request_body, bytes) and cls.should_replace_large_body(response.request.headers):
            request_body = request_body.decode(ENCODING_UTF_8, errors="replace")
            raw_data = raw_data.replace(request_body, LARGE_BODY_PLACEHOLDER)

        if cls.should_replace_large_body(response.headers):
            header_part, _, _ = raw_data.partition("\n\n")
            raw_data = f"{header_part}\n\n{LARGE_BODY_PLACEHOLDER}"

        logger.debug(raw_data)
