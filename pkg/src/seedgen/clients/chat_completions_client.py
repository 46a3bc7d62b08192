from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import requests

from src.core.constants import ENCODING_UTF_8
from src.core.errors import ProviderError
from src.seedgen.clients.base_api_client import BaseAPIClient

if TYPE_CHECKING:
    from src.seedgen.models import PromptMessages, ProviderConfig  # pragma: no cover

logger = logging.getLogger(__name__)

REQUEST_TIMEOUT_S = 120


class ChatCompletionsClient(BaseAPIClient):
    """
    A seed provider backed by a live HTTPS chat-completions endpoint.

    Transport errors and error statuses are retried by the session adapter; what still fails
    afterwards surfaces as a ProviderError.

    Attributes
    ----------
    config (ProviderConfig): Model, temperature, endpoint and credential variable.

    """

    def __init__(self, config: ProviderConfig, max_retries: int = 3) -> None:
        super().__init__(max_retries=max_retries)
        self.config = config
        self.set_session_headers({
            "Authorization": f"Bearer {config.read_credential()}",
            "Content-Type": "application/json",
        })

    @property
    def model_id(self) -> str:  # noqa: D102
        return self.config.model_id

    def complete(self, messages: PromptMessages) -> str:
        """
        Send the prompt and return the text of the first choice.

        The returned text is cut to `max_response_bytes` bytes.

        Raises
        ------
            ProviderError: If the request fails after retries or the answer has no message content.

        """
        payload = {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [{"role": role, "content": content} for role, content in messages],
        }
        logger.debug("Requesting seeds from '%s' with model '%s'", self.config.endpoint, self.config.model_id)
        try:
            response = self.session.post(self.config.endpoint, json=payload, timeout=REQUEST_TIMEOUT_S)
            response.raise_for_status()
            content = response.json()["choices"][0]["message"]["content"]
        except requests.RequestException as request_error:
            msg = f"Chat completions request to '{self.config.endpoint}' failed: {request_error}"
            raise ProviderError(msg) from request_error
        except (KeyError, IndexError, TypeError, ValueError) as format_error:
            msg = f"Unexpected chat completions answer from '{self.config.endpoint}'."
            raise ProviderError(msg) from format_error
        if not isinstance(content, str):
            msg = f"Chat completions answer from '{self.config.endpoint}' has no text content."
            raise ProviderError(msg)
        encoded = content.encode(ENCODING_UTF_8)[:self.config.max_response_bytes]
        return encoded.decode(ENCODING_UTF_8, errors="ignore")
