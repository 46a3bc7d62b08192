from __future__ import annotations

from pathlib import Path

from cryptography.hazmat.primitives import hashes

READ_CHUNK_SIZE = 1 << 20


def fingerprint(file_bytes: bytes) -> str:
    """
    Return the lowercase hex SHA-256 digest of the given bytes.

    Args:
    ----
        file_bytes (bytes): The content to hash.

    Returns:
    -------
        str: 64 hex characters (a 32-byte digest).

    Example:
    -------
        >>> fingerprint(b"")
        'e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855'

    """
    digest = hashes.Hash(hashes.SHA256())
    digest.update(file_bytes)
    return digest.finalize().hex()


def fingerprint_file(file_path: Path) -> str:
    """Hash a file in chunks; equal to `fingerprint(file_path.read_bytes())`."""
    digest = hashes.Hash(hashes.SHA256())
    with Path(file_path).open("rb") as fp:
        while chunk := fp.read(READ_CHUNK_SIZE):
            digest.update(chunk)
    return digest.finalize().hex()


def short_digest(data: bytes, size: int = 16) -> str:
    """Return the first `size` bytes of the SHA-256 digest of `data`, hex encoded."""
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()[:size].hex()
