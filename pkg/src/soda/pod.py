"""Sealed memory pods: one encrypted file holding a profile graph plus an
interaction log archive, mountable into a query session.

File layout (version 1), all integers little-endian:

    magic "SMP1" | format_version (1 byte) | salt_len (1) | salt (16)
    | nonce_len (1) | nonce (12) | ciphertext_len (8) | ciphertext | tag (16)

The payload is authenticated encryption over a canonical JSON body; the key
is stretched from the passphrase with PBKDF2-HMAC-SHA256.  Version 1 pins
the KDF parameters (the header has no parameter field, so parameters are
implied by format_version).  Magic and version are checked before any
cryptographic work; every other corruption — salt, nonce, ciphertext, tag,
or length fields — surfaces as an authentication or format failure.  There
is no partial success: a pod mounts completely or not at all.

Sessions follow a burn-after-reading discipline.  ``mount`` holds exactly
one live session per pod instance; ``unmount`` overwrites the plaintext
buffers (graph, log archive with its vector index, hot cache) and returns
an erasure receipt counting them.  A clear-text pod never touches disk.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import threading
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC

from . import updl

MAGIC = b"SMP1"
FORMAT_VERSION = 1
FILE_EXTENSION = ".smp"

SALT_LENGTH = 16
NONCE_LENGTH = 12
TAG_LENGTH = 16
KEY_LENGTH = 32
KDF_ITERATIONS = 200_000  # pinned by format_version 1

EMBEDDING_DIM = 64
K_HOT = 16  # working-memory cache size

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class PodError(Exception):
    """Base class for sealed-pod failures."""


class PodUsageError(PodError):
    """Caller error: empty passphrase, bad parameters."""


class PodFormatError(PodError):
    """Bad magic, unsupported version, truncated or inconsistent layout."""


class PodAuthenticationError(PodError):
    """Wrong passphrase, or the sealed bytes were tampered with."""


class ExclusivityError(PodError):
    """The pod instance is already mounted by this process."""


class PodStateError(PodError):
    """Lifecycle violation, e.g. unmounting twice."""


class SessionClosedError(PodError):
    """Query against a session whose buffers were already erased."""


def embed(text: str) -> np.ndarray:
    """Deterministic 64-dim unit vector for ``text``.

    Feature hashing over lowercased word tokens: each token lands in a
    bucket chosen by a keyed-less blake2b digest, with a digest-derived
    sign.  No learned weights, no randomness — the same text embeds to the
    same vector in every process.
    """
    vec = np.zeros(EMBEDDING_DIM, dtype=np.float64)
    for token in _TOKEN_RE.findall(text.lower()):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        bucket = value % EMBEDDING_DIM
        sign = 1.0 if (value >> 6) & 1 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec[0] = 1.0
        return vec
    return vec / norm


@dataclass
class LogEntry:
    """One archived interaction record with its travel-ready embedding."""

    text: str
    timestamp: float
    tags: tuple[str, ...] = ()
    embedding: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.tags = tuple(self.tags)
        if self.embedding is None:
            self.embedding = embed(self.text)
        else:
            self.embedding = np.asarray(self.embedding, dtype=np.float64)
            if self.embedding.shape != (EMBEDDING_DIM,):
                raise PodFormatError("log embedding has the wrong dimension")
            if abs(float(np.linalg.norm(self.embedding)) - 1.0) > 1e-6:
                raise PodFormatError("log embedding is not unit-norm")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LogEntry):
            return NotImplemented
        return (
            self.text == other.text
            and self.timestamp == other.timestamp
            and self.tags == other.tags
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass(frozen=True)
class SealedPod:
    """Parsed header view over sealed pod bytes."""

    format_version: int
    salt: bytes
    nonce: bytes
    ciphertext: bytes
    tag: bytes
    raw: bytes

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedPod":
        if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
            raise PodFormatError("bad magic: not a sealed pod")
        cursor = len(MAGIC)
        if len(data) < cursor + 1:
            raise PodFormatError("truncated pod: missing format version")
        version = data[cursor]
        cursor += 1
        if version != FORMAT_VERSION:
            raise PodFormatError(f"unsupported pod format version {version}")
        if len(data) < cursor + 1:
            raise PodFormatError("truncated pod: missing salt length")
        salt_len = data[cursor]
        cursor += 1
        if salt_len != SALT_LENGTH:
            raise PodFormatError(f"salt length {salt_len} invalid for version 1")
        if len(data) < cursor + salt_len:
            raise PodFormatError("truncated pod: salt")
        salt = data[cursor : cursor + salt_len]
        cursor += salt_len
        if len(data) < cursor + 1:
            raise PodFormatError("truncated pod: missing nonce length")
        nonce_len = data[cursor]
        cursor += 1
        if nonce_len != NONCE_LENGTH:
            raise PodFormatError(f"nonce length {nonce_len} invalid for version 1")
        if len(data) < cursor + nonce_len:
            raise PodFormatError("truncated pod: nonce")
        nonce = data[cursor : cursor + nonce_len]
        cursor += nonce_len
        if len(data) < cursor + 8:
            raise PodFormatError("truncated pod: ciphertext length")
        (ct_len,) = struct.unpack("<Q", data[cursor : cursor + 8])
        cursor += 8
        remaining = len(data) - cursor
        if ct_len != remaining - TAG_LENGTH:
            raise PodFormatError("ciphertext length disagrees with file size")
        ciphertext = data[cursor : cursor + ct_len]
        tag = data[cursor + ct_len :]
        return cls(
            format_version=version,
            salt=salt,
            nonce=nonce,
            ciphertext=ciphertext,
            tag=tag,
            raw=data,
        )


@lru_cache(maxsize=32)
def _derive_key(passphrase: bytes, salt: bytes) -> bytes:
    # Process-local cache so repeated mount attempts against the same
    # (passphrase, salt) pair pay the stretch cost once.
    kdf = PBKDF2HMAC(
        algorithm=hashes.SHA256(),
        length=KEY_LENGTH,
        salt=salt,
        iterations=KDF_ITERATIONS,
    )
    return kdf.derive(passphrase)


def _encode_payload(graph: updl.ProfileGraph, logs: Sequence[LogEntry], ontology_id: str) -> bytes:
    body = {
        "logs": [
            {
                "embedding": [float(x) for x in entry.embedding],
                "tags": list(entry.tags),
                "text": entry.text,
                "timestamp": entry.timestamp,
            }
            for entry in logs
        ],
        "updl": updl.serialize(graph, ontology_id=ontology_id).decode("utf-8"),
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _seal(plaintext: bytes, passphrase: str) -> bytes:
    """Encrypt ``plaintext`` into the v1 container with fresh salt and nonce."""
    salt = os.urandom(SALT_LENGTH)
    nonce = os.urandom(NONCE_LENGTH)
    key = _derive_key(passphrase.encode("utf-8"), salt)
    sealed = AESGCM(key).encrypt(nonce, plaintext, None)
    ciphertext, tag = sealed[:-TAG_LENGTH], sealed[-TAG_LENGTH:]
    return b"".join(
        [
            MAGIC,
            bytes([FORMAT_VERSION]),
            bytes([SALT_LENGTH]),
            salt,
            bytes([NONCE_LENGTH]),
            nonce,
            struct.pack("<Q", len(ciphertext)),
            ciphertext,
            tag,
        ]
    )


def create_pod(
    graph: updl.ProfileGraph,
    logs: Sequence[LogEntry] = (),
    *,
    passphrase: str,
    ontology_id: str = updl.DEFAULT_ONTOLOGY_ID,
) -> bytes:
    """Seal ``graph`` and ``logs`` under ``passphrase`` into pod bytes."""
    if not passphrase:
        raise PodUsageError("passphrase must be non-empty")
    return _seal(_encode_payload(graph, logs, ontology_id), passphrase)


def reseal(
    pod: bytes | SealedPod,
    old_passphrase: str,
    new_passphrase: str,
) -> bytes:
    """Re-encrypt a sealed pod under a new passphrase.

    The authenticated payload is carried over byte-for-byte; salt and
    nonce are always regenerated, so the output never shares key material
    with the input.  Raises PodAuthenticationError when the old
    passphrase does not open the pod.
    """
    if not new_passphrase:
        raise PodUsageError("new passphrase must be non-empty")
    sealed = pod if isinstance(pod, SealedPod) else SealedPod.from_bytes(pod)
    key = _derive_key(old_passphrase.encode("utf-8"), sealed.salt)
    try:
        plaintext = AESGCM(key).decrypt(sealed.nonce, sealed.ciphertext + sealed.tag, None)
    except InvalidTag as exc:
        raise PodAuthenticationError("wrong passphrase or corrupted pod") from exc
    return _seal(plaintext, new_passphrase)


@dataclass
class ErasureReceipt:
    """Proof of unmount: how many plaintext buffers were overwritten."""

    cleared_buffers: int
    unmounted_at: float


class PodSession:
    """A mounted pod: profile graph, log archive, vector index, hot cache.

    Created by :func:`mount`; never constructed directly.  All queries fail
    with SessionClosedError once the session is unmounted.
    """

    def __init__(
        self,
        *,
        session_id: str,
        graph: updl.ProfileGraph,
        logs: list[LogEntry],
        pod_digest: str,
    ) -> None:
        self.session_id = session_id
        self.mounted_at = time.time()
        self._graph: updl.ProfileGraph | None = graph
        self._logs: list[LogEntry] = logs
        if logs:
            self._matrix: np.ndarray = np.stack([e.embedding for e in logs])
        else:
            self._matrix = np.zeros((0, EMBEDDING_DIM), dtype=np.float64)
        # Working-memory cache: the K_HOT most recent entries by timestamp.
        order = sorted(range(len(logs)), key=lambda i: (-logs[i].timestamp, i))
        self._hot: list[LogEntry] = [logs[i] for i in order[:K_HOT]]
        self._pod_digest = pod_digest
        self._closed = False

    # ------------------------------------------------------------- lifecycle

    @property
    def closed(self) -> bool:
        return self._closed

    def _require_open(self) -> None:
        if self._closed:
            raise SessionClosedError("session buffers were erased at unmount")

    @property
    def graph(self) -> updl.ProfileGraph:
        self._require_open()
        assert self._graph is not None
        return self._graph

    @property
    def log_count(self) -> int:
        self._require_open()
        return len(self._logs)

    @property
    def hot_cache(self) -> tuple[LogEntry, ...]:
        self._require_open()
        return tuple(self._hot)

    # --------------------------------------------------------------- queries

    def query_fact(self, start_entity_path: str, relation_chain: Sequence[str]) -> list[object]:
        """Values reached by following ``relation_chain`` from a start node.

        Breadth-first over labelled edges; an empty chain returns the start
        node's own value.  No path at all yields an empty list.
        """
        self._require_open()
        graph = self.graph
        start = graph.node_for_path(start_entity_path)
        if start is None:
            return []
        frontier = [start]
        for predicate in relation_chain:
            seen: dict[str, updl.ProfileNode] = {}
            for node in frontier:
                for neighbor in graph.outgoing(node.id, predicate):
                    seen.setdefault(neighbor.id, neighbor)
            frontier = sorted(seen.values(), key=lambda n: n.field_path)
            if not frontier:
                return []
        return [node.value for node in frontier]

    def query_semantic(self, query_text: str, k: int) -> list[LogEntry]:
        """Top-``k`` log entries by cosine similarity to ``query_text``.

        Ties break toward the newer timestamp.  ``k`` larger than the
        archive returns everything, still ordered.
        """
        self._require_open()
        if k <= 0:
            raise PodUsageError("k must be positive")
        if not self._logs:
            return []
        q = embed(query_text)
        scores = self._matrix @ q
        order = sorted(
            range(len(self._logs)),
            key=lambda i: (-scores[i], -self._logs[i].timestamp, i),
        )
        return [self._logs[i] for i in order[:k]]


_REGISTRY_LOCK = threading.Lock()
_MOUNTED: dict[str, str] = {}  # pod digest -> session id
_SESSION_COUNTER = 0


def mount(
    pod: bytes | SealedPod,
    passphrase: str,
    *,
    ontology: updl.SensitivityOntology | None = None,
) -> PodSession:
    """Decrypt a sealed pod into a live session.

    Magic and version are validated before any key derivation.  Raises
    PodFormatError for structural damage, PodAuthenticationError when the
    passphrase is wrong or the payload fails authentication, and
    ExclusivityError when this pod instance is already mounted.  The
    embedded profile is validated against ``ontology`` (default: the
    shipped ontology).
    """
    global _SESSION_COUNTER
    if not passphrase:
        raise PodUsageError("passphrase must be non-empty")
    sealed = pod if isinstance(pod, SealedPod) else SealedPod.from_bytes(pod)
    digest = hashlib.sha256(sealed.raw).hexdigest()
    with _REGISTRY_LOCK:
        if digest in _MOUNTED:
            raise ExclusivityError("pod is already mounted by this process")
    key = _derive_key(passphrase.encode("utf-8"), sealed.salt)
    try:
        plaintext = AESGCM(key).decrypt(sealed.nonce, sealed.ciphertext + sealed.tag, None)
    except InvalidTag as exc:
        raise PodAuthenticationError("wrong passphrase or corrupted pod") from exc
    try:
        body = json.loads(plaintext.decode("utf-8"))
        graph = updl.parse(body["updl"], ontology=ontology)
        logs = [
            LogEntry(
                text=raw["text"],
                timestamp=float(raw["timestamp"]),
                tags=tuple(raw["tags"]),
                embedding=np.array(raw["embedding"], dtype=np.float64),
            )
            for raw in body["logs"]
        ]
    except (KeyError, TypeError, ValueError, updl.UpdlError) as exc:
        raise PodFormatError(f"authenticated payload failed validation: {exc}") from exc
    with _REGISTRY_LOCK:
        if digest in _MOUNTED:
            raise ExclusivityError("pod is already mounted by this process")
        _SESSION_COUNTER += 1
        session = PodSession(
            session_id=f"pod-session-{_SESSION_COUNTER:04d}",
            graph=graph,
            logs=logs,
            pod_digest=digest,
        )
        _MOUNTED[digest] = session.session_id
    return session


def unmount(session: PodSession) -> ErasureReceipt:
    """Erase the session's plaintext buffers and release the mount.

    Three buffers are overwritten and dropped: the profile graph, the log
    archive with its vector index, and the working-memory cache.  A second
    unmount raises PodStateError; queries afterwards raise
    SessionClosedError.
    """
    if session.closed:
        raise PodStateError("session is already unmounted")
    session._matrix[:] = 0.0
    for entry in session._logs:
        entry.embedding[:] = 0.0
        entry.text = ""
        entry.tags = ()
    session._logs.clear()
    session._hot.clear()
    session._graph = None
    session._closed = True
    with _REGISTRY_LOCK:
        _MOUNTED.pop(session._pod_digest, None)
    _derive_key.cache_clear()
    return ErasureReceipt(cleared_buffers=3, unmounted_at=time.time())


def export_pod(pod_bytes: bytes, path: str | os.PathLike) -> None:
    """Write sealed bytes to ``path`` (validated, then written atomically)."""
    SealedPod.from_bytes(pod_bytes)
    target = os.fspath(path)
    tmp = f"{target}.tmp"
    with open(tmp, "wb") as handle:
        handle.write(pod_bytes)
    os.replace(tmp, target)


def import_pod(path: str | os.PathLike) -> SealedPod:
    """Read and structurally validate a sealed pod file."""
    with open(path, "rb") as handle:
        data = handle.read()
    return SealedPod.from_bytes(data)
