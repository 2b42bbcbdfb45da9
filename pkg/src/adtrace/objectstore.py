"""Minimal S3-compatible object store client (path-style addressing)."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import boto3
from botocore.config import Config
from botocore.exceptions import (
    BotoCoreError,
    ClientError,
    ConnectionClosedError,
    EndpointConnectionError,
    ReadTimeoutError,
)

log = logging.getLogger(__name__)

AUTH_CODES = {"InvalidAccessKeyId", "SignatureDoesNotMatch", "AccessDenied", "Forbidden", "403"}
MISSING_BUCKET_CODES = {"NoSuchBucket"}


class ObjectStoreError(Exception):
    pass


class AuthError(ObjectStoreError):
    pass


class MissingBucketError(ObjectStoreError):
    pass


class StoreTransportError(ObjectStoreError):
    pass


@dataclass
class StoreSettings:
    endpoint: str
    access_key: str = ""
    secret_key: str = ""
    region: str = "us-east-1"

    @classmethod
    def from_env(cls, endpoint: str | None = None) -> "StoreSettings":
        endpoint = endpoint or os.environ.get("STORE_ENDPOINT")
        if not endpoint:
            raise ObjectStoreError("no object-store endpoint (set STORE_ENDPOINT)")
        return cls(
            endpoint=endpoint,
            access_key=os.environ.get("STORE_ACCESS_KEY", ""),
            secret_key=os.environ.get("STORE_SECRET_KEY", ""),
        )


def _translate(exc: Exception, bucket: str, key: str) -> ObjectStoreError:
    if isinstance(exc, ClientError):
        code = str(exc.response.get("Error", {}).get("Code", ""))
        if code in MISSING_BUCKET_CODES:
            return MissingBucketError(f"bucket {bucket!r} does not exist")
        if code in AUTH_CODES:
            return AuthError(f"access denied for {bucket}/{key}: {code}")
        status = exc.response.get("ResponseMetadata", {}).get("HTTPStatusCode", 0)
        if status >= 500:
            return StoreTransportError(f"server error {status} for {bucket}/{key}")
        return ObjectStoreError(f"{code or status} for {bucket}/{key}")
    return StoreTransportError(f"{type(exc).__name__}: {exc}")


class ObjectStore:
    def __init__(self, settings: StoreSettings, client=None, retries: int = 3,
                 backoff: float = 0.2):
        self.settings = settings
        self.retries = retries
        self.backoff = backoff
        self.client = client or boto3.client(
            "s3",
            endpoint_url=settings.endpoint,
            aws_access_key_id=settings.access_key or "anonymous",
            aws_secret_access_key=settings.secret_key or "anonymous",
            region_name=settings.region,
            config=Config(
                s3={"addressing_style": "path"},
                retries={"max_attempts": 1, "mode": "standard"},
                signature_version="s3v4",
                connect_timeout=5,
                read_timeout=30,
            ),
        )

    def _call(self, bucket: str, key: str, fn):
        attempt = 0
        while True:
            try:
                return fn()
            except (ClientError, EndpointConnectionError, ConnectionClosedError,
                    ReadTimeoutError, BotoCoreError) as exc:
                err = _translate(exc, bucket, key)
                if not isinstance(err, StoreTransportError) or attempt >= self.retries:
                    raise err from exc
                attempt += 1
                log.warning("retrying %s/%s after %s (retry %d/%d)", bucket, key, err,
                            attempt, self.retries)
                time.sleep(self.backoff * 2 ** (attempt - 1))

    def put_object(self, bucket: str, key: str, payload: bytes) -> str:
        if not key:
            raise ValueError("object key must be non-empty")
        resp = self._call(bucket, key, lambda: self.client.put_object(
            Bucket=bucket, Key=key, Body=payload))
        return resp["ETag"].strip('"')

    def get_object(self, bucket: str, key: str) -> bytes:
        resp = self._call(bucket, key, lambda: self.client.get_object(Bucket=bucket, Key=key))
        return resp["Body"].read()


def put_object(store: ObjectStore, bucket: str, key: str, payload: bytes) -> str:
    return store.put_object(bucket, key, payload)
