import hashlib
import os

import pytest
from botocore.exceptions import ClientError, EndpointConnectionError

from adtrace.objectstore import (
    AuthError,
    MissingBucketError,
    ObjectStore,
    ObjectStoreError,
    StoreSettings,
    StoreTransportError,
    put_object,
)


@pytest.fixture
def store(s3_endpoint):
    return ObjectStore(StoreSettings(s3_endpoint, "testing", "testing"), backoff=0)


def test_put_get_byte_identical(store, s3_bucket):
    payload = os.urandom(256 * 1024) + b"\x00\xff" * 10
    etag = put_object(store, s3_bucket, "run/batch-0001.parquet", payload)
    assert etag == hashlib.md5(payload).hexdigest()
    assert store.get_object(s3_bucket, "run/batch-0001.parquet") == payload


def test_empty_payload(store, s3_bucket):
    store.put_object(s3_bucket, "empty", b"")
    assert store.get_object(s3_bucket, "empty") == b""


def test_empty_key_rejected(store, s3_bucket):
    with pytest.raises(ValueError):
        store.put_object(s3_bucket, "", b"x")


def test_missing_bucket(store):
    with pytest.raises(MissingBucketError):
        store.put_object("no-such-bucket", "k", b"x")


def test_missing_key_is_not_transport(store, s3_bucket):
    with pytest.raises(ObjectStoreError) as err:
        store.get_object(s3_bucket, "nope")
    assert not isinstance(err.value, (StoreTransportError, MissingBucketError))


class FakeClient:
    """Raises the scripted exceptions in order, then succeeds."""

    def __init__(self, errors):
        self.errors = list(errors)
        self.calls = 0

    def put_object(self, **kw):
        self.calls += 1
        if self.errors:
            raise self.errors.pop(0)
        return {"ETag": '"abc"'}


def client_error(code, status):
    return ClientError({"Error": {"Code": code, "Message": code},
                        "ResponseMetadata": {"HTTPStatusCode": status}}, "PutObject")


@pytest.mark.parametrize("code", ["AccessDenied", "InvalidAccessKeyId", "SignatureDoesNotMatch"])
def test_auth_errors_not_retried(code):
    client = FakeClient([client_error(code, 403)])
    store = ObjectStore(StoreSettings("http://unused"), client=client, backoff=0)
    with pytest.raises(AuthError):
        store.put_object("b", "k", b"x")
    assert client.calls == 1


def test_server_errors_retried_then_succeed():
    client = FakeClient([client_error("InternalError", 500), client_error("SlowDown", 503)])
    store = ObjectStore(StoreSettings("http://unused"), client=client, backoff=0)
    assert store.put_object("b", "k", b"x") == "abc"
    assert client.calls == 3


def test_transport_retries_exhausted():
    client = FakeClient([EndpointConnectionError(endpoint_url="http://x")] * 10)
    store = ObjectStore(StoreSettings("http://unused"), client=client, retries=2, backoff=0)
    with pytest.raises(StoreTransportError):
        store.put_object("b", "k", b"x")
    assert client.calls == 3


def test_unreachable_endpoint():
    store = ObjectStore(StoreSettings("http://127.0.0.1:9"), retries=1, backoff=0)
    with pytest.raises(StoreTransportError):
        store.put_object("b", "k", b"x")


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("STORE_ENDPOINT", "http://minio:9000")
    monkeypatch.setenv("STORE_ACCESS_KEY", "ak")
    monkeypatch.setenv("STORE_SECRET_KEY", "sk")
    s = StoreSettings.from_env()
    assert (s.endpoint, s.access_key, s.secret_key) == ("http://minio:9000", "ak", "sk")
    assert StoreSettings.from_env("http://other").endpoint == "http://other"
    monkeypatch.delenv("STORE_ENDPOINT")
    with pytest.raises(ObjectStoreError, match="STORE_ENDPOINT"):
        StoreSettings.from_env()
