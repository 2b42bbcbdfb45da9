import random
import sys
import uuid
from datetime import datetime, timedelta, timezone
from decimal import Decimal

import pytest

from adtrace.records import AdRecord
from adtrace.relevance import DEFAULT_LABELS

_DOMAINS = ["ebay.com", "ebay.co.uk", "marktplaats.nl", "carousell.com.hk", "etsy.com",
            "fauna-bazaar.com", "ebay.de"]
_WORDS = ["tiger", "claw", "macaw", "ivory", "plush", "Schildpatt", "écaille", "象牙", "rug",
          "pendant", "live", "pair", "🦜"]


def synthetic_records(n: int, seed: int = 0, labels=DEFAULT_LABELS,
                      domains=_DOMAINS) -> list[AdRecord]:
    """Valid records with every optional column null in roughly a third of rows."""
    rng = random.Random(seed)
    base = datetime(2023, 8, 8, tzinfo=timezone.utc)

    def maybe(value):
        return None if rng.random() < 0.33 else value

    def words(k):
        return " ".join(rng.choice(_WORDS) for _ in range(k))

    out = []
    for i in range(n):
        domain = rng.choice(domains)
        price = maybe(Decimal(rng.randrange(0, 10**9)).scaleb(-4))
        out.append(AdRecord(
            url=f"https://www.{domain}/itm/{i}?ref={rng.randrange(1000)}",
            title=maybe(words(4)),
            text=words(rng.randrange(0, 30)),
            product=words(3),
            description=maybe(words(10)),
            domain=domain,
            image=maybe(f"https://img.{domain}/{i}.jpg"),
            retrieved=base + timedelta(milliseconds=rng.randrange(0, 34 * 86_400_000)),
            category=maybe(rng.choice(["Antiques", "Pets", "Art > Prints"])),
            production_date=maybe(rng.choice(["1950", "1985-06", "2001-02-03"])),
            price=price,
            currency=maybe(rng.choice(["USD", "EUR", "GBP", "HKD"])) if price is not None else None,
            seller=maybe(f"seller{rng.randrange(50)}"),
            seller_type=maybe(rng.choice(["Private", "Business"])),
            location=maybe(rng.choice(["Bangkok, Thailand", "Utrecht, NL", "Kowloon"])),
            zero_shot_label=rng.choice(labels),
            zero_shot_prob=rng.random(),
            id=str(uuid.UUID(int=rng.getrandbits(128), version=4)),
        ))
    return out


@pytest.fixture(scope="session")
def s3_endpoint():
    from moto.server import ThreadedMotoServer

    server = ThreadedMotoServer(ip_address="127.0.0.1", port=0, verbose=False)
    server.start()
    host, port = server.get_host_and_port()
    yield f"http://{host}:{port}"
    server.stop()


@pytest.fixture
def s3_bucket(s3_endpoint):
    import boto3

    name = f"ads-{uuid.uuid4().hex[:8]}"
    client = boto3.client("s3", endpoint_url=s3_endpoint, aws_access_key_id="test",
                          aws_secret_access_key="test", region_name="us-east-1")
    client.create_bucket(Bucket=name)
    return name


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
