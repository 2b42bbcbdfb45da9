"""Per-domain robots.txt cache built on :mod:`urllib.robotparser`."""

from __future__ import annotations

import threading
from urllib.robotparser import RobotFileParser
from urllib.parse import urlsplit

import httpx

from . import urls

MAX_REDIRECTS = 5


class RobotsCache:
    def __init__(self, client: httpx.Client, user_agent: str, timeout: float = 10.0):
        self.client = client
        self.user_agent = user_agent
        self.timeout = timeout
        self._parsers: dict[str, RobotFileParser] = {}
        self._delays: dict[str, float | None] = {}
        self._lock = threading.Lock()
        self._origin_locks: dict[str, threading.Lock] = {}

    @staticmethod
    def origin(url: str) -> str:
        parts = urlsplit(url)
        return f"{parts.scheme}://{parts.netloc}"

    def _get(self, url: str) -> httpx.Response | None:
        """Follow redirects by hand, staying on the origin's registrable domain."""
        home = urls.domain_of(url)
        for _ in range(MAX_REDIRECTS + 1):
            resp = self.client.get(url, timeout=self.timeout, follow_redirects=False)
            if resp.status_code not in (301, 302, 303, 307, 308) or "location" not in resp.headers:
                return resp
            url = urls.resolve(url, resp.headers["location"])
            try:
                if urls.domain_of(urls.normalize(url)) != home:
                    return None
            except urls.URLError:
                return None
        return None

    def _fetch(self, origin: str) -> RobotFileParser:
        parser = RobotFileParser(origin + "/robots.txt")
        try:
            resp = self._get(origin + "/robots.txt")
        except httpx.HTTPError:
            resp = None
        if resp is None:
            parser.parse([])
            return parser
        if resp.status_code in (401, 403):
            parser.disallow_all = True
        elif 200 <= resp.status_code < 300:
            lines = resp.text.splitlines()
            parser.parse(lines)
            self._delays[origin] = parse_crawl_delay(lines, self.user_agent)
        else:
            parser.parse([])
        return parser

    def parser_for(self, url: str) -> RobotFileParser:
        origin = self.origin(url)
        with self._lock:
            parser = self._parsers.get(origin)
            if parser is not None:
                return parser
            lock = self._origin_locks.setdefault(origin, threading.Lock())
        with lock:
            with self._lock:
                if origin in self._parsers:
                    return self._parsers[origin]
            parser = self._fetch(origin)
            with self._lock:
                self._parsers[origin] = parser
            return parser

    def allowed(self, url: str) -> bool:
        return self.parser_for(url).can_fetch(self.user_agent, url)

    def crawl_delay(self, url: str) -> float | None:
        self.parser_for(url)
        return self._delays.get(self.origin(url))


def parse_crawl_delay(lines: list[str], user_agent: str) -> float | None:
    """Crawl-delay for ``user_agent``, accepting fractional seconds.

    The stdlib parser only reads integer delays. A group naming the agent wins
    over the ``*`` group, matching by product token as robotparser does.
    """
    token = user_agent.split("/")[0].lower()
    delays: dict[str, float] = {}
    agents: list[str] = []
    in_rules = False
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if ":" not in line:
            continue
        key, value = (part.strip() for part in line.split(":", 1))
        key = key.lower()
        if key == "user-agent":
            if in_rules:
                agents, in_rules = [], False
            agents.append(value.lower())
        else:
            in_rules = True
            if key == "crawl-delay":
                try:
                    delay = float(value)
                except ValueError:
                    continue
                if delay >= 0:
                    for agent in agents:
                        delays.setdefault(agent, delay)
    for agent, delay in delays.items():
        if agent != "*" and agent in token:
            return delay
    return delays.get("*")
