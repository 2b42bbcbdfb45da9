"""Scoped breadth-first crawler with per-domain politeness."""

from __future__ import annotations

import logging
import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable

import httpx

from . import urls
from .extraction.html import charset_from_content_type, parse_html
from .pagestore import FetchedPage, PageStore, PageStoreError, read_pages
from .robots import RobotsCache

log = logging.getLogger(__name__)

REDIRECT_CODES = {301, 302, 303, 307, 308}


class ScopeError(ValueError):
    def __init__(self, bad: list[str]):
        self.bad = bad
        super().__init__("seeds with unusable hosts: " + ", ".join(bad))


class FetchError(Exception):
    kind = "fetch_error"

    def __init__(self, url: str, message: str):
        self.url = url
        super().__init__(f"{self.kind}: {message}")


class FetchTimeout(FetchError):
    kind = "timeout"


class ConnectionFailed(FetchError):
    kind = "connection_error"


class TooManyRedirects(FetchError):
    kind = "too_many_redirects"


class RedirectOutOfScope(FetchError):
    kind = "redirect_out_of_scope"


class CrawlAborted(RuntimeError):
    def __init__(self, stats: "CrawlStats", cause: Exception):
        self.stats = stats
        super().__init__(f"crawl aborted: {cause}")


@dataclass
class CrawlConfig:
    workers: int = 4
    min_delay_ms: int = 2000
    timeout_ms: int = 10_000
    max_body_bytes: int = 5_000_000
    max_redirects: int = 5
    page_budget: int = 1000
    respect_robots: bool = True
    user_agent: str = "adtrace/0.1 (+research crawler)"
    proxy: str | None = None

    def validate(self) -> "CrawlConfig":
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.min_delay_ms <= 0:
            raise ValueError("min_delay_ms must be > 0")
        if self.page_budget < 1:
            raise ValueError("page_budget must be >= 1")
        if self.timeout_ms <= 0 or self.max_body_bytes <= 0 or self.max_redirects < 0:
            raise ValueError("timeout_ms, max_body_bytes must be > 0 and max_redirects >= 0")
        return self


@dataclass(frozen=True)
class DomainScope:
    allowed: frozenset[str]

    def __contains__(self, url: str) -> bool:
        try:
            return urls.domain_of(url) in self.allowed
        except (urls.URLError, ValueError):
            return False


def scope_of(seeds: Iterable) -> DomainScope:
    seed_urls = [getattr(s, "url", s) for s in seeds]
    if not seed_urls:
        raise ValueError("scope_of needs at least one seed")
    allowed, bad = set(), []
    for url in seed_urls:
        try:
            allowed.add(urls.domain_of(url))
        except (urls.URLError, ValueError):
            bad.append(url)
    if bad:
        raise ScopeError(bad)
    return DomainScope(frozenset(allowed))


@dataclass
class _DomainState:
    min_delay: float
    last_request: float | None = None
    queue: deque = field(default_factory=deque)


class Frontier:
    """FIFO frontier; every method takes the internal lock, so workers may share one."""

    def __init__(self, min_delay: float):
        self.min_delay = min_delay
        self.seen: set[str] = set()
        self.domains: dict[str, _DomainState] = {}
        self.dispatch_log: list[tuple[str, float, str]] = []
        self.rejected_out_of_scope = 0
        self.deduped = 0
        self._seq = 0
        self._pending = 0
        self._lock = threading.RLock()

    def __len__(self):
        return self._pending

    def _state(self, domain: str) -> _DomainState:
        state = self.domains.get(domain)
        if state is None:
            state = self.domains[domain] = _DomainState(self.min_delay)
        return state

    def mark_seen(self, url: str) -> bool:
        """Record ``url`` as seen; False if it already was."""
        key = urls.digest(url)
        with self._lock:
            if key in self.seen:
                return False
            self.seen.add(key)
            return True

    def enqueue(self, candidates: Iterable[str], scope: DomainScope) -> int:
        admitted = 0
        with self._lock:
            for raw in candidates:
                try:
                    url = urls.normalize(raw)
                    domain = urls.domain_of(url)
                except (urls.URLError, ValueError):
                    self.rejected_out_of_scope += 1
                    continue
                if domain not in scope.allowed:
                    self.rejected_out_of_scope += 1
                    continue
                key = urls.digest(url)
                if key in self.seen:
                    self.deduped += 1
                    continue
                self.seen.add(key)
                self._state(domain).queue.append((self._seq, url))
                self._seq += 1
                self._pending += 1
                admitted += 1
        return admitted

    def set_min_delay(self, domain: str, seconds: float) -> None:
        with self._lock:
            self._state(domain).min_delay = seconds

    def _ready(self, state: _DomainState, now: float) -> bool:
        return state.last_request is None or now - state.last_request >= state.min_delay

    def next_fetchable(self, now: float) -> str | None:
        with self._lock:
            best_domain, best_seq = None, None
            for domain, state in self.domains.items():
                if state.queue and self._ready(state, now):
                    seq = state.queue[0][0]
                    if best_seq is None or seq < best_seq:
                        best_domain, best_seq = domain, seq
            if best_domain is None:
                return None
            state = self.domains[best_domain]
            _, url = state.queue.popleft()
            state.last_request = now
            self._pending -= 1
            self.dispatch_log.append((best_domain, now, url))
            return url

    def next_ready_at(self) -> float | None:
        """Earliest instant at which some pending URL becomes dispatchable."""
        with self._lock:
            times = [
                (s.last_request + s.min_delay) if s.last_request is not None else 0.0
                for s in self.domains.values() if s.queue
            ]
            return min(times) if times else None


def _is_html(content_type: str) -> bool:
    ct = (content_type or "").lower()
    return "html" in ct


def fetch(
    url: str,
    config: CrawlConfig,
    client: httpx.Client,
    scope: DomainScope | None = None,
    wall_clock: Callable[[], datetime] | None = None,
) -> FetchedPage:
    """GET ``url`` following redirects by hand so each hop can be scope-checked."""
    wall_clock = wall_clock or (lambda: datetime.now(timezone.utc))
    timeout = config.timeout_ms / 1000
    headers = {"User-Agent": config.user_agent}
    current = url
    started = time.perf_counter()
    for hop in range(config.max_redirects + 1):
        try:
            with client.stream("GET", current, headers=headers, timeout=timeout,
                               follow_redirects=False) as resp:
                if resp.status_code in REDIRECT_CODES and "location" in resp.headers:
                    target = urls.normalize(urls.resolve(str(resp.url), resp.headers["location"]))
                    if scope is not None and target not in scope:
                        raise RedirectOutOfScope(url, f"redirect to {target}")
                    current = target
                    continue
                body = bytearray()
                truncated = False
                for chunk in resp.iter_bytes():
                    room = config.max_body_bytes - len(body)
                    if len(chunk) > room:
                        body.extend(chunk[:room])
                        truncated = True
                        break
                    body.extend(chunk)
                elapsed = (time.perf_counter() - started) * 1000
                return FetchedPage(
                    url=url,
                    final_url=current,
                    status=resp.status_code,
                    body=bytes(body),
                    content_type=resp.headers.get("content-type", ""),
                    retrieved_at=wall_clock(),
                    elapsed_ms=elapsed,
                    truncated=truncated,
                )
        except httpx.TimeoutException as exc:
            raise FetchTimeout(url, str(exc) or "timed out") from exc
        except (httpx.TransportError, urls.URLError) as exc:
            raise ConnectionFailed(url, str(exc) or type(exc).__name__) from exc
    raise TooManyRedirects(url, f"more than {config.max_redirects} redirects")


def extract_links(page: FetchedPage) -> list[str]:
    if not _is_html(page.content_type) or not page.body:
        return []
    parsed = parse_html(page.body, charset_from_content_type(page.content_type), page.final_url)
    base = page.final_url
    base_tag = parsed.tree.find("base", href=True)
    if base_tag is not None:
        base = urls.resolve(base, base_tag["href"])
    try:
        own = urls.normalize(page.final_url)
    except urls.URLError:
        own = None
    out: list[str] = []
    seen = {own} if own else set()
    for a in parsed.tree.find_all(["a", "area"], href=True):
        try:
            link = urls.normalize(urls.resolve(base, a["href"]))
        except (urls.URLError, ValueError):
            continue
        if link not in seen:
            seen.add(link)
            out.append(link)
    return out


@dataclass
class CrawlStats:
    fetched: int = 0
    errored: int = 0
    admitted: int = 0
    rejected_out_of_scope: int = 0
    deduped: int = 0
    robots_disallowed: int = 0
    elapsed_ms_total: float = 0.0

    @property
    def mean_elapsed_ms(self) -> float:
        return self.elapsed_ms_total / self.fetched if self.fetched else 0.0

    def as_dict(self) -> dict:
        return {
            "fetched": self.fetched,
            "errored": self.errored,
            "admitted": self.admitted,
            "rejected_out_of_scope": self.rejected_out_of_scope,
            "deduped": self.deduped,
            "robots_disallowed": self.robots_disallowed,
            "mean_elapsed_ms": round(self.mean_elapsed_ms, 3),
        }


class Crawler:
    def __init__(
        self,
        seeds: Iterable,
        config: CrawlConfig,
        store: PageStore,
        client: httpx.Client | None = None,
        clock: Callable[[], float] = time.monotonic,
        wall_clock: Callable[[], datetime] | None = None,
    ):
        self.seed_urls = [getattr(s, "url", s) for s in seeds]
        self.config = config.validate()
        self.store = store
        self.scope = scope_of(self.seed_urls)
        self.frontier = Frontier(config.min_delay_ms / 1000)
        self.stats = CrawlStats()
        self.clock = clock
        self.wall_clock = wall_clock
        self._own_client = client is None
        self.client = client or httpx.Client(proxy=config.proxy)
        self.robots = RobotsCache(self.client, config.user_agent, config.timeout_ms / 1000) \
            if config.respect_robots else None
        self._robots_applied: set[str] = set()
        self._robots_pending: set[str] = set()
        self._cond = threading.Condition(threading.RLock())
        self._dispatched = 0
        self._inflight = 0
        self._failure: Exception | None = None

    def resume_from(self, pages: Iterable[FetchedPage]) -> None:
        """Mark already-stored pages as seen and re-offer their outlinks."""
        carried: list[str] = []
        for page in pages:
            for u in (page.url, page.final_url):
                try:
                    self.frontier.mark_seen(urls.normalize(u))
                except urls.URLError:
                    pass
            if page.ok:
                carried.extend(extract_links(page))
        self._carried = carried

    def _hold_until_robots(self, url: str) -> None:
        """Withhold a domain's other URLs until its crawl-delay is known (caller holds the lock)."""
        if self.robots is None:
            return
        domain = urls.domain_of(url)
        if domain not in self._robots_applied and domain not in self._robots_pending:
            self._robots_pending.add(domain)
            self.frontier.set_min_delay(domain, math.inf)

    def _apply_robots(self, url: str, domain: str) -> bool:
        if self.robots is None:
            return True
        if domain in self._robots_pending:
            delay = None
            try:
                delay = self.robots.crawl_delay(url)
            finally:
                with self._cond:
                    self.frontier.set_min_delay(domain, max(delay or 0.0, self.frontier.min_delay))
                    self._robots_pending.discard(domain)
                    self._robots_applied.add(domain)
                    self._cond.notify_all()
        return self.robots.allowed(url)

    def _process(self, url: str) -> None:
        domain = urls.domain_of(url)
        if not self._apply_robots(url, domain):
            with self._cond:
                self.stats.robots_disallowed += 1
                self._dispatched -= 1
            return
        try:
            page = fetch(url, self.config, self.client, self.scope, self.wall_clock)
        except FetchError as exc:
            page = FetchedPage(
                url=url, final_url=url, status=0, body=b"", content_type="",
                retrieved_at=(self.wall_clock or (lambda: datetime.now(timezone.utc)))(),
                elapsed_ms=0.0, error=str(exc),
            )
        self.store.append(page)
        links = extract_links(page) if page.ok else []
        with self._cond:
            if page.error:
                self.stats.errored += 1
            else:
                self.stats.fetched += 1
                self.stats.elapsed_ms_total += page.elapsed_ms
            if links:
                self.stats.admitted += self.frontier.enqueue(links, self.scope)

    def _worker(self) -> None:
        budget = self.config.page_budget
        while True:
            with self._cond:
                while True:
                    if self._failure is not None or self._dispatched >= budget:
                        return
                    now = self.clock()
                    url = self.frontier.next_fetchable(now)
                    if url is not None:
                        self._hold_until_robots(url)
                        self._dispatched += 1
                        self._inflight += 1
                        break
                    if len(self.frontier) == 0 and self._inflight == 0:
                        self._cond.notify_all()
                        return
                    ready = self.frontier.next_ready_at()
                    wait = 0.05 if ready is None else min(max(ready - now, 0.001), 0.05)
                    self._cond.wait(wait)
            try:
                self._process(url)
            except PageStoreError as exc:
                with self._cond:
                    self._failure = exc
            except Exception as exc:  # keep other workers alive; surface after join
                log.exception("worker failed on %s", url)
                with self._cond:
                    self._failure = exc
            finally:
                with self._cond:
                    self._inflight -= 1
                    self._cond.notify_all()

    def run(self) -> CrawlStats:
        try:
            self.stats.admitted += self.frontier.enqueue(self.seed_urls, self.scope)
            self.stats.admitted += self.frontier.enqueue(getattr(self, "_carried", []), self.scope)
            threads = [threading.Thread(target=self._worker, daemon=True)
                       for _ in range(self.config.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        finally:
            if self._own_client:
                self.client.close()
        self.stats.rejected_out_of_scope = self.frontier.rejected_out_of_scope
        self.stats.deduped = self.frontier.deduped
        if self._failure is not None:
            raise CrawlAborted(self.stats, self._failure)
        return self.stats


def run_crawl(
    seeds: Iterable,
    config: CrawlConfig,
    store: PageStore,
    client: httpx.Client | None = None,
    clock: Callable[[], float] = time.monotonic,
    wall_clock: Callable[[], datetime] | None = None,
    resume: bool = True,
) -> CrawlStats:
    crawler = Crawler(seeds, config, store, client=client, clock=clock, wall_clock=wall_clock)
    if resume:
        crawler.resume_from(read_pages(store.path))
    return crawler.run()
