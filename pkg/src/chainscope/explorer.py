"""Paged Etherscan-style client that writes ingest-ready CSV files.

Acceptance never touches the network; tests drive the client through a fake
session object exposing ``get(url, params=..., timeout=...)``.
"""
from __future__ import annotations

import logging
import os
import time
from pathlib import Path
from typing import Callable, Optional

from .data import normalize_address, write_transactions
from .errors import HttpError, RateLimited

log = logging.getLogger(__name__)

API_KEY_ENV = "CHAINSCOPE_API_KEY"
DEFAULT_URL = "https://api.etherscan.io/api"
MAX_RETRIES = 5


class ExplorerClient:
    def __init__(
        self,
        api_key: Optional[str] = None,
        rate_limit: float = 5.0,
        base_url: str = DEFAULT_URL,
        page_size: int = 100,
        session=None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
        backoff: float = 1.0,
    ):
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise ValueError(f"an API key is required (argument or ${API_KEY_ENV})")
        if rate_limit <= 0:
            raise ValueError("rate_limit must be positive")
        if session is None:
            import requests

            session = requests.Session()
        self.api_key = api_key
        self.min_interval = 1.0 / rate_limit
        self.base_url = base_url
        self.page_size = page_size
        self.session = session
        self.sleep = sleep
        self.clock = clock
        self.backoff = backoff
        self.attempts = 0
        self._last_request: Optional[float] = None

    def _throttle(self):
        now = self.clock()
        if self._last_request is not None:
            wait = self._last_request + self.min_interval - now
            if wait > 0:
                self.sleep(wait)
                now += wait
        self._last_request = now

    def _get(self, params: dict) -> list:
        """One logical request with retry; returns the ``result`` list."""
        for attempt in range(MAX_RETRIES + 1):
            self._throttle()
            self.attempts += 1
            resp = self.session.get(self.base_url, params={**params, "apikey": self.api_key}, timeout=30)
            status = resp.status_code
            if status == 200:
                payload = resp.json()
                result = payload.get("result")
                if isinstance(result, list):
                    return result
                message = str(payload.get("message", "")) + " " + str(result)
                if "rate limit" in message.lower():
                    err: HttpError = RateLimited(429, message)
                else:
                    # "No transactions found" comes back as status 0 with an empty list
                    raise HttpError(200, message.strip())
            elif status == 429:
                err = RateLimited(status, "rate limited")
            else:
                err = HttpError(status, getattr(resp, "reason", "") or "")
            if attempt == MAX_RETRIES:
                raise err
            delay = self.backoff * 2**attempt
            if not isinstance(err, RateLimited):
                retry_after = (getattr(resp, "headers", None) or {}).get("Retry-After")
                if retry_after is not None:
                    try:
                        delay = float(retry_after)
                    except ValueError:
                        pass
            log.warning("attempt %d failed (%s); retrying in %.2fs", self.attempts, err, delay)
            self.sleep(delay)
        raise AssertionError("unreachable")

    def fetch_pages(self, address: str, action: str) -> list:
        """All rows for one action, deduplicated, in server order."""
        address = normalize_address(address)
        rows, seen = [], set()
        page = 1
        while True:
            batch = self._get(
                {
                    "module": "account",
                    "action": action,
                    "address": address,
                    "startblock": 0,
                    "endblock": 99999999,
                    "page": page,
                    "offset": self.page_size,
                    "sort": "asc",
                }
            )
            for row in batch:
                key = tuple(sorted((k, str(v)) for k, v in row.items()))
                if key not in seen:
                    seen.add(key)
                    rows.append(row)
            if len(batch) < self.page_size:
                return rows
            page += 1


def _external_row(r: dict) -> dict:
    to = r.get("to") or ""
    return {
        "txHash": r.get("hash", ""),
        "blockNumber": r.get("blockNumber", ""),
        "from": r.get("from", ""),
        "to": to,
        "value": r.get("value", "0"),
        "gasPrice": r.get("gasPrice", "0"),
        "success": "0" if str(r.get("isError", "0")) == "1" else "1",
    }


def _internal_row(r: dict) -> dict:
    opcode = str(r.get("type", "call")).upper()
    to = r.get("to") or ""
    if opcode == "CREATE" and not to:
        to = r.get("contractAddress", "")
    return {
        "parentTxHash": r.get("hash", ""),
        "blockNumber": r.get("blockNumber", ""),
        "from": r.get("from", ""),
        "to": to,
        "value": r.get("value", "0"),
        "opcode": opcode,
    }


def fetch_via_explorer(address: str, out_dir, api_key: Optional[str] = None, rate_limit: float = 5.0, **client_kw):
    """Download external and internal transactions of ``address`` into ``out_dir``.

    Returns ``(n_external, n_internal)``. Unknown opcodes (e.g. CREATE2) are
    written verbatim and rejected later by ingest.
    """
    client = ExplorerClient(api_key=api_key, rate_limit=rate_limit, **client_kw)
    ext = [_external_row(r) for r in client.fetch_pages(address, "txlist")]
    internal = [_internal_row(r) for r in client.fetch_pages(address, "txlistinternal")]
    write_transactions(Path(out_dir), ext, internal)
    log.info("fetched %d external / %d internal rows in %d requests", len(ext), len(internal), client.attempts)
    return len(ext), len(internal)
