"""Transaction store: CSV ingest, validation, and per-account block-range slices.

Four files make up a dataset directory:

* ``external.csv``  txHash,blockNumber,from,to,value,gasPrice,success
* ``internal.csv``  parentTxHash,blockNumber,from,to,value,opcode
* ``labels.csv``    address,activity,source
* ``sources.csv``   address,source

In ``sources.csv`` the ``source`` cell is either ``base64:<payload>`` (inline
bytes), a path relative to the dataset directory, or empty when the contract
has no verified source.
"""
from __future__ import annotations

import base64
import binascii
import bisect
import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import DuplicateAccount, EmptyDataset, MalformedRow

log = logging.getLogger(__name__)

OPCODES = ("CALL", "CALLCODE", "DELEGATECALL", "CREATE", "SUICIDE")
ACTIVITIES = ("Phishing", "Gambling", "HighRisk", "Ponzi")
EOA, SC = "EOA", "SC"

EXTERNAL_HEADER = ["txHash", "blockNumber", "from", "to", "value", "gasPrice", "success"]
INTERNAL_HEADER = ["parentTxHash", "blockNumber", "from", "to", "value", "opcode"]
LABELS_HEADER = ["address", "activity", "source"]
SOURCES_HEADER = ["address", "source"]

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")
_HASH_RE = re.compile(r"^0x[0-9a-fA-F]{64}$")
_UINT256_MAX = 2**256 - 1
_ACTIVITY_ALIASES = {
    "phishing": "Phishing",
    "gambling": "Gambling",
    "highrisk": "HighRisk",
    "high-risk": "HighRisk",
    "high risk": "HighRisk",
    "ponzi": "Ponzi",
    "ponzi scheme": "Ponzi",
}

Address = str
PathLike = Union[str, Path]


def normalize_address(text: str) -> Address:
    """Return the canonical lowercase form, raising ValueError on bad input."""
    text = text.strip()
    if not _ADDRESS_RE.match(text):
        raise ValueError(f"bad address {text!r}")
    return text.lower()


def is_address(text: str) -> bool:
    return bool(_ADDRESS_RE.match(text.strip()))


def _tx_hash(text: str) -> str:
    text = text.strip()
    if not _HASH_RE.match(text):
        raise ValueError(f"bad transaction hash {text!r}")
    return text.lower()


def _uint(text: str, what: str) -> int:
    text = text.strip()
    try:
        value = int(text, 0) if text.lower().startswith("0x") else int(text)
    except ValueError:
        raise ValueError(f"bad {what} {text!r}") from None
    if value < 0:
        raise ValueError(f"negative {what} {value}")
    if value > _UINT256_MAX:
        raise ValueError(f"{what} exceeds 256 bits")
    return value


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise ValueError(f"bad boolean {text!r}")


@dataclass(frozen=True)
class ExternalTx:
    tx_hash: str
    block: int
    sender: Address
    receiver: Optional[Address]
    value: int
    gas_price: int
    success: bool
    seq: int

    kind = "external"


@dataclass(frozen=True)
class InternalTx:
    parent_hash: str
    block: int
    sender: Address
    receiver: Address
    value: int
    opcode: str
    seq: int

    kind = "internal"
    gas_price = None


Transaction = Union[ExternalTx, InternalTx]


@dataclass(frozen=True)
class MaliciousLabel:
    activity: str
    source: str


@dataclass(frozen=True)
class AccountRecord:
    address: Address
    kind: str
    label: Optional[MaliciousLabel] = None


@dataclass(frozen=True)
class SourceRecord:
    address: Address
    source: bytes
    available: bool

    def __post_init__(self):
        if not self.available and self.source:
            raise ValueError("unavailable source must be empty")


@dataclass
class DataStore:
    """Immutable-after-ingest index over one dataset.

    ``events`` holds external and internal transactions interleaved by
    (block, ingest sequence); every ``seq`` of an external row precedes
    every internal row, so within a block externals come first.
    """

    external: tuple
    internal: tuple
    accounts: dict
    sources: dict
    rejects: list = field(default_factory=list)
    events: list = field(init=False)
    max_block: int = field(init=False)
    _blocks: list = field(init=False, repr=False)
    _by_account: dict = field(init=False, repr=False)
    _account_blocks: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.events = sorted(self.external + self.internal, key=lambda t: (t.block, t.seq))
        self._blocks = [t.block for t in self.events]
        self.max_block = self._blocks[-1] if self._blocks else 0
        by_account: dict[str, list[int]] = {}
        for i, tx in enumerate(self.events):
            by_account.setdefault(tx.sender, []).append(i)
            if tx.receiver is not None and tx.receiver != tx.sender:
                by_account.setdefault(tx.receiver, []).append(i)
        self._by_account = by_account
        self._account_blocks = {a: [self._blocks[i] for i in idx] for a, idx in by_account.items()}

    def account_transactions(self, address: Address) -> list:
        return [self.events[i] for i in self._by_account.get(address, ())]

    def activity_slice(self, address: Address, start: int, end: int) -> list:
        """Transactions touching ``address`` with block in [start, end]."""
        if start > end:
            raise ValueError("range start exceeds end")
        idx = self._by_account.get(address.lower())
        if not idx:
            return []
        blocks = self._account_blocks[address.lower()]
        lo = bisect.bisect_left(blocks, start)
        hi = bisect.bisect_right(blocks, end)
        return [self.events[i] for i in idx[lo:hi]]

    def transactions_between(self, start: int, end: int) -> list:
        lo = bisect.bisect_left(self._blocks, start)
        hi = bisect.bisect_right(self._blocks, end)
        return self.events[lo:hi]

    def index_size(self, address: Address) -> int:
        return len(self._by_account.get(address, ()))

    def labels(self) -> dict:
        return {a: r.label for a, r in self.accounts.items() if r.label is not None}

    def kind(self, address: Address) -> Optional[str]:
        rec = self.accounts.get(address)
        return rec.kind if rec else None

    def to_json(self) -> str:
        """Canonical serialization; equal stores give equal text."""

        def tx_row(t):
            if t.kind == "external":
                return ["E", t.tx_hash, t.block, t.sender, t.receiver, str(t.value), str(t.gas_price), t.success]
            return ["I", t.parent_hash, t.block, t.sender, t.receiver, str(t.value), t.opcode]

        doc = {
            "maxBlock": self.max_block,
            "events": [tx_row(t) for t in self.events],
            "accounts": [
                [a, r.kind, r.label.activity if r.label else None, r.label.source if r.label else None]
                for a, r in sorted(self.accounts.items())
            ],
            "sources": [
                [a, s.available, base64.b64encode(s.source).decode()] for a, s in sorted(self.sources.items())
            ],
            "rejects": [[r.file, r.line, r.reason] for r in self.rejects],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _read_rows(path: Path, header: list):
    """Yield (line_number, row dict); header must contain the expected columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [h for h in header if h not in (reader.fieldnames or [])]
        if missing:
            raise MalformedRow(path.name, 1, f"missing columns {missing}")
        for row in reader:
            yield reader.line_num, row


def _parse_external(row: dict, seq: int) -> ExternalTx:
    to = (row["to"] or "").strip()
    return ExternalTx(
        tx_hash=_tx_hash(row["txHash"]),
        block=_uint(row["blockNumber"], "blockNumber"),
        sender=normalize_address(row["from"]),
        receiver=normalize_address(to) if to else None,
        value=_uint(row["value"], "value"),
        gas_price=_uint(row["gasPrice"], "gasPrice"),
        success=_bool(row["success"]),
        seq=seq,
    )


def _parse_internal(row: dict, seq: int) -> InternalTx:
    opcode = (row["opcode"] or "").strip().upper()
    if opcode not in OPCODES:
        raise ValueError(f"unknown opcode {row['opcode']!r}")
    to = (row["to"] or "").strip()
    if not to:
        raise ValueError("internal transaction without receiver")
    return InternalTx(
        parent_hash=_tx_hash(row["parentTxHash"]),
        block=_uint(row["blockNumber"], "blockNumber"),
        sender=normalize_address(row["from"]),
        receiver=normalize_address(to),
        value=_uint(row["value"], "value"),
        opcode=opcode,
        seq=seq,
    )


def _load_source(cell: str, base: Path) -> tuple:
    cell = cell.strip()
    if not cell:
        return b"", False
    if cell.startswith("base64:"):
        try:
            return base64.b64decode(cell[7:], validate=True), True
        except binascii.Error as exc:
            raise ValueError(f"bad base64 source: {exc}") from None
    path = base / cell
    if not path.is_file():
        raise ValueError(f"source file {cell!r} not found")
    return path.read_bytes(), True


def _reject(rejects: list, file: str, line: int, exc: Exception):
    err = MalformedRow(file, line, str(exc))
    log.warning("rejected row %s", err)
    rejects.append(err)


def ingest(dataset_dir: PathLike, max_block: Optional[int] = None) -> DataStore:
    """Load and index a dataset directory.

    Malformed rows are skipped and recorded on ``store.rejects``. A repeated
    address in labels.csv is fatal, as is a dataset without any valid
    transaction. ``max_block`` (when given) rejects rows above it.
    """
    base = Path(dataset_dir)
    rejects: list[MalformedRow] = []

    external: list[ExternalTx] = []
    ext_path = base / "external.csv"
    if ext_path.exists():
        for line, row in _read_rows(ext_path, EXTERNAL_HEADER):
            try:
                tx = _parse_external(row, len(external))
                if max_block is not None and tx.block > max_block:
                    raise ValueError(f"block {tx.block} beyond maxBlock {max_block}")
                external.append(tx)
            except (ValueError, TypeError, AttributeError) as exc:
                _reject(rejects, "external.csv", line, exc)

    internal: list[InternalTx] = []
    int_path = base / "internal.csv"
    if int_path.exists():
        offset = len(external)
        for line, row in _read_rows(int_path, INTERNAL_HEADER):
            try:
                tx = _parse_internal(row, offset + len(internal))
                if max_block is not None and tx.block > max_block:
                    raise ValueError(f"block {tx.block} beyond maxBlock {max_block}")
                internal.append(tx)
            except (ValueError, TypeError, AttributeError) as exc:
                _reject(rejects, "internal.csv", line, exc)

    if not external and not internal:
        raise EmptyDataset(f"no valid transactions in {base}")

    # contract-creation txs: take the created address from the matching CREATE record
    created_by_parent = {}
    for t in internal:
        if t.opcode == "CREATE":
            created_by_parent.setdefault(t.parent_hash, t.receiver)
    external = [
        ExternalTx(t.tx_hash, t.block, t.sender, created_by_parent[t.tx_hash], t.value, t.gas_price, t.success, t.seq)
        if t.receiver is None and t.tx_hash in created_by_parent
        else t
        for t in external
    ]

    labels: dict[str, MaliciousLabel] = {}
    lab_path = base / "labels.csv"
    if lab_path.exists():
        for line, row in _read_rows(lab_path, LABELS_HEADER):
            try:
                addr = normalize_address(row["address"])
                activity = _ACTIVITY_ALIASES.get((row["activity"] or "").strip().lower())
                if activity is None:
                    raise ValueError(f"unknown activity {row['activity']!r}")
            except (ValueError, AttributeError) as exc:
                _reject(rejects, "labels.csv", line, exc)
                continue
            if addr in labels:
                raise DuplicateAccount(f"labels.csv:{line}: {addr} labelled twice")
            labels[addr] = MaliciousLabel(activity, (row.get("source") or "").strip())

    sources: dict[str, SourceRecord] = {}
    src_path = base / "sources.csv"
    if src_path.exists():
        for line, row in _read_rows(src_path, SOURCES_HEADER):
            try:
                addr = normalize_address(row["address"])
                if addr in sources:
                    raise ValueError(f"duplicate source row for {addr}")
                text, available = _load_source(row["source"] or "", base)
            except (ValueError, AttributeError) as exc:
                _reject(rejects, "sources.csv", line, exc)
                continue
            sources[addr] = SourceRecord(addr, text, available)

    accounts = _build_accounts(external, internal, labels, sources)
    if rejects:
        log.info("ingest rejected %d rows", len(rejects))
    return DataStore(tuple(external), tuple(internal), accounts, sources, rejects)


def _build_accounts(external: Iterable, internal: Iterable, labels: dict, sources: dict) -> dict:
    """Infer account kinds.

    Contracts: labelled or sourced addresses, CREATE targets, receivers of
    resolved creation txs, and senders of non-CREATE internal messages.
    Everything else is an EOA.
    """
    contracts = set(labels) | set(sources)
    seen: set = set()
    for t in external:
        seen.add(t.sender)
        if t.receiver is not None:
            seen.add(t.receiver)
    for t in internal:
        seen.add(t.sender)
        seen.add(t.receiver)
        if t.opcode == "CREATE":
            contracts.add(t.receiver)
        else:
            contracts.add(t.sender)
    created = {t.receiver for t in internal if t.opcode == "CREATE"}
    contracts |= created
    accounts = {}
    for addr in sorted(seen | contracts):
        accounts[addr] = AccountRecord(addr, SC if addr in contracts else EOA, labels.get(addr))
    return accounts


def write_transactions(out_dir: PathLike, external_rows: Iterable, internal_rows: Iterable):
    """Write row dicts in the ingest file format (used by the explorer client and fixtures)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, header, rows in (
        ("external.csv", EXTERNAL_HEADER, external_rows),
        ("internal.csv", INTERNAL_HEADER, internal_rows),
    ):
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({h: row.get(h, "") for h in header})
