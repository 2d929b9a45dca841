"""Per-account, per-segment behavioural feature vectors."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InactiveAccount
from .timeseries import (
    degree_bursts,
    temporal_bursts,
    ts_cwt_coeff0,
    ts_energy_ratio_chunk,
    ts_fft0_real,
    ts_index_mass_quantile,
    ts_linear_trend_pvalue,
    ts_mean,
    ts_median,
    ts_quantile,
    value_bursts,
)

_CWT = "cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_"

FEATURE_NAMES = (
    "indegreeTimeInv",
    "outdegreeTimeInv",
    "degreeTimeInv",
    "numberOfburstTemporalInOut",
    "longestBurstTemporalInOut",
    "numberOfburstTemporalIn",
    "longestBurstTemporalIn",
    "numberOfburstTemporalOut",
    "longestBurstTemporalOut",
    "numberOfburstDegreeInOut",
    "longestBurstDegreeInOutAtTime",
    "numberOfburstDegreeIn",
    "longestBurstDegreeInAtTime",
    "numberOfburstDegreeOut",
    "longestBurstDegreeOutAtTime",
    "zeroTransactions",
    "totalBal",
    "transactedFirst",
    "transactedLast",
    "activeDuration",
    "averagePerInBal",
    "uniqueIn",
    "lastActiveSince",
    "indegree__index_mass_quantile__q_0.1",
    "indegree__energy_ratio_by_chunks__num_segments_10__segment_focus_0",
    'indegree__linear_trend__attr_"pvalue"',
    "ittime__quantile__q_0.7",
    'ittime__fft_coefficient__coeff_0__attr_"real"',
    "ittime__median",
    "outdegree__energy_ratio_by_chunks__num_segments_10__segment_focus_0",
    "outdegree__energy_ratio_by_chunks__num_segments_10__segment_focus_1",
    'outdegree__fft_coefficient__coeff_0__attr_"real"',
    "gasPrice__quantile__q_0.2",
    "gasPrice__quantile__q_0.1",
    "gasPrice__" + _CWT + "20",
    "attractiveness__median",
    "attractiveness__quantile__q_0.4",
    "attractiveness__mean",
    "balanceOut__quantile__q_0.1",
    "balanceOut__quantile__q_0.3",
    "balanceOut__" + _CWT + "2",
    "balanceIn__quantile__q_0.4",
    "balanceIn__" + _CWT + "20",
    "balanceIn__quantile__q_0.3",
    "maxInPayment__quantile__q_0.3",
    "maxInPayment__quantile__q_0.2",
    "maxInPayment__" + _CWT + "5",
    "maxOutPayment__quantile__q_0.6",
    "maxOutPayment__quantile__q_0.1",
    "maxOutPayment__" + _CWT + "2",
    "clusteringCoeff",
    "burstCount_gasPrice",
    "burstCount_balanceIn",
    "burstCount_balanceOut",
    "burstInstance_indegree",
    "burstInstance_outdegree",
    "burstInstance_maxInPayment",
    "burstInstance_maxOutPayment",
    "burstInstance_gasPrice",
)
SEVERITY_FEATURE = "severityScore"
FEATURE_CONFIGS = ("tx", "tx+sev")


def feature_names(config: str = "tx") -> tuple:
    if config == "tx":
        return FEATURE_NAMES
    if config == "tx+sev":
        return FEATURE_NAMES + (SEVERITY_FEATURE,)
    raise ValueError(f"unknown feature config {config!r}")


@dataclass(frozen=True)
class BurstParams:
    temporal_gap_max: int = 1
    degree_threshold: int = 2
    value_run_min: int = 2

    def __post_init__(self):
        if self.temporal_gap_max < 0 or self.degree_threshold < 1 or self.value_run_min < 2:
            raise ValueError(f"invalid burst parameters {self}")


@dataclass
class BaseSeries:
    blocks: list
    indegree: list
    outdegree: list
    gas_price: list
    balance_in: list
    balance_out: list
    max_in: list
    max_out: list
    attractiveness: list
    ittime: list


def build_base_series(txs: list, address: str) -> BaseSeries:
    """Per-active-block series for ``address`` from its block-sorted slice."""
    blocks: list = []
    per_block: dict = {}
    for tx in txs:
        b = per_block.get(tx.block)
        if b is None:
            b = per_block[tx.block] = {"in": 0, "out": 0, "gas": [], "vin": 0, "vout": 0, "min": 0, "mout": 0, "snd": set()}
            blocks.append(tx.block)
        if tx.receiver == address:
            b["in"] += 1
            b["vin"] += tx.value
            b["min"] = max(b["min"], tx.value)
            b["snd"].add(tx.sender)
        if tx.sender == address:
            b["out"] += 1
            b["vout"] += tx.value
            b["mout"] = max(b["mout"], tx.value)
        if tx.gas_price is not None:
            b["gas"].append(tx.gas_price)

    seen: set = set()
    attractiveness = []
    for blk in blocks:
        senders = per_block[blk]["snd"]
        attractiveness.append(len(senders - seen) / len(senders) if senders else 0.0)
        seen |= senders
    tx_blocks = [tx.block for tx in txs]
    rows = [per_block[b] for b in blocks]
    return BaseSeries(
        blocks=blocks,
        indegree=[r["in"] for r in rows],
        outdegree=[r["out"] for r in rows],
        gas_price=[sum(r["gas"]) / len(r["gas"]) if r["gas"] else 0.0 for r in rows],
        balance_in=[float(r["vin"]) for r in rows],
        balance_out=[float(r["vout"]) for r in rows],
        max_in=[float(r["min"]) for r in rows],
        max_out=[float(r["mout"]) for r in rows],
        attractiveness=attractiveness,
        ittime=[b - a for a, b in zip(tx_blocks, tx_blocks[1:])],
    )


def segment_adjacency(store, segment) -> dict:
    """Undirected neighbour sets over every transaction in the segment (self-loops dropped)."""
    adj: dict = {}
    for tx in store.transactions_between(segment.query_start, segment.end):
        u, v = tx.sender, tx.receiver
        if v is None or u == v:
            continue
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def local_clustering(adj: dict, node: str) -> float:
    nbrs = adj.get(node, ())
    d = len(nbrs)
    if d < 2:
        return 0.0
    links = sum(len(adj.get(u, set()) & nbrs) for u in nbrs) // 2
    return 2.0 * links / (d * (d - 1))


def clustering_coefficient(store, address: str, segment, adjacency: Optional[dict] = None) -> float:
    if adjacency is None:
        adjacency = segment_adjacency(store, segment)
    return local_clustering(adjacency, address)


@dataclass
class FeatureVector:
    subject: str
    segment: int
    config: str
    values: np.ndarray

    @property
    def names(self) -> tuple:
        return feature_names(self.config)


def compute_features(
    txs: list,
    address: str,
    seg_start: int,
    seg_end: int,
    clustering: float = 0.0,
    params: Optional[BurstParams] = None,
) -> np.ndarray:
    """The 59 transaction features for one non-empty slice."""
    p = params or BurstParams()
    s = build_base_series(txs, address)
    in_blocks = [t.block for t in txs if t.receiver == address]
    out_blocks = [t.block for t in txs if t.sender == address]
    all_blocks = [t.block for t in txs]
    first, last = s.blocks[0], s.blocks[-1]
    duration = last - first
    n_in, n_out = len(in_blocks), len(out_blocks)
    sum_in = sum(t.value for t in txs if t.receiver == address)
    sum_out = sum(t.value for t in txs if t.sender == address)

    in_counts = dict(zip(s.blocks, s.indegree))
    out_counts = dict(zip(s.blocks, s.outdegree))
    io_counts = {b: in_counts[b] + out_counts[b] for b in s.blocks}
    tb_io = temporal_bursts(all_blocks, p.temporal_gap_max)
    tb_in = temporal_bursts(in_blocks, p.temporal_gap_max)
    tb_out = temporal_bursts(out_blocks, p.temporal_gap_max)
    db_io = degree_bursts(io_counts, p.degree_threshold, first)
    db_in = degree_bursts(in_counts, p.degree_threshold, first)
    db_out = degree_bursts(out_counts, p.degree_threshold, first)
    run = p.value_run_min

    values = [
        n_in / (duration + 1),
        n_out / (duration + 1),
        (n_in + n_out) / (duration + 1),
        tb_io[0], tb_io[1],
        tb_in[0], tb_in[1],
        tb_out[0], tb_out[1],
        db_io[0], db_io[1],
        db_in[0], db_in[1],
        db_out[0], db_out[1],
        sum(1 for t in txs if t.value == 0),
        float(sum_in - sum_out),
        first - seg_start,
        last - seg_start,
        duration,
        sum_in / n_in if n_in else 0.0,
        len({t.sender for t in txs if t.receiver == address}),
        seg_end - last,
        ts_index_mass_quantile(s.indegree, 0.1),
        ts_energy_ratio_chunk(s.indegree, 10, 0),
        ts_linear_trend_pvalue(s.indegree),
        ts_quantile(s.ittime, 0.7),
        ts_fft0_real(s.ittime),
        ts_median(s.ittime),
        ts_energy_ratio_chunk(s.outdegree, 10, 0),
        ts_energy_ratio_chunk(s.outdegree, 10, 1),
        ts_fft0_real(s.outdegree),
        ts_quantile(s.gas_price, 0.2),
        ts_quantile(s.gas_price, 0.1),
        ts_cwt_coeff0(s.gas_price, 20),
        ts_median(s.attractiveness),
        ts_quantile(s.attractiveness, 0.4),
        ts_mean(s.attractiveness),
        ts_quantile(s.balance_out, 0.1),
        ts_quantile(s.balance_out, 0.3),
        ts_cwt_coeff0(s.balance_out, 2),
        ts_quantile(s.balance_in, 0.4),
        ts_cwt_coeff0(s.balance_in, 20),
        ts_quantile(s.balance_in, 0.3),
        ts_quantile(s.max_in, 0.3),
        ts_quantile(s.max_in, 0.2),
        ts_cwt_coeff0(s.max_in, 5),
        ts_quantile(s.max_out, 0.6),
        ts_quantile(s.max_out, 0.1),
        ts_cwt_coeff0(s.max_out, 2),
        clustering,
        value_bursts(s.gas_price, run)[0],
        value_bursts(s.balance_in, run)[0],
        value_bursts(s.balance_out, run)[0],
        value_bursts(s.indegree, run)[1],
        value_bursts(s.outdegree, run)[1],
        value_bursts(s.max_in, run)[1],
        value_bursts(s.max_out, run)[1],
        value_bursts(s.gas_price, run)[1],
    ]
    out = np.array(values, dtype=np.float64)
    if out.size != len(FEATURE_NAMES) or not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite or misshaped feature vector for {address}")
    return out


def build_feature_vector(
    store,
    address: str,
    segment,
    config: str = "tx",
    severity: float = 0.0,
    params: Optional[BurstParams] = None,
    adjacency: Optional[dict] = None,
) -> FeatureVector:
    """Feature vector of ``address`` in ``segment``; ``tx+sev`` appends the severity score."""
    feature_names(config)
    txs = store.activity_slice(address, segment.query_start, segment.end)
    if not txs:
        raise InactiveAccount(f"{address} has no transactions in segment {segment.index}")
    cc = clustering_coefficient(store, address, segment, adjacency)
    values = compute_features(txs, address, segment.start, segment.end, cc, params)
    if config == "tx+sev":
        values = np.append(values, float(severity))
    return FeatureVector(address, segment.index, config, values)


def write_features(path, vectors: list, extra_columns: Optional[dict] = None):
    """features.csv: address, segment, config, then the named feature columns."""
    if not vectors:
        header = ["address", "segment", "config"] + list(FEATURE_NAMES)
        rows = []
    else:
        header = ["address", "segment", "config"] + list(vectors[0].names)
        rows = [[v.subject, v.segment, v.config] + [repr(float(x)) for x in v.values] for v in vectors]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_features(path, config: str) -> list:
    names = feature_names(config)
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[3:]) != names:
            raise ValueError(f"{path}: columns do not match the {config} feature set")
        for row in reader:
            out.append(FeatureVector(row[0], int(row[1]), row[2], np.array([float(x) for x in row[3:]])))
    return out
