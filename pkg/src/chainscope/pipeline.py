"""End-to-end orchestration: ingest -> lineage -> dedup -> scoring -> features
-> clustering -> suspects -> reports. Every stage writes its CSV artifacts
into the output directory."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import clustering as cl
from .config import PipelineConfig
from .data import SC, DataStore, ingest
from .dedup import Grouping, group_by_hash, propagate_findings, write_groups
from .errors import ConfigError, StageError
from .features import (
    FeatureVector,
    build_feature_vector,
    compute_features,
    local_clustering,
    read_features,
    segment_adjacency,
    write_features,
)
from .graph import (
    build_create_graph,
    component_stats,
    expand_suspects,
    read_address_file,
    write_component_report,
    write_edge_list,
)
from .reports import (
    probability_histogram,
    severity_fraction_report,
    vuln_activity_matrix,
    vuln_frequency_report,
    write_frequency,
    write_histograms,
    write_matrix,
    write_severity_fractions,
)
from .segments import Granularity, assign_activity, segment_bounds, write_segments
from .suspects import ThresholdMode, flag_suspects, suspect_probability, write_flags, write_probabilities
from .vulns import load_findings, load_vocabulary, severity_score

log = logging.getLogger(__name__)

STAGES = ("ingest", "graph", "dedup", "score", "features", "cluster", "suspects", "report")


def _write_csv(path: Path, header: list, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


@dataclass
class SegmentClustering:
    addresses: list
    scaled: np.ndarray
    labels: np.ndarray
    k: int
    table: list


@dataclass
class Pipeline:
    config: PipelineConfig
    out_dir: Path
    done: list = field(default_factory=list)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if not Path(self.config.dataset).is_dir():
            raise ConfigError(f"dataset directory {self.config.dataset} not found")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.previous = self._read_manifest()

    def path(self, name: str) -> Path:
        return self.out_dir / name

    # -- stages ---------------------------------------------------------------

    def stage_ingest(self):
        cfg = self.config
        self.store: DataStore = ingest(cfg.dataset, cfg.max_block)
        self.max_block = cfg.max_block or self.store.max_block
        _write_csv(
            self.path("accounts.csv"),
            ["address", "kind", "activity"],
            [(a, r.kind, r.label.activity if r.label else "") for a, r in sorted(self.store.accounts.items())],
        )
        _write_csv(self.path("ingest_rejects.csv"), ["file", "line", "reason"],
                   [(r.file, r.line, r.reason) for r in self.store.rejects])

    def stage_graph(self):
        cfg, store = self.config, self.store
        self.graph = build_create_graph(store)
        labels = store.labels()
        excluded = set()
        if cfg.excluded is not None:
            excluded = read_address_file(cfg.excluded)
        elif (Path(cfg.dataset) / "excluded.txt").is_file():
            excluded = read_address_file(Path(cfg.dataset) / "excluded.txt")
        kinds = {a: r.kind for a, r in store.accounts.items()}
        self.activity: dict = {a: lab.activity for a, lab in labels.items()}
        if labels:
            self.expansion = expand_suspects(self.graph, labels, excluded, kinds)
            for seed in sorted(self.expansion.per_seed_component):
                for member in sorted(self.expansion.per_seed_component[seed]):
                    self.activity.setdefault(member, labels[seed].activity)
            rows, aggregate = component_stats(self.graph, self.expansion, kinds)
        else:
            self.expansion, rows, aggregate = None, [], {}
        self.malicious = frozenset(self.activity)
        write_edge_list(self.graph, self.path("create_edges.csv"))
        write_component_report(rows, self.path("components.csv"))
        _write_csv(self.path("component_summary.csv"), ["metric", "value"], sorted(aggregate.items()))
        _write_csv(self.path("malicious.csv"), ["address", "activity", "labelled"],
                   [(a, self.activity[a], int(a in labels)) for a in sorted(self.activity)])

    def stage_dedup(self):
        store = self.store
        records = [store.sources[a] for a in sorted(store.sources)]
        self.grouping: Grouping = group_by_hash(records)
        write_groups(self.grouping, self.path("groups.csv"), self.path("groups_members.csv"))
        log.info("%d source groups, %d contracts without source", len(self.grouping.groups), len(self.grouping.missing))

    def stage_score(self):
        cfg = self.config
        self.vocabulary = load_vocabulary(cfg.vocabulary, cfg.aliases)
        findings_path = cfg.findings or Path(cfg.dataset) / "findings.csv"
        raw = {}
        if Path(findings_path).is_file():
            raw, _ = load_findings(findings_path, self.vocabulary, self.path("rejects.csv"))
        else:
            _write_csv(self.path("rejects.csv"), ["subject", "tool", "rawName"], [])
        self.findings = propagate_findings(self.grouping.groups, raw)
        weights = cfg.severity_weights
        self.scores = {a: severity_score(f, a, cfg.dedupe, weights) for a, f in sorted(self.findings.items())}
        _write_csv(
            self.path("findings_normalized.csv"),
            ["address", "tool", "vocabName", "severity", "cwe"],
            [
                (a, f.tool, f.vocab_name, f.severity.letter, self.vocabulary[f.vocab_name].cwe or "")
                for a, items in sorted(self.findings.items())
                for f in items
            ],
        )
        _write_csv(self.path("scores.csv"), ["address", "severityScore", "vulnCount"],
                   [(a, repr(s.score), s.vuln_count) for a, s in self.scores.items()])

    def population(self, config_name: str) -> list:
        """Contracts entering the feature/cluster stages for one feature configuration."""
        sourced = set(self.findings)
        if config_name == "tx" and self.config.include_sourceless:
            sourced |= {a for a, r in self.store.accounts.items() if r.kind == SC}
        return sorted(sourced)

    def _feature_file(self, gran: Granularity, config_name: str) -> Path:
        return self.path(f"features_{gran.value}_{config_name.replace('+', '_')}.csv")

    def stage_features(self):
        cfg, store = self.config, self.store
        self.segments = {g: segment_bounds(g, self.max_block, cfg.blocks_per_day) for g in cfg.granularities}
        write_segments(self.path("segments.csv"), self.segments)
        prev = self.previous
        resumable = prev.get("fingerprint") == self.fingerprint() and "features" in prev.get("stages", [])
        pops = {c: set(self.population(c)) for c in cfg.feature_configs}
        everyone = set().union(*pops.values())
        self.features: dict = {}
        activity_rows = []
        for gran, segs in self.segments.items():
            active = assign_activity(store, segs, everyone)
            for idx, addrs in active.items():
                activity_rows.extend((gran.value, idx, a) for a in addrs)
            files = {c: self._feature_file(gran, c) for c in cfg.feature_configs}
            if resumable and all(f.is_file() for f in files.values()):
                self.features[gran] = {c: read_features(files[c], c) for c in cfg.feature_configs}
                log.info("features for %s resumed from disk", gran.value)
                continue
            per_config: dict = {c: [] for c in cfg.feature_configs}
            by_index = {s.index: s for s in segs}
            for idx, addrs in active.items():
                seg = by_index[idx]
                adj = segment_adjacency(store, seg)
                for a in addrs:
                    txs = store.activity_slice(a, seg.query_start, seg.end)
                    base = compute_features(txs, a, seg.start, seg.end, local_clustering(adj, a), cfg.burst_params)
                    for c in cfg.feature_configs:
                        if a not in pops[c]:
                            continue
                        values = base
                        if c == "tx+sev":
                            values = np.append(base, self.scores[a].score if a in self.scores else 0.0)
                        per_config[c].append(FeatureVector(a, idx, c, values))
            for c, vecs in per_config.items():
                write_features(files[c], vecs)
            self.features[gran] = per_config
        _write_csv(self.path("activity.csv"), ["granularity", "segment", "address"], activity_rows)

    def _cluster_segment(self, vecs: list) -> SegmentClustering:
        cfg = self.config
        addrs = [v.subject for v in vecs]
        scaled, _, _ = cl.minmax_scale(np.vstack([v.values for v in vecs]))
        n = scaled.shape[0]
        # more clusters than distinct points would split identical accounts apart
        distinct = np.unique(scaled, axis=0).shape[0]
        hi = min(cfg.k_max, n - 1, distinct)
        lo = min(cfg.k_min, hi)
        if hi < 2:
            return SegmentClustering(addrs, scaled, np.zeros(n, dtype=int), 1, [])
        result = cl.sweep_k(scaled, (lo, hi), cfg.seed, cfg.silhouette_sample)
        return SegmentClustering(addrs, scaled, result.best.labels, result.best.k, result.table)

    def stage_cluster(self):
        cfg = self.config
        self.clusterings: dict = {}
        cluster_rows, assign_rows = [], []
        for gran in cfg.granularities:
            for c in cfg.feature_configs:
                by_seg: dict = {}
                for v in self.features[gran][c]:
                    by_seg.setdefault(v.segment, []).append(v)
                for idx in sorted(by_seg):
                    sc = self._cluster_segment(by_seg[idx])
                    self.clusterings[(gran, c, idx)] = sc
                    for k, s in sc.table:
                        cluster_rows.append((gran.value, idx, c, k, repr(s), int(k == sc.k)))
                    assign_rows.extend((gran.value, idx, c, a, int(l)) for a, l in zip(sc.addresses, sc.labels))
        _write_csv(self.path("clusters.csv"), ["granularity", "segment", "config", "k", "silhouette", "selected"], cluster_rows)
        _write_csv(self.path("assignments.csv"), ["granularity", "segment", "config", "address", "cluster"], assign_rows)
        self._silhouette_comparison()

    def _silhouette_comparison(self):
        """K-Means vs Agglomerative silhouettes over the whole history (when ALL is selected)."""
        cfg = self.config
        rows = []
        if Granularity.ALL in cfg.granularities:
            for c in cfg.feature_configs:
                sc = self.clusterings.get((Granularity.ALL, c, 1))
                if sc is None or not sc.table:
                    continue
                kmeans_scores = dict(sc.table)
                for k in sorted(kmeans_scores):
                    rows.append((c, "kmeans", k, repr(kmeans_scores[k])))
                    labels = cl.agglomerative(sc.scaled, k)
                    rows.append((c, "agglomerative", k, repr(cl.silhouette(sc.scaled, labels, cfg.silhouette_sample, cfg.seed))))
        _write_csv(self.path("silhouette_comparison.csv"), ["config", "algorithm", "k", "silhouette"], rows)

    def stage_suspects(self):
        cfg = self.config
        flag_rows, prob_rows = [], []
        self.probabilities: dict = {}
        for gran in cfg.granularities:
            mode = ThresholdMode(cfg.mode_for(gran))
            for c in cfg.feature_configs:
                flagged: dict = {}
                active: dict = {}
                for (g, cc, idx), sc in sorted(self.clusterings.items(), key=lambda kv: kv[0][2]):
                    if g is not gran or cc != c:
                        continue
                    benign = [a for a in sc.addresses if a not in self.malicious]
                    active[idx] = benign
                    mal = np.array([a in self.malicious for a in sc.addresses])
                    if not mal.any():
                        continue
                    target = cl.target_cluster(sc.labels, mal, cfg.target_rule)
                    members = np.flatnonzero(sc.labels == target)
                    flags = flag_suspects(
                        [sc.addresses[i] for i in members], sc.scaled[members], mal[members], cfg.epsilon, mode, idx
                    )
                    for f in flags:
                        flag_rows.append((gran.value, c, f))
                    flagged[idx] = [f.address for f in flags if f.flagged]
                probs = suspect_probability(flagged, active, gran.value)
                self.probabilities[(gran, c)] = probs
                prob_rows.extend((c, p) for p in probs)
        with open(self.path("flags.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["address", "granularity", "segment", "config", "maxSimilarity", "flagged"])
            for g, c, f in flag_rows:
                w.writerow([f.address, g, f.segment, c, repr(f.max_similarity), int(f.flagged)])
        write_probabilities(self.path("probabilities.csv"), prob_rows)

    def stage_report(self):
        cfg = self.config
        malicious_sourced = {a: act for a, act in self.activity.items() if a in self.findings}
        matrix = vuln_activity_matrix(self.findings, malicious_sourced, self.vocabulary)
        write_matrix(self.path("vuln_activity_matrix.csv"), matrix)
        classes = {}
        for a in self.findings:
            if a in self.activity:
                classes[a] = ["malicious", self.activity[a]]
            else:
                classes[a] = ["benign"]
        stats = severity_fraction_report(self.findings, classes, cfg.dedupe, cfg.severity_weights)
        write_severity_fractions(self.path("severity_fractions.csv"), stats)
        write_frequency(self.path("vuln_frequency.csv"), vuln_frequency_report(self.findings, self.vocabulary))
        hist_rows, summary = [], []
        for (gran, c), probs in self.probabilities.items():
            hist_rows.append((gran.value, c, probability_histogram(p.p for p in probs)))
            sure = sorted(p.address for p in probs if p.flagged_segments == p.active_segments and p.flagged_segments > 0)
            summary.append((gran.value, c, len(probs), len(sure), ";".join(sure)))
        write_histograms(self.path("probability_histograms.csv"), hist_rows)
        _write_csv(self.path("summary.csv"), ["granularity", "config", "accounts", "suspectsP1", "suspects"], summary)
        for g, c, _, n, _ in summary:
            log.info("suspects with p=1: %s/%s = %d", g, c, n)

    # -- driver ---------------------------------------------------------------

    def _read_manifest(self) -> dict:
        p = self.path("manifest.json")
        if not p.is_file():
            return {}
        try:
            return json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return {}

    def fingerprint(self) -> str:
        """Digest of the settings and the bytes of every input file (locations excluded)."""
        if getattr(self, "_fingerprint", None) is None:
            cfg = self.config
            h = hashlib.sha256(cfg.fingerprint().encode())
            out = self.out_dir.resolve()
            files = sorted(
                p for p in Path(cfg.dataset).rglob("*") if p.is_file() and not p.resolve().is_relative_to(out)
            )
            extra = (cfg.findings, cfg.excluded, cfg.vocabulary, cfg.aliases)
            files += [Path(p) for p in extra if p is not None and Path(p).is_file()]
            for f in files:
                rel = f.relative_to(cfg.dataset).as_posix() if f.is_relative_to(cfg.dataset) else f.name
                h.update(rel.encode() + b"\0" + hashlib.sha256(f.read_bytes()).digest())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def _write_manifest(self):
        doc = {"fingerprint": self.fingerprint(), "stages": list(self.done)}
        self.path("manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    def run(self, until: str = "report") -> "Pipeline":
        if until not in STAGES:
            raise ConfigError(f"unknown stage {until!r}")
        for stage in STAGES[: STAGES.index(until) + 1]:
            if stage in self.done:
                continue
            log.info("stage %s", stage)
            try:
                getattr(self, f"stage_{stage}")()
            except ConfigError:
                raise
            except Exception as exc:
                raise StageError(stage, exc) from exc
            self.done.append(stage)
            self._write_manifest()
        return self


def run_pipeline(config: PipelineConfig, out_dir, until: str = "report") -> Pipeline:
    return Pipeline(config, Path(out_dir)).run(until)
