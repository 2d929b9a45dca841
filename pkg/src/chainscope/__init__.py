"""Lookalike detection for malicious Ethereum smart contracts.

Transaction histories are cut into time segments, every contract gets a
behavioural feature vector per segment, K-Means groups them, and benign
contracts sitting next to known malicious ones become suspects.
"""
from .config import PipelineConfig, load_config
from .data import DataStore, ingest
from .pipeline import STAGES, Pipeline, run_pipeline

__version__ = "0.1.0"

__all__ = ["DataStore", "Pipeline", "PipelineConfig", "STAGES", "ingest", "load_config", "run_pipeline", "__version__"]
