import base64
import csv
from pathlib import Path

import pytest

from chainscope.data import write_transactions


def addr(n: int) -> str:
    return "0x" + f"{n:040x}"


def txh(n: int) -> str:
    return "0x" + f"{n:064x}"


def write_dataset(root: Path, external=(), internal=(), labels=(), sources=()):
    """Write a dataset from compact tuples.

    external: (n, block, from, to|None, value, gas_price[, success])
    internal: (parent n, block, from, to, value, opcode)
    labels:   (address, activity)
    sources:  (address, bytes | None)
    """
    ext_rows = [
        {
            "txHash": txh(t[0]),
            "blockNumber": t[1],
            "from": t[2],
            "to": t[3] or "",
            "value": t[4],
            "gasPrice": t[5],
            "success": t[6] if len(t) > 6 else "1",
        }
        for t in external
    ]
    int_rows = [
        {"parentTxHash": txh(t[0]), "blockNumber": t[1], "from": t[2], "to": t[3], "value": t[4], "opcode": t[5]}
        for t in internal
    ]
    write_transactions(root, ext_rows, int_rows)
    if labels:
        with open(root / "labels.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["address", "activity", "source"])
            for a, act in labels:
                w.writerow([a, act, "test"])
    if sources:
        with open(root / "sources.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["address", "source"])
            for a, src in sources:
                w.writerow([a, "" if src is None else "base64:" + base64.b64encode(src).decode()])
    return root


@pytest.fixture(scope="session")
def fixture_bundle(tmp_path_factory):
    """The synthetic dataset and one full pipeline run over it."""
    from chainscope.cli import main
    from chainscope.synthetic import make_fixture

    data = tmp_path_factory.mktemp("fixture")
    roles = make_fixture(data, seed=7)
    out = tmp_path_factory.mktemp("bundle")
    code = main(["run", "--config", str(data / "chainscope.cfg"), "--out", str(out)])
    assert code == 0
    return data, out, roles
