"""Deterministic synthetic dataset with a planted lookalike.

Layout of the generated world (60 days of blocks):

* a phishing kit: four labelled contracts with identical behaviour and
  identical source, each deployed by its own EOA;
* ``clone``: an unlabelled contract that replays the kit's behaviour block
  for block with its own fresh victims; it should be flagged with p = 1;
* ``control``: a benign contract that only pays out, never flagged;
* a Ponzi contract that deploys a child contract (lineage expansion);
* an organisation factory deploying four contracts, one of them a labelled
  gambling contract; the factory is listed in ``excluded.txt``;
* a few dozen benign contracts with randomised traffic.
"""
from __future__ import annotations

import base64
import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .data import write_transactions

BLOCKS_PER_DAY = 6000
DAYS = 60
MAX_BLOCK = DAYS * BLOCKS_PER_DAY
N_BENIGN = 40
GWEI = 10**9
ETHER = 10**18

KIT_SOURCE = b"pragma solidity ^0.4.24;\ncontract Airdrop {\n  address owner;\n  function() payable { owner.transfer(msg.value); }\n}\n"


class _World:
    def __init__(self, seed: int):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.external: list = []
        self.internal: list = []
        self._n = 0

    def address(self, name: str) -> str:
        return "0x" + hashlib.sha256(f"{self.seed}:{name}".encode()).hexdigest()[:40]

    def _hash(self) -> str:
        self._n += 1
        return "0x" + hashlib.sha256(f"{self.seed}:tx:{self._n}".encode()).hexdigest()

    def tx(self, block, sender, receiver, value=0, gas_gwei=20, success=True) -> str:
        h = self._hash()
        self.external.append(
            {
                "txHash": h,
                "blockNumber": block,
                "from": sender,
                "to": receiver or "",
                "value": value,
                "gasPrice": gas_gwei * GWEI,
                "success": "1" if success else "0",
            }
        )
        return h

    def call(self, parent, block, sender, receiver, value, opcode="CALL"):
        self.internal.append(
            {"parentTxHash": parent, "blockNumber": block, "from": sender, "to": receiver, "value": value, "opcode": opcode}
        )

    def deploy_by_eoa(self, block, eoa, contract, gas_gwei=20):
        h = self.tx(block, eoa, None, 0, gas_gwei)
        self.call(h, block, eoa, contract, 0, "CREATE")

    def deploy_by_contract(self, block, caller_eoa, factory, contract):
        h = self.tx(block, caller_eoa, factory, 0)
        self.call(h, block, factory, contract, 0, "CREATE")


def _kit_schedule(rng) -> list:
    """(block, victims paying, value per victim, gas gwei) for each kit campaign burst."""
    days = np.sort(rng.choice(np.arange(2, DAYS), size=14, replace=False))
    plan = []
    for d in days:
        start = int(d) * BLOCKS_PER_DAY + int(rng.integers(1, BLOCKS_PER_DAY - 200))
        for j in range(int(rng.integers(1, 4))):
            plan.append((start + 40 * j, int(rng.integers(1, 5)), int(rng.integers(1, 9)) * ETHER // 10, int(rng.integers(5, 60))))
    return plan


def _play_kit(w: _World, contract: str, attacker: str, tag: str, plan: list, deploy_block: int, creator: str):
    w.deploy_by_eoa(deploy_block, creator, contract, 41)
    for i, (block, n_victims, value, gas) in enumerate(plan):
        last = None
        for v in range(n_victims):
            last = w.tx(block, w.address(f"{tag}:victim:{i}:{v}"), contract, value, gas)
        # the contract forwards the whole take to the attacker in the same block
        w.call(last, block, contract, attacker, value * n_victims)


def _benign(w: _World, name: str, creator: str, deploy_block: int):
    rng = w.rng
    w.deploy_by_eoa(deploy_block, creator, name, int(rng.integers(3, 80)))
    users = [w.address(f"{name}:user:{u}") for u in range(int(rng.integers(3, 25)))]
    n_days = int(rng.integers(2, 30))
    first_day = deploy_block // BLOCKS_PER_DAY
    days = np.sort(rng.choice(np.arange(first_day, DAYS), size=min(n_days, DAYS - first_day), replace=False))
    style = int(rng.integers(0, 3))
    for d in days:
        for _ in range(int(rng.integers(1, 12))):
            block = int(d) * BLOCKS_PER_DAY + int(rng.integers(1, BLOCKS_PER_DAY))
            block = max(block, deploy_block + 1)
            u = users[int(rng.integers(len(users)))]
            value = 0 if rng.random() < 0.3 else int(rng.integers(1, 10**6)) * 10**12
            gas = int(rng.integers(1, 120))
            h = w.tx(block, u, name, value, gas)
            if style >= 1 and value and rng.random() < 0.5:
                w.call(h, block, name, users[int(rng.integers(len(users)))], value // int(rng.integers(1, 4)))
            if style == 2 and rng.random() < 0.2:
                # users that also trade with each other produce non-zero clustering
                w.tx(block, u, users[int(rng.integers(len(users)))], int(rng.integers(1, 100)) * 10**15, gas)


def make_fixture(out_dir, seed: int = 7) -> dict:
    """Write a complete dataset directory (and a pipeline config) to ``out_dir``.

    Returns the role map (also saved as ``fixture.json``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    w = _World(seed)
    rng = w.rng

    kit = [w.address(f"kit:{i}") for i in range(4)]
    clone = w.address("clone")
    attacker = w.address("kit:attacker")
    plan = _kit_schedule(rng)
    deploy = BLOCKS_PER_DAY + 17
    for i, c in enumerate(kit):
        _play_kit(w, c, attacker, f"kit{i}", plan, deploy, w.address(f"kit:{i}:deployer"))
    _play_kit(w, clone, w.address("clone:attacker"), "clone", plan, deploy, w.address("clone:deployer"))

    ponzi, child = w.address("ponzi"), w.address("ponzi:child")
    ponzi_owner = w.address("ponzi:owner")
    w.deploy_by_eoa(3 * BLOCKS_PER_DAY + 5, ponzi_owner, ponzi)
    w.deploy_by_contract(3 * BLOCKS_PER_DAY + 900, ponzi_owner, ponzi, child)
    investors = [w.address(f"ponzi:investor:{i}") for i in range(30)]
    for i, inv in enumerate(investors):
        block = (4 + i) * BLOCKS_PER_DAY + int(rng.integers(1, 3000))
        h = w.tx(block, inv, ponzi, (i + 1) * ETHER // 4, 30)
        if i >= 2:
            w.call(h, block, ponzi, investors[i - 2], (i - 1) * ETHER // 3)
        if i % 5 == 0:
            h = w.tx(block + 10, ponzi_owner, child, 0, 30)
            w.call(h, block + 10, child, ponzi_owner, ETHER // 10)

    org, org_admin = w.address("org"), w.address("org:admin")
    w.deploy_by_eoa(2 * BLOCKS_PER_DAY + 11, org_admin, org)
    org_children = [w.address(f"org:{i}") for i in range(4)]
    for i, c in enumerate(org_children):
        w.deploy_by_contract(2 * BLOCKS_PER_DAY + 100 * (i + 1), org_admin, org, c)
    gambling = org_children[2]
    players = [w.address(f"gamble:player:{i}") for i in range(12)]
    for d in range(5, DAYS, 4):
        for p in players[: int(rng.integers(2, 12))]:
            block = d * BLOCKS_PER_DAY + int(rng.integers(1, BLOCKS_PER_DAY))
            h = w.tx(block, p, gambling, ETHER // 100, 25)
            if rng.random() < 0.45:
                w.call(h, block, gambling, p, ETHER // 50)
    for c in (org_children[0], org_children[1], org_children[3]):
        for d in range(6, DAYS, 7):
            w.tx(d * BLOCKS_PER_DAY + int(rng.integers(1, BLOCKS_PER_DAY)), org_admin, c, 0, 15)

    control, control_owner = w.address("control"), w.address("control:owner")
    w.deploy_by_eoa(BLOCKS_PER_DAY + 3, control_owner, control)
    payees = [w.address(f"control:payee:{i}") for i in range(8)]
    for d in range(2, DAYS, 3):
        h = w.tx(d * BLOCKS_PER_DAY + 2500, control_owner, control, 0, 90)
        for j, p in enumerate(payees):
            w.call(h, d * BLOCKS_PER_DAY + 2500, control, p, (j + 1) * 3 * ETHER)

    benign = [w.address(f"benign:{i}") for i in range(N_BENIGN)]
    for i, b in enumerate(benign):
        _benign(w, b, w.address(f"benign:{i}:deployer"), int(rng.integers(1, 40 * BLOCKS_PER_DAY)))
    # one transaction at the last block fixes the horizon
    w.tx(MAX_BLOCK, w.address("horizon"), benign[0], 0, 10)

    w.external.sort(key=lambda r: r["blockNumber"])
    w.internal.sort(key=lambda r: r["blockNumber"])
    write_transactions(out, w.external, w.internal)

    with open(out / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        cw = csv.writer(fh, lineterminator="\n")
        cw.writerow(["address", "activity", "source"])
        for c in kit:
            cw.writerow([c, "Phishing", "etherscan-tag"])
        cw.writerow([ponzi, "Ponzi", "forum-report"])
        cw.writerow([gambling, "Gambling", "etherscan-tag"])

    (out / "excluded.txt").write_text(f"# organisation factories\n{org}\n", encoding="utf-8")

    sources = {c: KIT_SOURCE for c in kit + [clone]}
    sources[ponzi] = b"contract Doubler { function() payable { /* pays earlier investors */ } }\n"
    sources[child] = b"contract Vault { function pull() { msg.sender.transfer(1); } }\n"
    sources[gambling] = b"contract Dice { function roll() payable { if (now % 2 == 0) msg.sender.transfer(2*msg.value); } }\n"
    sources[control] = b"contract Payroll { function pay(address[] a) { for (uint i; i < a.length; i++) a[i].transfer(1); } }\n"
    for i, c in enumerate(org_children):
        if c != gambling:
            sources[c] = f"contract OrgModule{i} {{ }}\n".encode()
    shared_token = b"contract Token { mapping(address => uint) balances; }\n"
    for i, b in enumerate(benign):
        if i % 10 == 9:
            continue  # unverified source
        sources[b] = shared_token if i % 7 == 0 else f"contract Service{i} {{ uint x = {i}; }}\n".encode()
    (out / "sources").mkdir(exist_ok=True)
    with open(out / "sources.csv", "w", newline="", encoding="utf-8") as fh:
        cw = csv.writer(fh, lineterminator="\n")
        cw.writerow(["address", "source"])
        for addr in sorted(sources):
            if addr == control:
                (out / "sources" / "control.sol").write_bytes(sources[addr])
                cw.writerow([addr, "sources/control.sol"])
            else:
                cw.writerow([addr, "base64:" + base64.b64encode(sources[addr]).decode()])
        for i, b in enumerate(benign):
            if i % 10 == 9:
                cw.writerow([b, ""])

    kit_digest = hashlib.sha256(KIT_SOURCE).hexdigest()
    findings = [
        (kit_digest, "slither", "arbitrary-send"),
        (kit_digest, "mythril", "Unprotected Ether Withdrawal"),
        (kit_digest, "smartcheck", "SOLIDITY_TX_ORIGIN"),
        (ponzi, "slither", "reentrancy-eth"),
        (ponzi, "mythril", "Integer Overflow"),
        (ponzi, "oyente", "Timestamp Dependency"),
        (ponzi, "smartcheck", "SOLIDITY_SEND"),
        (ponzi, "osiris", "Integer Underflow"),
        (ponzi, "smartcheck", "SOLIDITY_PRAGMAS_VERSION"),
        (gambling, "slither", "timestamp"),
        (gambling, "mythril", "Transaction Order Dependence"),
        (control, "smartcheck", "SOLIDITY_GAS_LIMIT_IN_LOOPS"),
        (control, "slither", "calls-loop"),
        (hashlib.sha256(shared_token).hexdigest(), "smartcheck", "SOLIDITY_PRAGMAS_VERSION"),
        (benign[1], "mythril", "Exception State"),
        (benign[2], "slither", "not-a-real-detector"),
    ]
    for i in range(3, N_BENIGN, 4):
        if i % 10 != 9 and i % 7 != 0:
            findings.append((benign[i], "smartcheck", "SOLIDITY_VISIBILITY"))
    with open(out / "findings.csv", "w", newline="", encoding="utf-8") as fh:
        cw = csv.writer(fh, lineterminator="\n")
        cw.writerow(["subject", "tool", "rawName"])
        cw.writerows(findings)

    (out / "chainscope.cfg").write_text(f"dataset = .\nseed = 42\n", encoding="utf-8")

    roles = {
        "kit": kit,
        "clone": clone,
        "control": control,
        "ponzi": ponzi,
        "ponzi_child": child,
        "org": org,
        "org_children": org_children,
        "gambling": gambling,
        "benign": benign,
        "max_block": MAX_BLOCK,
    }
    (out / "fixture.json").write_text(json.dumps(roles, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return roles
