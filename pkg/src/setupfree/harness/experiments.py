"""Trial runners and summaries shared by the CLI and the acceptance suite."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import byzantine as bz
from ..aba import Aba, spammer
from ..avss import DEALER_STRATEGIES, AvssPipeline, bad_dealer
from ..coin import GENESIS, Coin, CoreSetProbe
from ..crypto_core import get_suite
from ..election import Election, vote_forger
from ..errors import ParameterError
from ..rbc import Rbc
from ..reactor import instance_bytes
from ..seeding import Seeding
from ..simnet import Adversary, DelayTargets, in_instance, make_scheduler, run

PROTOCOLS = ("rbc", "avss", "seeding", "coin", "aba", "election")
ROOT = {p: ((p, 0),) for p in PROTOCOLS}
ROOT["avss"] = ()
GENESIS_NONCE = b"genesis-nonce"


def default_f(n):
    return (n - 1) // 3


@dataclass
class ExperimentConfig:
    protocol: str
    ns: list = field(default_factory=lambda: [4])
    f: int | None = None
    crypto: str = "mock"
    coin: str = GENESIS
    scheduler: str = "random"
    adversary: str = "none"
    inputs: str = "mixed"
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ParameterError(f"protocol: unknown {self.protocol!r}")
        if self.crypto not in ("mock", "real"):
            raise ParameterError(f"crypto: unknown {self.crypto!r}")
        if self.trials < 1:
            raise ParameterError("trials: must be positive")
        for n in self.ns:
            if n < 3 * self.f_for(n) + 1 or self.f_for(n) < 0:
                raise ParameterError(f"f: n={n} needs n >= 3f+1")

    def f_for(self, n):
        return default_f(n) if self.f is None else self.f

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------- building a trial


def _trial_seed(cfg, n, t):
    return (cfg.seed * 1_000_003 + n * 10_007 + t) & 0x7FFFFFFF


def _inputs(cfg, n, rng):
    if cfg.inputs == "mixed":
        return [rng.randrange(2) for _ in range(n)]
    if cfg.inputs in ("0", "1"):
        return [int(cfg.inputs)] * n
    if cfg.inputs == "split":
        return [i % 2 for i in range(n)]
    raise ParameterError(f"inputs: unknown {cfg.inputs!r}")


def _factory(cfg, n, seed):
    p = cfg.protocol
    root = ROOT[p]
    if p == "rbc":
        return lambda node: Rbc(node, root, 1, b"payload" if node.me == 1 else None)
    if p == "avss":
        return lambda node: AvssPipeline(node, root, 1, b"secret-%d" % seed)
    if p == "seeding":
        return lambda node: Seeding(node, root, 1)
    if p == "coin":
        nonce = GENESIS_NONCE if cfg.coin == GENESIS else None
        return lambda node: Coin(node, root, cfg.coin, nonce)
    if p == "aba":
        bits = _inputs(cfg, n, random.Random(seed))
        return lambda node: Aba(node, root, bits[node.me - 1], cfg.coin, nonce=GENESIS_NONCE)
    return lambda node: Election(node, root, cfg.coin, nonce=GENESIS_NONCE if cfg.coin == GENESIS else None)


def _coin_path(cfg):
    root = ROOT[cfg.protocol]
    if cfg.protocol == "coin":
        return root
    if cfg.protocol == "election":
        return root + (("coin", 0),)
    if cfg.protocol == "aba":
        return root + (("coin", 0),)
    return None


def top_dealer(cfg, n, seed):
    """The party whose VRF evaluation wins the first coin (genesis mode only)."""
    path = _coin_path(cfg)
    if path is None or cfg.coin != GENESIS:
        return None
    from ..crypto_core import KeyRing

    keys = KeyRing.generate(n, get_suite(cfg.crypto), seed=seed)
    inst = instance_bytes(path)
    best = max(range(1, n + 1), key=lambda j: (int.from_bytes(keys.vrf_eval(j, inst, GENESIS_NONCE)[0], "big"), -j))
    return best


def _scheduler(cfg, n, t, seed):
    spec = cfg.scheduler
    if spec == "starve":
        # delay every envelope of the sharing that would win the coin; falls
        # back to a rotating target when the winner is not known in advance
        j = top_dealer(cfg, n, seed) or 1 + t % n
        return DelayTargets(in_instance("sh", j), seed)
    return make_scheduler(spec, seed)


def _adversary(cfg, n, f, t, seed):
    spec = cfg.adversary
    if spec == "none" or f == 0:
        return None
    kind, _, arg = spec.partition(":")
    rng = random.Random(seed ^ 0x5A5A)
    root = ROOT[cfg.protocol]
    target = int(arg) if arg.isdigit() else None
    if kind in ("bad-dealer", "bad-dealer-all"):
        strat = arg if arg in DEALER_STRATEGIES else DEALER_STRATEGIES[t % len(DEALER_STRATEGIES)]
        return Adversary({1}, {1: bad_dealer(strat, b"evil-%d" % seed)})
    pool = range(2, n + 1) if arg == "others" else range(1, n + 1)
    corrupt = [target] if target else sorted(rng.sample(pool, f))
    if kind == "crash":
        make = bz.crash
    elif kind == "equivocate":
        make = bz.equivocate()
    elif kind == "mutate":
        make = bz.mutate()
    elif kind == "random":
        return Adversary(set(corrupt), {c: bz.random_behavior(rng) for c in corrupt})
    elif kind == "spam":
        make = spammer(root)
    elif kind == "vote-forger":
        make = vote_forger(root, cfg.coin, GENESIS_NONCE if cfg.coin == GENESIS else None)
    elif kind == "mixed":
        # cycle through the generic behaviours and the protocol's own attacker
        pool = [bz.crash, bz.equivocate(), bz.mutate()]
        if cfg.protocol == "aba":
            pool.append(spammer(root))
        if cfg.protocol == "election":
            pool.append(vote_forger(root, cfg.coin, GENESIS_NONCE if cfg.coin == GENESIS else None))
        make = pool[t % len(pool)]
    else:
        raise ParameterError(f"adversary: unknown {spec!r}")
    return Adversary(set(corrupt), {c: make for c in corrupt})


def run_trial(cfg: ExperimentConfig, n: int, t: int, probe=None, record=False):
    """One simulated run, reduced to a flat record (plus the raw result)."""
    f = cfg.f_for(n)
    seed = _trial_seed(cfg, n, t)
    suite = get_suite(cfg.crypto)
    adv = _adversary(cfg, n, f, t, seed)
    res = run(n, f, _factory(cfg, n, seed), _scheduler(cfg, n, t, seed), adv, seed=seed, suite=suite,
              probe=probe, record=record, config={**cfg.to_dict(), "n": n, "trial": t})
    return reduce(cfg, res, t, seed), res


def _jsonable(v):
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def reduce(cfg, res, t, seed):
    honest = res.honest
    outs = res.honest_outputs()
    vals = list(outs.values())
    rec = {
        "protocol": cfg.protocol, "n": res.n, "f": res.f, "trial": t, "seed": seed,
        "corrupt": sorted(res.corrupt),
        "terminated": len(outs) == len(honest),
        "agreed": len(outs) == len(honest) and len({repr(v) for v in vals}) <= 1,
        "messages": res.metrics.messages, "bits": res.metrics.bits, "rounds": res.metrics.rounds,
        "output": _jsonable(vals[0]) if vals and len({repr(v) for v in vals}) == 1 else None,
    }
    roots = [res.roots[i] for i in honest]
    if cfg.protocol == "aba":
        rec["aba_rounds"] = max((r.rounds_used or 0) for r in roots)
        rec["coins"] = max(r.coins_used for r in roots)
        inputs = {r.input for r in roots}
        rec["validity"] = rec["output"] is None or len(inputs) > 1 or rec["output"] in inputs
    if cfg.protocol == "election":
        rec["non_default"] = all(r.aba_out == 1 for r in roots)
    if cfg.protocol == "avss":
        shared = {(s.h, s.c) for s in (r.shared for r in roots) if s is not None}
        rec["shared"] = sum(1 for r in roots if r.shared is not None)
        rec["commit_views"] = len(shared)
        rec["sh_rounds"] = res.rounds((("sh", 1),))
    return rec


# ---------------------------------------------------------------- summaries


def summarize(records):
    """One row per (protocol, n); order-independent over trials."""
    groups = {}
    for r in records:
        groups.setdefault((r["protocol"], r["n"]), []).append(r)
    rows = []
    for (proto, n), rs in sorted(groups.items()):
        k = len(rs)
        m = [r["messages"] for r in rs]
        b = [r["bits"] for r in rs]
        rd = [r["rounds"] for r in rs]
        row = {
            "protocol": proto, "n": n, "f": rs[0]["f"], "trials": k,
            "termination": sum(r["terminated"] for r in rs) / k,
            "agreement": sum(r["agreed"] for r in rs) / k,
            "mean_messages": sum(m) / k, "max_messages": max(m),
            "mean_bits": sum(b) / k, "max_bits": max(b),
            "mean_rounds": sum(rd) / k, "max_rounds": max(rd),
        }
        if proto == "coin":
            agreed = [r["output"] for r in rs if r["agreed"]]
            row["common_rate"] = len(agreed) / k
            row["ones_rate"] = (sum(agreed) / len(agreed)) if agreed else None
        if proto == "aba":
            row["mean_aba_rounds"] = sum(r["aba_rounds"] for r in rs) / k
            row["validity"] = sum(r["validity"] for r in rs) / k
        if proto == "election":
            hist = Counter(r["output"] for r in rs if r["agreed"])
            row["index_hist"] = {str(i): hist.get(i, 0) for i in range(1, n + 1)}
            row["non_default_rate"] = sum(r["non_default"] for r in rs) / k
        rows.append(row)
    return rows


def fit_loglog(ns, values):
    """Least-squares slope and intercept of log(value) against log(n)."""
    pts = sorted(set(zip(ns, values)))
    if len({n for n, _ in pts}) < 3:
        raise ParameterError("fit needs at least 3 distinct n values")
    if any(v <= 0 for _, v in pts):
        raise ParameterError("fit needs positive metric values")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    slope, icept = np.polyfit(x, y, 1)
    return float(slope), float(icept)


def fit_rows(rows, metric):
    return fit_loglog([r["n"] for r in rows], [r[metric] for r in rows])


def run_experiment(cfg: ExperimentConfig, probe=None, on_record=None):
    records = []
    for n in cfg.ns:
        for t in range(cfg.trials):
            rec, _ = run_trial(cfg, n, t, probe=probe)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
    return records


def chi_square_uniform(counts):
    from scipy.stats import chisquare

    return float(chisquare(list(counts)).pvalue)


def format_table(rows):
    if not rows:
        return ""
    cols = ["protocol", "n", "f", "trials", "termination", "agreement", "mean_messages", "mean_bits", "mean_rounds"]
    extra = [k for k in rows[0] if k not in cols and not k.startswith("max_")]
    cols += extra

    def cell(v):
        if isinstance(v, float):
            return f"{v:.4g}" if not math.isnan(v) else "nan"
        if isinstance(v, dict):
            return "/".join(str(x) for x in v.values())
        return str(v)

    table = [[cell(r.get(c)) for c in cols] for r in rows]
    w = [max(len(c), *(len(t[i]) for t in table)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w[i]) for i, c in enumerate(cols))]
    lines += ["  ".join(v.ljust(w[i]) for i, v in enumerate(t)) for t in table]
    return "\n".join(lines)


__all__ = ["ExperimentConfig", "run_trial", "run_experiment", "summarize", "fit_rows", "fit_loglog",
           "chi_square_uniform", "format_table", "CoreSetProbe", "top_dealer", "PROTOCOLS"]
