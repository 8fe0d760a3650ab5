"""Named presets, one per acceptance criterion.

Every preset returns a ``PresetResult`` holding pass/fail checks with the
measured value and the bound it was held to.  ``scale`` shrinks trial counts
for quick runs; the acceptance suite always uses ``scale=1``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .. import kernels
from ..avss import DEALER_STRATEGIES, AvssPipeline, AvssRec
from ..coin import SEEDING, CoreSetProbe
from ..crypto_core import KeyRing, get_suite
from ..pvss_agg import Pvss
from ..seeding import seed_bytes
from ..simnet import Fifo, RandomOrder, Transcript, diff_transcripts, run
from .experiments import PROTOCOLS, ExperimentConfig, chi_square_uniform, fit_rows, run_trial, summarize


@dataclass
class Check:
    name: str
    ok: bool
    value: object
    bound: str

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.value} (need {self.bound})"


@dataclass
class PresetResult:
    name: str
    title: str
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def add(self, name, ok, value, bound):
        self.checks.append(Check(name, bool(ok), value, bound))


def _n(k, scale):
    return max(1, int(round(k * scale)))


def _trials(cfg, n=None, probe=None):
    recs, results = [], []
    for n_ in cfg.ns if n is None else [n]:
        for t in range(cfg.trials):
            rec, res = run_trial(cfg, n_, t, probe=probe)
            recs.append(rec)
            results.append(res)
    return recs, results


# ---------------------------------------------------------------- 1: AVSS properties


def avss_violations(rec, res, honest_dealer):
    """Totality, Commitment and Correctness checks for one pipeline run."""
    bad = []
    honest = len(res.honest)
    if rec["shared"] not in (0, honest):
        bad.append("totality")
    if rec["commit_views"] > 1:
        bad.append("commitment: different (h, c)")
    if rec["shared"] == honest and not (rec["terminated"] and rec["agreed"]):
        bad.append("commitment: reconstruction")
    if honest_dealer:
        if not rec["terminated"]:
            bad.append("correctness: termination")
        elif rec["output"] != (b"secret-%d" % rec["seed"]).hex():
            bad.append("correctness: value")
    return bad


def secrecy_views(runs=5, n=4, f=1):
    """Share pairs and commitments seen by one corrupted party in honest runs."""
    fac = lambda seed: (lambda node: AvssPipeline(node, (), 1, b"secret", reconstruct=False))
    views = []
    for s in range(runs):
        res = run(n, f, fac(s), RandomOrder(s), seed=s)
        out = res.roots[n].shared
        views.append((out.cmt, [n], [out.sh_a], [out.sh_b]))
    return views


def preset_avss_properties(scale=1.0):
    pr = PresetResult("c1", "AVSS property suite")
    trials = _n(1000, scale)
    settings = [("honest dealer", "random:others", True)]
    settings += [(f"dealer {s}", f"bad-dealer:{s}", False) for s in DEALER_STRATEGIES]
    for label, adv, honest_dealer in settings:
        cfg = ExperimentConfig("avss", [4], adversary=adv, trials=trials, seed=1)
        viol = 0
        for t in range(trials):
            rec, res = run_trial(cfg, 4, t)
            viol += bool(avss_violations(rec, res, honest_dealer))
        pr.add(f"{label}: violations over {trials} schedules", viol == 0, viol, "0")
    suite = get_suite("mock")
    g = suite.group
    flat = True
    for cmt, xs, sa, sb in secrecy_views(_n(5, scale)):
        counts = kernels.pedersen_completions(suite.q, g.g1, g.g2, cmt, xs, sa, sb)
        flat &= counts.min() == counts.max() > 0
    pr.add("secrecy: every candidate key equally consistent with f shares", flat, flat, "True")
    return pr


# ---------------------------------------------------------------- 2: AVSS rounds


def avss_rounds(n, f, scheduler_for, seed=0):
    """(Sh rounds, Rec rounds) with Rec measured in a run where every party
    starts reconstruction at once from its Sh output."""
    fac = lambda node: AvssPipeline(node, (), 1, b"secret", reconstruct=False)
    sh = run(n, f, fac, scheduler_for(seed), seed=seed)
    outs = {i: sh.roots[i].shared for i in sh.honest}
    rec_path = (("rec", 1),)
    rec = run(n, f, lambda node: AvssRec(node, rec_path, outs[node.me]), scheduler_for(seed), seed=seed)
    assert set(rec.outputs.values()) == {b"secret"}
    return sh.rounds((("sh", 1),)), rec.rounds(rec_path)


def preset_avss_rounds(scale=1.0):
    pr = PresetResult("c2", "AVSS virtual rounds")
    for n in (4, 7):
        f = (n - 1) // 3
        sh, rc = avss_rounds(n, f, lambda s: Fifo())
        pr.add(f"n={n} Sh rounds, fifo", sh == 5, sh, "== 5")
        pr.add(f"n={n} Rec rounds, fifo", rc == 2, rc, "== 2")
    worst_sh = worst_rec = 0
    for s in range(_n(200, scale)):
        sh, rc = avss_rounds(4, 1, RandomOrder, seed=s)
        worst_sh, worst_rec = max(worst_sh, sh), max(worst_rec, rc)
    pr.add("max Sh rounds, random schedules", worst_sh <= 5, worst_sh, "<= 5")
    pr.add("max Rec rounds, random schedules", worst_rec <= 2, worst_rec, "<= 2")
    return pr


# ---------------------------------------------------------------- 3: AVSS complexity


def preset_avss_complexity(scale=1.0):
    pr = PresetResult("c3", "AVSS bit complexity")
    cfg = ExperimentConfig("avss", [4, 7, 10, 13], trials=_n(5, scale), seed=3)
    pr.records, _ = _trials(cfg)
    pr.rows = summarize(pr.records)
    slope, _ = fit_rows(pr.rows, "mean_bits")
    pr.add("log-log slope of honest bits", 1.6 <= slope <= 2.3, round(slope, 3), "in [1.6, 2.3]")
    return pr


# ---------------------------------------------------------------- 4: seeding


def seeding_violations(rec, res, honest_leader):
    bad = []
    outs = res.honest_outputs()
    honest = res.honest
    if outs and len(outs) != len(honest):
        bad.append("totality")
    if honest_leader and len(outs) != len(honest):
        bad.append("correctness")
    if len(set(outs.values())) > 1:
        bad.append("commitment: different seeds")
    suite = res.roots[honest[0]].node.suite
    for r in (res.roots[i] for i in honest):
        if not r.revealing:
            continue
        # the committed secret, found by exhausting the mock field
        fixed = [s for s in range(suite.q) if r.pv.verify_secret(s, r.pvss)]
        if len(fixed) != 1 or any(o != seed_bytes(suite, fixed[0]) for o in outs.values()):
            bad.append("commitment: seed not fixed by the locked script")
            break
    return bad


def preset_seeding(scale=1.0):
    pr = PresetResult("c4", "Seeding suite")
    trials = _n(1000, scale)
    for label, adv, honest_leader in (("honest leader", "random:others", True),
                                      ("equivocating leader", "equivocate:1", False),
                                      ("mutating leader", "mutate:1", False)):
        cfg = ExperimentConfig("seeding", [4], adversary=adv, trials=trials, seed=4)
        viol = 0
        for t in range(trials):
            rec, res = run_trial(cfg, 4, t)
            viol += bool(seeding_violations(rec, res, honest_leader))
        pr.add(f"{label}: violations over {trials} schedules", viol == 0, viol, "0")
    cfg = ExperimentConfig("seeding", [4, 7, 10, 13], trials=_n(3, scale), seed=4)
    pr.records, _ = _trials(cfg)
    pr.rows = summarize(pr.records)
    slope, _ = fit_rows(pr.rows, "mean_messages")
    pr.add("log-log slope of honest messages", 1.6 <= slope <= 2.3, round(slope, 3), "in [1.6, 2.3]")
    return pr


# ---------------------------------------------------------------- 5: PVSS


def pvss_pipeline_failures(rng, n=4, f=1):
    """One randomized deal/aggregate/decrypt pipeline; returns failed bullets."""
    suite = get_suite("mock")
    keys = KeyRing.generate(n, suite, seed=rng.randrange(1 << 30))
    pv = Pvss(keys, n, f)
    q = suite.q
    ctx = b"ctx-%d" % rng.randrange(1 << 20)
    dealers = sorted(rng.sample(range(1, n + 1), rng.randint(1, n)))
    secrets = {i: rng.randrange(q) for i in dealers}
    scripts = {i: pv.deal(i, secrets[i], rng, ctx) for i in dealers}
    bad = []
    for i, sc in scripts.items():
        if not pv.verify(sc):
            bad.append("honest script verifies")
        if pv.weights(sc) != tuple(1 if k == i else 0 for k in range(1, n + 1)):
            bad.append("fresh weights are a unit vector")
    agg = scripts[dealers[0]]
    for i in dealers[1:]:
        w = [a + b for a, b in zip(pv.weights(agg), pv.weights(scripts[i]))]
        agg = pv.aggregate(agg, scripts[i])
        if list(pv.weights(agg)) != w:
            bad.append("weights add under aggregation")
    if not pv.verify(agg):
        bad.append("aggregate verifies")
    shares = {j: pv.get_share(j, keys.dk(j), agg) for j in range(1, n + 1)}
    if not all(pv.verify_share(j, s, agg) for j, s in shares.items()):
        bad.append("decrypted shares verify")
    quorum = rng.sample(range(1, n + 1), pv.t)
    s = pv.agg_shares([shares[j] for j in quorum], agg)
    if s != sum(secrets.values()) % q:
        bad.append("t shares reconstruct the secret")
    if not pv.verify_secret(s, agg):
        bad.append("reconstructed secret verifies")
    return bad


def preset_pvss(scale=1.0):
    pr = PresetResult("c5", "PVSS oracle suite")
    rng = random.Random(5)
    fails = []
    runs = _n(500, scale)
    for _ in range(runs):
        n = rng.choice((4, 5, 7))
        fails += pvss_pipeline_failures(rng, n, (n - 1) // 3)
    pr.add(f"failed bullets over {runs} pipelines", not fails, len(fails), "0")
    return pr


# ---------------------------------------------------------------- 6: coin fairness


def preset_coin_fairness(scale=1.0):
    pr = PresetResult("c6", "Coin fairness")
    probe = CoreSetProbe()
    cfg = ExperimentConfig("coin", [4], coin=SEEDING, trials=_n(2000, scale), seed=6)
    recs, _ = _trials(cfg, probe=probe)
    row = summarize(recs)[0]
    pr.records = recs
    pr.rows = [row]
    pr.add("all-honest common-output rate", row["common_rate"] >= 0.60, round(row["common_rate"], 4), ">= 0.60")
    pr.add("core-set violations", not probe.violations and probe.checks > 0,
           f"{len(probe.violations)} in {probe.checks} checks", "0")
    ones = row["ones_rate"]
    pr.add("output bias on agreeing runs", ones is not None and abs(ones - 0.5) <= 0.03,
           None if ones is None else round(ones, 4), "0.5 +/- 0.03")
    cfg = ExperimentConfig("coin", [4], scheduler="starve", trials=_n(500, scale), seed=6)
    srow = summarize(_trials(cfg)[0])[0]
    pr.rows.append(srow)
    pr.add("starving-adversary common-output rate", srow["common_rate"] >= 1 / 3 - 0.05,
           round(srow["common_rate"], 4), ">= 0.2833")
    return pr


# ---------------------------------------------------------------- 7: coin complexity


def preset_coin_complexity(scale=1.0):
    pr = PresetResult("c7", "Coin bit complexity")
    cfg = ExperimentConfig("coin", [4, 7, 10, 13], coin=SEEDING, trials=_n(3, scale), seed=7)
    pr.records, _ = _trials(cfg)
    pr.rows = summarize(pr.records)
    slope, _ = fit_rows(pr.rows, "mean_bits")
    pr.add("log-log slope of honest bits", 2.5 <= slope <= 3.3, round(slope, 3), "in [2.5, 3.3]")
    return pr


# ---------------------------------------------------------------- 8: ABA


def aba_violations(rec):
    bad = []
    if not rec["terminated"]:
        bad.append("termination")
    if not rec["agreed"]:
        bad.append("agreement")
    if not rec["validity"]:
        bad.append("validity")
    return bad


def preset_aba(scale=1.0):
    pr = PresetResult("c8", "ABA suite")
    trials = _n(1000, scale)
    cfg = ExperimentConfig("aba", [4], adversary="mixed", scheduler="random", trials=trials, seed=8)
    recs, _ = _trials(cfg)
    viol = sum(bool(aba_violations(r)) for r in recs)
    pr.add(f"violations over {trials} mixed-input adversarial schedules", viol == 0, viol, "0")
    real = summarize(recs)[0]["mean_aba_rounds"]
    pr.add("mean rounds, real coin", real <= 9, round(real, 3), "<= 9")
    cfg = ExperimentConfig("aba", [4], coin="perfect", adversary="mixed", trials=trials, seed=8)
    precs, _ = _trials(cfg)
    viol = sum(bool(aba_violations(r)) for r in precs)
    pr.add(f"violations with a perfect coin over {trials} schedules", viol == 0, viol, "0")
    perfect = summarize(precs)[0]["mean_aba_rounds"]
    pr.add("mean rounds, perfect coin", perfect <= 4, round(perfect, 3), "<= 4")
    pr.records = recs + precs
    pr.rows = summarize(recs) + summarize(precs)
    return pr


# ---------------------------------------------------------------- 9: election


def preset_election(scale=1.0):
    pr = PresetResult("c9", "Election suite")
    trials = _n(2000, scale)
    half = trials // 2
    viol = 0
    for adv, k in (("vote-forger", half), ("mixed", trials - half)):
        cfg = ExperimentConfig("election", [4], adversary=adv, trials=k, seed=9)
        for t in range(k):
            rec, res = run_trial(cfg, 4, t)
            viol += not (rec["terminated"] and rec["agreed"])
    pr.add(f"agreement violations over {trials} trials with Byzantine voters", viol == 0, viol, "0")
    cfg = ExperimentConfig("election", [4], scheduler="starve", trials=_n(1000, scale), seed=9)
    srow = summarize(_trials(cfg)[0])[0]
    pr.add("non-default rate, starving adversary", srow["non_default_rate"] >= 1 / 3 - 0.05,
           round(srow["non_default_rate"], 4), ">= 0.2833")
    cfg = ExperimentConfig("election", [4], trials=_n(5000, scale), seed=9)
    recs, _ = _trials(cfg)
    row = summarize(recs)[0]
    p = chi_square_uniform(row["index_hist"].values())
    pr.add("all-honest index uniformity (chi-square p)", p > 0.001, round(p, 4), "> 0.001")
    pr.rows = [srow, row]
    return pr


# ---------------------------------------------------------------- 10: determinism


def replay(transcript: Transcript):
    """Re-execute the run named in the transcript header and diff the result."""
    cfg = dict(transcript.config)
    n, t = cfg.pop("n"), cfg.pop("trial")
    _, res = run_trial(ExperimentConfig(**cfg), n, t, record=True)
    return res, diff_transcripts(transcript, res.transcript)


def preset_determinism(scale=1.0):
    pr = PresetResult("c10", "Determinism")
    same = empty = caught = 0
    cases = [ExperimentConfig(p, [4], trials=1, seed=10, adversary="random") for p in PROTOCOLS]
    cases.append(ExperimentConfig("coin", [4], coin=SEEDING, seed=10))
    for cfg in cases:
        a = run_trial(cfg, 4, 0, record=True)[1].transcript.to_bytes()
        b = run_trial(cfg, 4, 0, record=True)[1].transcript.to_bytes()
        same += a == b
        _, diff = replay(Transcript.from_bytes(a))
        empty += diff == []
        flipped = bytearray(a)
        flipped[-1] ^= 1
        try:
            _, diff = replay(Transcript.from_bytes(bytes(flipped)))
            caught += diff != []
        except Exception:
            caught += 1
    k = len(cases)
    pr.add("byte-identical transcripts from (seed, config)", same == k, f"{same}/{k}", f"{k}/{k}")
    pr.add("empty divergence on replay", empty == k, f"{empty}/{k}", f"{k}/{k}")
    pr.add("flipped payload byte detected", caught == k, f"{caught}/{k}", f"{k}/{k}")
    return pr


PRESETS = {
    "c1": preset_avss_properties,
    "c2": preset_avss_rounds,
    "c3": preset_avss_complexity,
    "c4": preset_seeding,
    "c5": preset_pvss,
    "c6": preset_coin_fairness,
    "c7": preset_coin_complexity,
    "c8": preset_aba,
    "c9": preset_election,
    "c10": preset_determinism,
}
