"""End-to-end acceptance gate.

Each test prints one [PASS]/[FAIL] line on the real stdout, then asserts.
Together they pin down the behaviors the package promises: the worked
reduction of (x -> H) ((F -> I) G), censuses, safety of parallel rewriting,
confluence on plain interaction nets, interface preservation, agreement with
brute-force oracles, and print/parse round-tripping.
"""

import itertools
import random
import time
from importlib import resources

from binets.core import interface, iso
from binets.engine import (
    SafeSet,
    StepLimitExceeded,
    Strategy,
    collect,
    prioritise,
    reduce,
    rewrite_pass,
    tidy,
)
from binets.rho import compile_rho, parse_rho, rho_rules
from binets.rules import FreshLabels, match_pattern
from binets.syntax import parse_binet, parse_rules, print_binet

from _gen import RHO_SYMBOLS, matcher_config, parallel_adds, random_net
from _oracle import brute_matches, brute_pairs, match_fingerprint

RHO = rho_rules()

FIRST = parse_binet(
    "sig Abs(1, 1)\nsig App(0, 2)\n"
    "Abs^x(a | b), eps^b(), H^a(), App^x(c, d), "
    "App^y(d, e), Abs^y(f | g | F^g()), I^f(), G^e()"
)
SECOND = parse_binet(
    "sig Abs(1, 1)\nsig App(0, 2)\nsig M(0, 1)\n"
    "M^a(c), H^a(), eps^d(), M^f(d |  | F^e()), I^f(), G^e()"
)
THIRD = parse_binet("H^c(), bot^d(), eps^d(), I^f(), eps^f()")
FINAL = parse_binet("H^c()")

NAT = parse_rules(
    resources.files("binets.corpus").joinpath("nat.rules").read_text("utf-8")
)


def report(capsys, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def contains_in_order(snapshots, stages):
    i = 0
    for stage in stages:
        while i < len(snapshots) and not iso(snapshots[i], stage):
            i += 1
        if i == len(snapshots):
            return False
        i += 1
    return True


def test_c01_golden_trace(capsys):
    started = time.perf_counter()
    net = compile_rho(parse_rho("(x -> H) ((F -> I) G)"))
    trace = reduce(net, RHO, Strategy.deterministic())
    elapsed = time.perf_counter() - started
    ok = (
        contains_in_order(trace.snapshots, (FIRST, SECOND, THIRD, FINAL))
        and iso(trace.normal_form, FINAL)
        and elapsed < 1.0
    )
    report(
        capsys,
        "golden-trace",
        ok,
        f"{len(trace.passes)} passes, {trace.interactions} interactions, "
        f"{elapsed * 1000:.0f} ms",
    )


def test_c02_active_pair_census(capsys):
    second = len(collect(SECOND, RHO).active_pairs)
    first = len(collect(FIRST, RHO).active_pairs)
    report(
        capsys,
        "active-pair-census",
        (first, second) == (2, 3),
        f"first stage {first}, second stage {second}",
    )


def test_c03_inactive_rewrite(capsys):
    cands = collect(SECOND, RHO)
    safe = prioritise(cands, SECOND, RHO, Strategy.deterministic(maximal=False))
    fired = [(m.rule.name, m.rule.kind) for m in safe.members]
    out = tidy(rewrite_pass(SECOND, safe, RHO, FreshLabels()))
    h = next(a for a in out.agents if a.symbol.name == "H")
    ok = (
        fired == [("collapse", "inactive")]
        and safe.members[0].anchor_label is None
        and h.principal == "c"
        and sum(1 for a in out.agents if a.symbol.name == "M") == 1
        and interface(out) == interface(SECOND)
    )
    report(capsys, "inactive-rewrite", ok, "collapse reconnects H to c")


def test_c04_safety_exclusion(capsys):
    cands = collect(SECOND, RHO)
    checked = 0
    clean = True
    for seed in range(20):
        strategies = (
            Strategy.deterministic(),
            Strategy.weighted(),
            Strategy.stochastic(seed),
        )
        for strategy in strategies:
            safe = prioritise(cands, SECOND, RHO, strategy)
            anchors = {m.anchor_label for m in safe.members}
            if "f" in anchors and "e" in anchors:
                clean = False
            checked += 1
    report(
        capsys,
        "safety-exclusion",
        clean,
        f"{checked} safe sets, matcher~I and F~G never admitted together",
    )


def test_c05_strong_confluence(capsys):
    strategies = [
        Strategy.deterministic(),
        Strategy.weighted(),
        *(Strategy.stochastic(seed) for seed in range(20)),
    ]
    names = ("add_2_2.binet", "add_3_2.binet", "add_parallel.binet")
    ok = True
    details = []
    for name in names:
        text = resources.files("binets.corpus").joinpath(name).read_text("utf-8")
        net = parse_binet(text)
        traces = [reduce(net, NAT, s) for s in strategies]
        counts = {t.interactions for t in traces}
        forms = [t.normal_form for t in traces]
        same = len(counts) == 1 and all(iso(forms[0], f) for f in forms[1:])
        ok = ok and same
        details.append(f"{name.split('.')[0]}={counts.pop()}")
    report(capsys, "strong-confluence", ok, ", ".join(details))


def test_c06_interface_preservation(capsys):
    violations = 0
    total = 0
    snapshots_seen = 0
    for seed in range(1000):
        net = random_net(random.Random(seed), symbols=RHO_SYMBOLS)
        want = interface(net)
        try:
            trace = reduce(net, RHO, Strategy.deterministic(), max_passes=50)
        except StepLimitExceeded as exc:
            trace = exc.trace
        total += 1
        for snap in trace.snapshots:
            snapshots_seen += 1
            if interface(snap) != want:
                violations += 1
    report(
        capsys,
        "interface-preservation",
        violations == 0,
        f"{total} nets, {snapshots_seen} snapshots, {violations} violations",
    )


def test_c07_safe_set_serializability(capsys):
    rng = random.Random(42)
    instances = 0
    violations = 0
    attempts = 0
    while instances < 200 and attempts < 4000:
        attempts += 1
        if attempts % 2:
            net = parallel_adds(rng, chains=rng.choice((2, 3)))
            rules = NAT
        else:
            net = random_net(rng, symbols=RHO_SYMBOLS, max_agents=8)
            rules = RHO
        cands = collect(net, rules)
        safe = prioritise(cands, net, rules, Strategy.deterministic())
        if len(safe.members) not in (2, 3):
            continue
        instances += 1
        together = tidy(rewrite_pass(net, safe, rules, FreshLabels()))
        for order in itertools.permutations(safe.members):
            current = net
            fresh = FreshLabels()
            for member in order:
                single = SafeSet((member,), (member.region,))
                current = rewrite_pass(current, single, rules, fresh)
            if not iso(tidy(current), together):
                violations += 1
    report(
        capsys,
        "safe-set-serializability",
        instances >= 200 and violations == 0,
        f"{instances} instances, every application order agreed",
    )


def test_c08_erasure_variant_equivalence(capsys):
    naive_rules = rho_rules(naive_erasure=True)
    cases = 0
    mismatches = 0
    regressions = 0
    for seed in range(120):
        net = matcher_config(random.Random(seed))
        lean = reduce(net, RHO, Strategy.deterministic())
        heavy = reduce(net, naive_rules, Strategy.deterministic())
        cases += 1
        if not iso(lean.normal_form, heavy.normal_form):
            mismatches += 1
        if lean.interactions > heavy.interactions:
            regressions += 1
    report(
        capsys,
        "erasure-variant-equivalence",
        cases >= 100 and mismatches == 0 and regressions == 0,
        f"{cases} configurations, optimized never slower",
    )


def test_c09_oracle_equivalence(capsys):
    nets = [THIRD, FINAL]
    seed = 0
    while len(nets) < 150:
        net = random_net(random.Random(seed), symbols=RHO_SYMBOLS, max_agents=6)
        seed += 1
        if sum(1 for _ in net.walk()) <= 6:
            nets.append(net)
    match_disagreements = 0
    census_disagreements = 0
    for net in nets:
        for rule in RHO.rules:
            got = {match_fingerprint(m) for m in match_pattern(rule, net, RHO)}
            if got != brute_matches(rule, net, RHO):
                match_disagreements += 1
        cands = collect(net, RHO)
        seen = set(cands.active_pairs) | {p.label for p in cands.stuck}
        if seen != set(brute_pairs(net)):
            census_disagreements += 1
    report(
        capsys,
        "oracle-equivalence",
        match_disagreements == 0 and census_disagreements == 0,
        f"{len(nets)} nets x {len(RHO.rules)} rules",
    )


def test_c10_round_trip(capsys):
    failures = 0
    total = 0
    for seed in range(1000):
        net = random_net(random.Random(seed), max_wires=3)
        total += 1
        if not iso(parse_binet(print_binet(net)), net):
            failures += 1
    corpus_files = 0
    for entry in resources.files("binets.corpus").iterdir():
        if not entry.name.endswith(".binet"):
            continue
        net = parse_binet(entry.read_text("utf-8"))
        corpus_files += 1
        total += 1
        if not iso(parse_binet(print_binet(net)), net):
            failures += 1
    report(
        capsys,
        "round-trip",
        failures == 0 and corpus_files >= 3,
        f"{total} nets incl. {corpus_files} corpus files, {failures} failures",
    )
