"""Command-line surface: deterministic runs, bit-file I/O, JSON reports.

Every subcommand is a pure function of its flags; all randomness flows from
--seed.  Reports embed the inputs needed to re-derive every certificate, and
`verify` replays them with zero external state.

Exit codes: 0 success, 1 verification failure, 2 bad parameters,
3 budget exhausted.
"""

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import adversary, avoider, forbidden, proxy, spreader
from .core import (BitString, CertificateError, ExactProb, FiniteDistribution,
                   RandomSource, frac_to_str, read_bit_file, write_bit_file)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_PARAMS = 2
EXIT_BUDGET = 3


def _sha256_bits(bits: BitString) -> str:
    h = hashlib.sha256()
    h.update(len(bits).to_bytes(8, "little"))
    h.update(bits.to_packed_bytes())
    return h.hexdigest()


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _report(command: str, seed, parameters: dict, results: dict,
            certificates: dict, started: float) -> dict:
    return {
        "command": command,
        "seed": seed,
        "parameters": parameters,
        "results": results,
        "certificates": certificates,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


def _emit_report(args, doc) -> None:
    if getattr(args, "report", None):
        _write_json(args.report, doc)


def cmd_spread(args) -> int:
    started = time.perf_counter()
    weights = spreader.weight_preset(args.weights)
    certified = spreader.choose_start_level(weights)
    start_level = args.m0 if args.m0 is not None else certified
    alloc = spreader.plan_allocation(weights, start_level=start_level,
                                     max_level=args.max_level)
    omega, tau = spreader.spread_random(alloc, RandomSource(args.seed), args.length)
    write_bit_file(args.out, omega, fmt=args.format)
    if args.alloc_out:
        _write_json(args.alloc_out, alloc.export())
    doc = _report(
        "spread", args.seed,
        {"weights": args.weights, "start_level": alloc.start_level,
         "certified_start_level": certified, "length": args.length,
         "max_level": args.max_level, "format": args.format},
        {"output_sha256": _sha256_bits(omega), "source_bits_used": len(tau),
         "levels_built": alloc.levels_built()},
        {"density_budget": frac_to_str(alloc.budget_used()),
         "start_level_certificate": frac_to_str(
             spreader.start_level_certificate(weights, alloc.start_level))},
        started)
    _emit_report(args, doc)
    print(f"spread: wrote {args.length} bits to {args.out} "
          f"(start level {alloc.start_level}, {len(tau)} source bits)")
    return EXIT_OK


def cmd_check_windows(args) -> int:
    bits = read_bit_file(args.bits)
    alloc = spreader.Allocation.from_export(_load_json(args.alloc))
    if args.m_max < alloc.start_level:
        print(f"warning: m-max {args.m_max} below start level {alloc.start_level}; "
              "nothing to check")
        return EXIT_OK
    rs = RandomSource(args.seed)
    violations = []
    consensus = {}  # source index -> bit, shared across windows

    frontier = alloc.least_uncovered()
    usable = len(bits) if frontier is None else min(len(bits), frontier)
    mapping = alloc.source_map(0, usable)
    bit_list = bits.to_bits()

    # whole-file pass: every repetition of one source bit must agree
    firsts = {}
    for p in range(usable):
        j = mapping[p]
        b = bit_list[p]
        if j in firsts:
            if bit_list[firsts[j]] != b:
                violations.append({"position": p, "source_bit": j,
                                   "disagrees_with_position": firsts[j]})
        else:
            firsts[j] = p

    for m in range(alloc.start_level, args.m_max + 1):
        size = 1 << m
        if size > usable:
            break
        top_count = alloc.source_count_through(m)
        base_count = top_count - alloc.counts()[m]
        max_start = usable - size
        if max_start + 1 <= args.samples:
            starts = list(range(max_start + 1))
        else:
            starts = sorted(rs.substream(m).below(max_start + 1)
                            for _ in range(args.samples))
        for k in starts:
            tally = {}
            for j in mapping[k:k + size]:
                tally[j] = tally.get(j, 0) + 1
            missing = [j for j in range(top_count) if j not in tally]
            doubled = [j for j in range(base_count, top_count) if tally.get(j, 0) != 1]
            if missing or doubled:
                violations.append({"k": k, "m": m, "missing": missing[:8],
                                   "not_exactly_once": doubled[:8]})
                continue
            try:
                prefix = spreader.recover_prefix(alloc, bits.window(k, size), k % size, m)
            except spreader.InconsistentWindowError as exc:
                violations.append({"k": k, "m": m, "inconsistent": str(exc)})
                continue
            for j, b in enumerate(prefix.bits()):
                if consensus.setdefault(j, b) != b:
                    violations.append({"k": k, "m": m, "disagrees_at_source_bit": j})
                    break
    if violations:
        print(f"check-windows: {len(violations)} violated window(s)")
        for v in violations[:20]:
            print(f"  {v}")
        return EXIT_VERIFY_FAILED
    print(f"check-windows: all windows pass up to level {args.m_max}")
    return EXIT_OK


def cmd_family(args) -> int:
    started = time.perf_counter()
    alpha = Fraction(args.alpha)
    epsilon = ExactProb(Fraction(args.epsilon))
    rs = RandomSource(args.seed)
    if args.schedule:
        entries = forbidden.interval_schedule(
            FiniteDistribution.uniform, alpha, args.schedule, rs,
            first_length=args.n_min, max_length=args.max_length)
        results = []
        for e in entries:
            results.append({"lower": e.lower, "upper": e.upper,
                            "epsilon": frac_to_str(e.epsilon),
                            "certificate": frac_to_str(e.certificate),
                            "family": e.family.to_json()})
        doc = _report("family-schedule", args.seed,
                      {"alpha": frac_to_str(alpha), "count": args.schedule,
                       "first_length": args.n_min, "max_length": args.max_length,
                       "dist_family": "uniform"},
                      {"intervals": results},
                      {f"interval_{i + 1}": r["certificate"] for i, r in enumerate(results)},
                      started)
        _emit_report(args, doc)
        if args.out:
            _write_json(args.out, {"intervals": results})
        print(f"family: {len(entries)} disjoint certified intervals")
        return EXIT_OK
    if args.levels:
        lengths = sorted({int(tok) for tok in args.levels.split(",")})
        levels = []
        for n in lengths:
            size = forbidden.pow2_floor(alpha * n)
            strings = frozenset(
                b.to_numeral()
                for b in forbidden.sample_uniform_set(n, size, rs.substream(n)))
            levels.append(forbidden.SampledLevel(n, strings, (), 1 << n))
        family = forbidden.LevelFamily(alpha, levels)
        if args.out:
            _write_json(args.out, family.to_json())
        doc = _report("family-levels", args.seed,
                      {"alpha": frac_to_str(alpha), "lengths": lengths},
                      {"family": family.to_json()},
                      {f"size_bound_{n}": str(family.size_bound(n)) for n in lengths},
                      started)
        _emit_report(args, doc)
        print(f"family: explicit random levels {lengths}, sizes "
              f"{[family.size_of(n) for n in lengths]}")
        return EXIT_OK
    if args.derandomize:
        dist = FiniteDistribution.from_json(_load_json(args.derandomize))
        family, certificate = forbidden.derandomize_family(
            dist, alpha, epsilon, rs, level_length=args.level_length)
        if args.out:
            _write_json(args.out, family.to_json())
        doc = _report("family-derandomize", args.seed,
                      {"alpha": frac_to_str(alpha), "epsilon": frac_to_str(epsilon),
                       "level_length": args.level_length, "dist": dist.to_json()},
                      {"family": family.to_json()},
                      {"avoid_probability": frac_to_str(certificate)},
                      started)
        _emit_report(args, doc)
        print(f"family: derandomized, avoid probability {frac_to_str(certificate)} "
              f"< {frac_to_str(epsilon)}")
        return EXIT_OK
    family, cert = forbidden.two_level_family(alpha, epsilon, args.n_min, rs)
    if args.out:
        _write_json(args.out, family.to_json())
    doc = _report("family", args.seed,
                  {"alpha": frac_to_str(alpha), "epsilon": frac_to_str(epsilon),
                   "n_min": args.n_min},
                  {"random_length": cert.random_length, "top_length": cert.top_length,
                   "threshold": cert.threshold, "sample_size": cert.sample_size,
                   "family": family.to_json()},
                  {"miss_bound": frac_to_str(cert.miss_bound),
                   "top_cardinality": str(cert.top_cardinality),
                   "top_size_bound": str(cert.top_size_bound)},
                  started)
    _emit_report(args, doc)
    print(f"family: lengths ({cert.random_length}, {cert.top_length}), "
          f"miss bound {frac_to_str(cert.miss_bound)} < {frac_to_str(epsilon)}")
    return EXIT_OK


def cmd_adversary(args) -> int:
    started = time.perf_counter()
    dist = FiniteDistribution.from_json(_load_json(args.dist))
    epsilon = ExactProb(Fraction(args.epsilon))
    family = adversary.truncated_search(dist, args.n, epsilon)
    if args.out:
        _write_json(args.out, family.to_json())
    doc = _report("adversary", None,
                  {"n": args.n, "epsilon": frac_to_str(epsilon), "dist": dist.to_json()},
                  {"N": family.position_count, "family": family.to_json()},
                  {"avoid_probability": frac_to_str(family.certificate),
                   "deficit": frac_to_str(dist.deficit)},
                  started)
    _emit_report(args, doc)
    print(f"adversary: n={args.n} N={family.position_count} "
          f"certificate {frac_to_str(family.certificate)} < {frac_to_str(epsilon)}")
    return EXIT_OK


def cmd_avoid(args) -> int:
    started = time.perf_counter()
    family = forbidden.LevelFamily.from_json(_load_json(args.family))
    inst = avoider.AvoidanceInstance(family, args.length, args.budget,
                                     RandomSource(args.seed))
    result = avoider.build_avoiding_string(inst)
    doc = _report("avoid", args.seed,
                  {"family": family.to_json(), "length": args.length,
                   "budget": args.budget},
                  {"succeeded": result.succeeded, "resamples": result.resamples,
                   "residual_violations": result.residual_violations,
                   "output_sha256": (_sha256_bits(result.string)
                                     if result.succeeded else None)},
                  {"violations": 0 if result.succeeded else result.residual_violations},
                  started)
    _emit_report(args, doc)
    if not result.succeeded:
        print(f"avoid: budget exhausted after {result.resamples} resamples, "
              f"{result.residual_violations} residual violations")
        return EXIT_BUDGET
    if args.out:
        write_bit_file(args.out, result.string, fmt=args.format)
    print(f"avoid: success in {result.resamples} resamples")
    return EXIT_OK


def cmd_profile(args) -> int:
    started = time.perf_counter()
    bits = read_bit_file(args.bits)
    profile = proxy.window_profile(bits, args.window, args.stride)
    doc = _report("profile", None,
                  {"bits_sha256": _sha256_bits(bits), "window": args.window,
                   "stride": args.stride, "bit_count": len(bits),
                   "bits_text": bits.to_text() if len(bits) <= 1 << 16 else None},
                  profile.to_json(),
                  {},
                  started)
    if args.out:
        _write_json(args.out, doc)
    _emit_report(args, doc)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("offset,bits\n")
            for o, s in zip(profile.offsets, profile.sizes):
                fh.write(f"{o},{s}\n")
    print(f"profile: {len(profile.offsets)} windows, min {profile.min_size} bits, "
          f"mean {profile.mean_size:.1f} bits")
    return EXIT_OK


def _verify_spread(doc) -> list:
    problems = []
    p = doc["parameters"]
    weights = spreader.weight_preset(p["weights"])
    cert = spreader.start_level_certificate(weights, p["start_level"])
    if frac_to_str(cert) != doc["certificates"]["start_level_certificate"] or cert > 1:
        problems.append("start level certificate mismatch")
    alloc = spreader.plan_allocation(weights, start_level=p["start_level"],
                                     max_level=p["max_level"])
    omega, tau = spreader.spread_random(alloc, RandomSource(doc["seed"]), p["length"])
    if _sha256_bits(omega) != doc["results"]["output_sha256"]:
        problems.append("output digest mismatch")
    if len(tau) != doc["results"]["source_bits_used"]:
        problems.append("source bit count mismatch")
    if Fraction(doc["certificates"]["density_budget"]) > 1:
        problems.append("density budget above 1")
    return problems


def _verify_family(doc) -> list:
    problems = []
    p = doc["parameters"]
    rs = RandomSource(doc["seed"])
    family, cert = forbidden.two_level_family(Fraction(p["alpha"]),
                                              ExactProb(Fraction(p["epsilon"])),
                                              p["n_min"], rs)
    if family.to_json() != doc["results"]["family"]:
        problems.append("family regeneration mismatch")
    if frac_to_str(cert.miss_bound) != doc["certificates"]["miss_bound"]:
        problems.append("miss bound mismatch")
    if not cert.miss_bound < Fraction(p["epsilon"]):
        problems.append("miss bound does not beat epsilon")
    card = forbidden.count_simple(cert.top_length, cert.random_length, cert.threshold)
    if str(card) != doc["certificates"]["top_cardinality"] or card > cert.top_size_bound:
        problems.append("top level size certificate mismatch")
    return problems


def _verify_family_levels(doc) -> list:
    problems = []
    p = doc["parameters"]
    alpha = Fraction(p["alpha"])
    rs = RandomSource(doc["seed"])
    levels = []
    for n in p["lengths"]:
        size = forbidden.pow2_floor(alpha * n)
        strings = frozenset(
            b.to_numeral()
            for b in forbidden.sample_uniform_set(n, size, rs.substream(n)))
        levels.append(forbidden.SampledLevel(n, strings, (), 1 << n))
    family = forbidden.LevelFamily(alpha, levels)
    if family.to_json() != doc["results"]["family"]:
        problems.append("family regeneration mismatch")
    for n in p["lengths"]:
        if family.size_of(n) > family.size_bound(n):
            problems.append(f"level {n} exceeds its size bound")
    return problems


def _verify_family_derandomize(doc) -> list:
    problems = []
    p = doc["parameters"]
    dist = FiniteDistribution.from_json(p["dist"])
    family = forbidden.LevelFamily.from_json(doc["results"]["family"])
    cert = forbidden.family_avoid_probability(dist, family)
    if frac_to_str(cert) != doc["certificates"]["avoid_probability"]:
        problems.append("avoid probability mismatch")
    if not cert < Fraction(p["epsilon"]):
        problems.append("certificate does not beat epsilon")
    return problems


def _verify_family_schedule(doc) -> list:
    problems = []
    p = doc["parameters"]
    if p["dist_family"] != "uniform":
        return ["unknown distribution family"]
    previous_upper = None
    for i, entry in enumerate(doc["results"]["intervals"], start=1):
        family = forbidden.LevelFamily.from_json(entry["family"])
        dist = FiniteDistribution.uniform(entry["upper"])
        cert = forbidden.family_avoid_probability(dist, family)
        if frac_to_str(cert) != entry["certificate"]:
            problems.append(f"interval {i}: certificate mismatch")
        if not cert < Fraction(entry["epsilon"]):
            problems.append(f"interval {i}: certificate does not beat epsilon")
        if previous_upper is not None and entry["lower"] <= previous_upper:
            problems.append(f"interval {i}: overlaps the previous interval")
        previous_upper = entry["upper"]
    return problems


def _verify_adversary(doc) -> list:
    problems = []
    p = doc["parameters"]
    dist = FiniteDistribution.from_json(p["dist"])
    family = adversary.PositionalFamily.from_json(doc["results"]["family"])
    cert = adversary.avoid_probability(dist, family)
    if frac_to_str(cert) != doc["certificates"]["avoid_probability"]:
        problems.append("avoid probability mismatch")
    if not cert < Fraction(p["epsilon"]):
        problems.append("certificate does not beat epsilon")
    if dist.string_length != family.position_count + family.window_length - 1:
        problems.append("family shape does not match the distribution length")
    return problems


def _verify_avoid(doc) -> list:
    problems = []
    p = doc["parameters"]
    family = forbidden.LevelFamily.from_json(p["family"])
    inst = avoider.AvoidanceInstance(family, p["length"], p["budget"],
                                     RandomSource(doc["seed"]))
    result = avoider.build_avoiding_string(inst)
    if result.succeeded != doc["results"]["succeeded"]:
        problems.append("outcome mismatch")
    if result.succeeded:
        if _sha256_bits(result.string) != doc["results"]["output_sha256"]:
            problems.append("output digest mismatch")
        if avoider.scan_violations(result.string, family):
            problems.append("rebuilt string has violations")
    return problems


def _verify_profile(doc) -> list:
    p = doc["parameters"]
    if p.get("bits_text") is None:
        return ["profile report lacks inline bits"]
    bits = BitString.from_text(p["bits_text"])
    profile = proxy.window_profile(bits, p["window"], p["stride"])
    if profile.to_json() != {k: doc["results"][k] for k in profile.to_json()}:
        return ["profile values mismatch"]
    return []


_VERIFIERS = {
    "spread": _verify_spread,
    "family": _verify_family,
    "family-levels": _verify_family_levels,
    "family-derandomize": _verify_family_derandomize,
    "family-schedule": _verify_family_schedule,
    "adversary": _verify_adversary,
    "avoid": _verify_avoid,
    "profile": _verify_profile,
}


def cmd_verify(args) -> int:
    doc = _load_json(args.report)
    verifier = _VERIFIERS.get(doc.get("command"))
    if verifier is None:
        print(f"verify: no verifier for command {doc.get('command')!r}")
        return EXIT_BAD_PARAMS
    problems = verifier(doc)
    if problems:
        for issue in problems:
            print(f"verify: FAIL {issue}")
        return EXIT_VERIFY_FAILED
    print(f"verify: OK ({doc['command']})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecseq",
        description="Spread-sequence generator, forbidden-family constructions, "
                    "and exact-probability certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spread", help="generate a spread bit sequence")
    p.add_argument("--weights", default="inverse-triangular")
    p.add_argument("--m0", type=int, default=None,
                   help="override the certified start level")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-level", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--alloc-out", default=None)
    p.add_argument("--format", choices=["ascii", "packed"], default="packed")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("check-windows", help="verify window coverage and recovery")
    p.add_argument("--bits", required=True)
    p.add_argument("--alloc", required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_windows)

    p = sub.add_parser("family", help="build a certified forbidden family")
    p.add_argument("--alpha", required=True, help="rational like 3/5")
    p.add_argument("--epsilon", default="1/2", help="rational like 1/4")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--levels", default=None,
                   help="comma-separated lengths: emit explicit random level sets")
    p.add_argument("--derandomize", default=None,
                   help="distribution JSON to derandomize against")
    p.add_argument("--level-length", type=int, default=None)
    p.add_argument("--schedule", type=int, default=None,
                   help="build this many disjoint certified intervals")
    p.add_argument("--max-length", type=int, default=24)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("adversary", help="positional forbidden strings by search")
    p.add_argument("--dist", required=True, help="distribution JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("avoid", help="build a string avoiding a family")
    p.add_argument("--family", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1000000)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["ascii", "packed"], default="packed")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_avoid)

    p = sub.add_parser("profile", help="compression proxy profile of a bit file")
    p.add_argument("--bits", required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("verify", help="re-derive every certificate in a report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, CertificateError, forbidden.PoolTooSmallError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"ecseq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS


if __name__ == "__main__":
    sys.exit(main())
