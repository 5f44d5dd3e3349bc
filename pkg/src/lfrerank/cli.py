"""Command-line entry point wiring the full pipeline.

Subcommands: normalize, process, gen-pairs, train, rerank, evaluate, oracle,
and demo (which runs the whole synthetic-corpus experiment in one call).
Exit codes: 0 success, 1 usage error, 2 data or protocol error. Diagnostics
go to stderr; data goes to files or stdout. A JSON config file may supply any
flag; explicit command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluate as ev
from . import pairgen, rerank, synth
from .data import (
    MissingBeamError,
    MissingResultError,
    formalism_by_id,
    load_beams,
    load_dataset,
    save_beams,
    save_dataset,
)
from .lf import FORMALISMS, LfSyntaxError, normal_text, parse, serialize
from .preprocess import (
    EXCLUDED_TEXT,
    EntityLexicon,
    MissingResourceError,
    TemplateGrammar,
    METHODS,
    process,
)
from .scorer import (
    BaselineConfig,
    BaselineScorer,
    ConstantScorer,
    DegenerateCorpusError,
    RemoteProtocolError,
    RemoteScorer,
    RemoteUnavailableError,
    evaluate_pairs,
    train_baseline,
)

_CHOICES = {
    "formalism": FORMALISMS,
    "method": METHODS,
    "rule": rerank.RULES,
}

DEFAULTS: dict[str, dict] = {
    "normalize": {"input": None, "formalism": None, "out": None},
    "process": {
        "beams": None,
        "formalism": None,
        "method": "raw",
        "lexicon": None,
        "grammar": None,
        "out": None,
    },
    "gen-pairs": {
        "dataset": None,
        "beams": None,
        "method": "raw",
        "lexicon": None,
        "grammar": None,
        "no_gold_beam_pairs": False,
        "out": None,
    },
    "train": {
        "pairs": None,
        "out": None,
        "epochs": 150,
        "learning_rate": 1.0,
        "batch_size": 256,
        "l2": 0.0,
        "seed": 0,
        "rare_df_max": 2,
        "holdout": 0.2,
    },
    "rerank": {
        "dataset": None,
        "beams": None,
        "method": "raw",
        "rule": "always",
        "score_floor": 0.5,
        "margin": 0.001,
        "beam_size": None,
        "scorer": None,
        "lexicon": None,
        "grammar": None,
        "jobs": 1,
        "out": None,
    },
    "evaluate": {
        "dataset": None,
        "beams": None,
        "results": None,
        "ks": "1,10,25",
        "domains": None,
        "out": None,
    },
    "oracle": {"dataset": None, "beams": None, "ks": "1,10,25", "out": None},
    "demo": {
        "out_dir": "demo_out",
        "seed": 13,
        "examples": 200,
        "beam_size": 10,
        "epochs": 60,
        "jobs": 1,
    },
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="lfrerank", description=__doc__, argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file supplying any flag; command line wins")
        return p

    p = add("normalize", "canonicalize logical forms, one per line")
    p.add_argument("--input", help="text file with one logical form per line")
    p.add_argument("--formalism", choices=FORMALISMS)
    p.add_argument("--out", help="output file (default stdout)")

    p = add("process", "convert beam candidates to text")
    p.add_argument("--beams", help="beam JSONL file")
    p.add_argument("--formalism", choices=FORMALISMS)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--lexicon", help="entity lexicon TSV")
    p.add_argument("--grammar", help="template grammar file")
    p.add_argument("--out", help="output JSONL (default stdout)")

    p = add("gen-pairs", "generate labeled training pairs for the critic")
    p.add_argument("--dataset", help="dataset JSONL file")
    p.add_argument("--beams", help="beam JSONL file")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--lexicon")
    p.add_argument("--grammar")
    p.add_argument(
        "--no-gold-beam-pairs",
        action="store_true",
        help="keep gold candidates out of candidate-candidate negatives",
    )
    p.add_argument("--out", help="pairs JSONL output")

    p = add("train", "train the baseline scorer on a pair corpus")
    p.add_argument("--pairs", help="pairs JSONL file")
    p.add_argument("--out", help="model file output")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--rare-df-max", type=int)
    p.add_argument("--holdout", type=float, help="held-out fraction for reporting (0 disables)")

    p = add("rerank", "rerank beams with a scorer and gating rule")
    p.add_argument("--dataset")
    p.add_argument("--beams")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--rule", choices=rerank.RULES)
    p.add_argument("--score-floor", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--beam-size", type=int)
    p.add_argument(
        "--scorer",
        help="oracle | baseline:<model-path> | remote:<url> | constant:<value>",
    )
    p.add_argument("--lexicon")
    p.add_argument("--grammar")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="results JSONL output")

    p = add("evaluate", "score results against gold and report")
    p.add_argument("--dataset")
    p.add_argument("--beams")
    p.add_argument("--results", help="results JSONL from rerank")
    p.add_argument("--ks", help="comma-separated oracle cutoffs")
    p.add_argument("--domains", help="comma-separated domain order for the report")
    p.add_argument("--out", help="report JSON output")

    p = add("oracle", "oracle accuracy at the given cutoffs")
    p.add_argument("--dataset")
    p.add_argument("--beams")
    p.add_argument("--ks")
    p.add_argument("--out")

    p = add("demo", "generate a synthetic corpus and run the full experiment")
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--examples", type=int)
    p.add_argument("--beam-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--jobs", type=int)

    return parser


def _merge_options(ns: argparse.Namespace) -> dict:
    cmd = ns.cmd
    explicit = {k: v for k, v in vars(ns).items() if k != "cmd"}
    config_path = explicit.pop("config", None)
    merged = dict(DEFAULTS[cmd])
    if config_path:
        with open(config_path, encoding="utf-8") as f:
            cfg = json.load(f)
        if not isinstance(cfg, dict):
            raise ValueError(f"{config_path}: config must be a JSON object")
        for key, value in cfg.items():
            dest = key.replace("-", "_").lstrip("_")
            if dest not in merged:
                raise _UsageError(f"unknown config key {key!r} for {cmd}")
            merged[dest] = value
    merged.update(explicit)
    for key, allowed in _CHOICES.items():
        if merged.get(key) is not None and key in merged and merged[key] not in allowed:
            raise _UsageError(f"invalid {key} {merged[key]!r}; choose from {', '.join(allowed)}")
    return merged


def _require(opts: dict, *keys: str) -> None:
    for key in keys:
        if opts.get(key) is None:
            raise _UsageError(f"--{key.replace('_', '-')} is required")


def _load_resources(opts):
    lexicon = EntityLexicon.from_tsv(opts["lexicon"]) if opts.get("lexicon") else None
    grammar = TemplateGrammar.from_file(opts["grammar"]) if opts.get("grammar") else None
    if opts.get("method") == "entity_names" and lexicon is None:
        lexicon = EntityLexicon.empty()
    return lexicon, grammar


def _parse_ks(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(k) for k in value]
    try:
        return [int(k) for k in str(value).split(",") if k.strip()]
    except ValueError as e:
        raise _UsageError(f"bad --ks value {value!r}: {e}") from e


def _open_out(opts):
    if opts.get("out"):
        return open(opts["out"], "w", encoding="utf-8")
    return sys.stdout


def _make_scorer(spec: str, method: str, lexicon, grammar):
    if spec == "oracle":
        return rerank.oracle_scorer_factory(method, lexicon, grammar)
    if spec.startswith("baseline:"):
        return BaselineScorer.load(spec[len("baseline:"):])
    if spec.startswith("remote:"):
        return RemoteScorer(spec[len("remote:"):])
    if spec.startswith("constant:"):
        try:
            return ConstantScorer(float(spec[len("constant:"):]))
        except ValueError as e:
            raise _UsageError(f"bad constant scorer spec {spec!r}: {e}") from e
    raise _UsageError(
        f"unknown scorer spec {spec!r}; expected oracle, baseline:<path>, "
        "remote:<url>, or constant:<value>"
    )


def _cmd_normalize(opts) -> int:
    _require(opts, "input", "formalism")
    out = _open_out(opts)
    with open(opts["input"], encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.write(normal_text(parse(line, opts["formalism"])) + "\n")
            except (LfSyntaxError, ValueError) as e:
                raise ValueError(f"{opts['input']}:{lineno}: {e}") from e
    if out is not sys.stdout:
        out.close()
    return 0


def _cmd_process(opts) -> int:
    _require(opts, "beams", "formalism")
    lexicon, grammar = _load_resources(opts)
    beams = load_beams(opts["beams"], opts["formalism"])
    out = _open_out(opts)
    for example_id, beam in beams.items():
        for item in process(beam, opts["method"], lexicon, grammar):
            row = {
                "candidate_id": f"{example_id}:{item.candidate.generator_rank}",
                "method": item.method,
                "text": EXCLUDED_TEXT if item.excluded else item.text,
            }
            out.write(json.dumps(row, ensure_ascii=False) + "\n")
    if out is not sys.stdout:
        out.close()
    return 0


def _cmd_gen_pairs(opts) -> int:
    _require(opts, "dataset", "beams", "out")
    lexicon, grammar = _load_resources(opts)
    dataset = load_dataset(opts["dataset"])
    beams = load_beams(opts["beams"], formalism_by_id(dataset))
    pairs = pairgen.generate_dataset(
        dataset,
        beams,
        opts["method"],
        lexicon,
        grammar,
        pair_gold_in_beam=not opts["no_gold_beam_pairs"],
    )
    pairgen.save_pairs(pairs, opts["out"])
    print(f"wrote {len(pairs)} pairs to {opts['out']}", file=sys.stderr)
    return 0


def _cmd_train(opts) -> int:
    _require(opts, "pairs", "out")
    corpus = pairgen.load_pairs(opts["pairs"])
    config = BaselineConfig(
        epochs=opts["epochs"],
        learning_rate=opts["learning_rate"],
        batch_size=opts["batch_size"],
        l2=opts["l2"],
        seed=opts["seed"],
        rare_df_max=opts["rare_df_max"],
    )
    holdout = opts["holdout"]
    if holdout and holdout > 0:
        train_set, held = synth.split_pairs(corpus, holdout, seed=config.seed)
    else:
        train_set, held = corpus, []
    model = train_baseline(train_set, config)
    model.save(opts["out"])
    print(f"trained on {len(train_set)} pairs; model saved to {opts['out']}", file=sys.stderr)
    if held:
        acc = evaluate_pairs(model, held)
        print(f"held-out pair accuracy: {acc:.4f} ({len(held)} pairs)", file=sys.stderr)
    return 0


def _cmd_rerank(opts) -> int:
    _require(opts, "dataset", "beams", "scorer", "out")
    lexicon, grammar = _load_resources(opts)
    dataset = load_dataset(opts["dataset"])
    beams = load_beams(opts["beams"], formalism_by_id(dataset))
    policy = rerank.RerankPolicy(
        method=opts["method"],
        rule=opts["rule"],
        score_floor=opts["score_floor"],
        margin=opts["margin"],
    )
    scorer = _make_scorer(opts["scorer"], opts["method"], lexicon, grammar)
    results = rerank.rerank_dataset(
        dataset,
        beams,
        policy,
        scorer,
        lexicon,
        grammar,
        jobs=opts["jobs"],
        beam_size=opts["beam_size"],
    )
    rerank.save_results(results, opts["out"])
    n_reranked = sum(1 for r in results if r.reranked)
    print(
        f"reranked {n_reranked}/{len(results)} examples "
        f"(rule {policy.rule}); results in {opts['out']}",
        file=sys.stderr,
    )
    return 0


def _cmd_evaluate(opts) -> int:
    _require(opts, "dataset", "beams", "results")
    dataset = load_dataset(opts["dataset"])
    beams = load_beams(opts["beams"], formalism_by_id(dataset))
    chosen = rerank.load_chosen(opts["results"], formalism_by_id(dataset))
    ks = _parse_ks(opts["ks"])
    domains = None
    if opts.get("domains"):
        value = opts["domains"]
        domains = list(value) if isinstance(value, (list, tuple)) else value.split(",")
    rep = ev.report(dataset, beams, chosen, ks, domains)
    print(rep.format_table())
    if opts.get("out"):
        ev.save_report(rep, opts["out"])
    return 0


def _cmd_oracle(opts) -> int:
    _require(opts, "dataset", "beams")
    dataset = load_dataset(opts["dataset"])
    beams = load_beams(opts["beams"], formalism_by_id(dataset))
    values = {k: ev.oracle_at_k(beams, dataset, k) for k in _parse_ks(opts["ks"])}
    for k, v in values.items():
        print(f"oracle@{k}: {v:.4f}")
    if opts.get("out"):
        with open(opts["out"], "w", encoding="utf-8") as f:
            json.dump({str(k): v for k, v in values.items()}, f)
            f.write("\n")
    return 0


def _domain_accuracy(dataset, chosen) -> dict[str, float]:
    rep = ev.report(dataset, {ex.id: [] for ex in dataset}, chosen, ks=())
    return rep.per_domain


def _format_matrix(domains, rows) -> str:
    label_w = max(len(label) for label, _, _, _ in rows) + 2
    headers = [d[:4].capitalize() + "." for d in domains] + ["Avg.", "Micro"]
    out = ["Method".ljust(label_w) + "  ".join(h.rjust(6) for h in headers)]
    for label, per_domain, avg, micro in rows:
        cells = [per_domain.get(d) for d in domains] + [avg, micro]
        rendered = ["   -  " if c is None else f"{100 * c:.1f}".rjust(6) for c in cells]
        out.append(label.ljust(label_w) + "  ".join(rendered))
    return "\n".join(out)


def _cmd_demo(opts) -> int:
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = opts["seed"]
    log = lambda msg: print(msg, file=sys.stderr)

    dataset, beams = synth.make_corpus(
        n_examples=opts["examples"], beam_size=opts["beam_size"], seed=seed
    )
    save_dataset(dataset, out_dir / "dataset.jsonl")
    save_beams(beams, out_dir / "beams.jsonl", order=[ex.id for ex in dataset])
    log(f"synthetic corpus: {len(dataset)} examples, beam size {opts['beam_size']}")

    pairs = pairgen.generate_dataset(dataset, beams, "raw")
    pairgen.save_pairs(pairs, out_dir / "pairs.jsonl")
    log(f"training pairs: {len(pairs)}")

    config = BaselineConfig(epochs=opts["epochs"], seed=seed)
    train_set, held = synth.split_pairs(pairs, 0.2, seed=seed)
    model = train_baseline(train_set, config)
    model.save(out_dir / "model.json")
    log(f"baseline scorer held-out pair accuracy: {evaluate_pairs(model, held):.4f}")

    domains = [d for d in synth.OVERNIGHT_DOMAINS if any(ex.domain == d for ex in dataset)]
    rows = []
    report_rows = {}

    top1_chosen = {ex.id: beams[ex.id][0].lf for ex in dataset}
    top1_by_domain = _domain_accuracy(dataset, top1_chosen)
    rows.append(
        (
            "generator top-1",
            top1_by_domain,
            sum(top1_by_domain.values()) / len(top1_by_domain),
            ev.top1_accuracy(top1_chosen, dataset),
        )
    )

    runs = [("baseline", model, rule) for rule in rerank.RULES]
    runs.append(("oracle", rerank.oracle_scorer_factory("raw"), rerank.RULE_ALWAYS))
    for scorer_name, scorer, rule in runs:
        policy = rerank.RerankPolicy(method="raw", rule=rule)
        results = rerank.rerank_dataset(
            dataset, beams, policy, scorer, jobs=opts["jobs"]
        )
        rerank.save_results(results, out_dir / f"results_{scorer_name}_{rule}.jsonl")
        rep = ev.report(dataset, beams, results, ks=(1, opts["beam_size"]), domains=domains)
        label = f"reranked {scorer_name} {rule}"
        rows.append((label, rep.per_domain, rep.macro_avg, rep.micro_acc))
        report_rows[label] = rep.to_dict()

    oracle_row = {}
    for d in domains:
        subset = [ex for ex in dataset if ex.domain == d]
        oracle_row[d] = ev.oracle_at_k(beams, subset, opts["beam_size"])
    rows.append(
        (
            f"oracle@{opts['beam_size']}",
            oracle_row,
            sum(oracle_row.values()) / len(oracle_row),
            ev.oracle_at_k(beams, dataset, opts["beam_size"]),
        )
    )

    table = _format_matrix(domains, rows)
    print(table)
    with open(out_dir / "report.json", "w", encoding="utf-8") as f:
        json.dump(
            {
                "rows": [
                    {"label": label, "per_domain": pd, "macro_avg": avg, "micro": micro}
                    for label, pd, avg, micro in rows
                ],
                "runs": report_rows,
            },
            f,
            ensure_ascii=False,
            indent=1,
        )
        f.write("\n")
    with open(out_dir / "report.txt", "w", encoding="utf-8") as f:
        f.write(table + "\n")
    return 0


_HANDLERS = {
    "normalize": _cmd_normalize,
    "process": _cmd_process,
    "gen-pairs": _cmd_gen_pairs,
    "train": _cmd_train,
    "rerank": _cmd_rerank,
    "evaluate": _cmd_evaluate,
    "oracle": _cmd_oracle,
    "demo": _cmd_demo,
}

_DATA_ERRORS = (
    OSError,
    ValueError,
    MissingBeamError,
    MissingResultError,
    MissingResourceError,
    RemoteProtocolError,
    RemoteUnavailableError,
    DegenerateCorpusError,
    rerank.EmptyBeamError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        opts = _merge_options(ns)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[ns.cmd](opts)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
