"""Command-line front end.

Exit codes: 0 success, 1 runtime or data error, 2 usage error. Standard
output carries only the machine-readable result (the final score for
``score``, the tau summary for ``experiment``); everything else goes to
standard error.
"""

from __future__ import annotations

import argparse
import sys

from .graph import GraphConfig, build_lgg, save_graph
from .harness import DEFAULT_ZOO, DataSpec, load_zoo_file, run_zoo
from .io import load_manifest, read_array_file
from .mixup import make_plan, save_plan
from .scoring import ScorePreset, run_score, builtin_preset


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_graph_build(args) -> int:
    X = read_array_file(args.embeddings)
    config = GraphConfig(
        kernel=args.kernel,
        k=args.k,
        binarize=args.binarize,
        symmetrize=args.symmetrize,
        normalize=args.normalize,
        gamma=args.gamma,
    )
    G = build_lgg(X, config)
    save_graph(G, args.out)
    _note(f"wrote graph with {G.n} vertices, {G.adjacency.nnz} stored edges to {args.out}")
    return 0


def _cmd_score(args) -> int:
    dataset = load_manifest(args.manifest)
    base = builtin_preset(args.method)
    preset = ScorePreset(
        method=base.method,
        n_graphs=base.n_graphs if args.graphs is None else args.graphs,
        graph=base.graph,
        alpha=base.alpha if args.alpha is None else args.alpha,
        use_mixup=base.use_mixup,
        vertex_policy=(
            base.vertex_policy if args.vertex_policy is None else args.vertex_policy
        ),
    )
    report = run_score(dataset, preset, seed=args.seed, target=args.target)
    if args.out:
        report.save(args.out)
        _note(f"wrote report to {args.out}")
    print(repr(report.final))
    return 0


def _cmd_experiment(args) -> int:
    if args.zoo is None:
        data, models = DataSpec(), list(DEFAULT_ZOO)
    else:
        data, models = load_zoo_file(args.zoo)
    result = run_zoo(
        models=models,
        data=data,
        seed=args.seed,
        threads=args.threads,
        out_dir=args.out_dir,
    )
    _note(f"wrote results for {len(result.rows)} models to {args.out_dir}")
    for name in ("vr", "wcv"):
        _note(f"tau_{name}={result.tau[name]!r}")
    print(f"tau_vpm={result.tau['vpm']!r}")
    return 0


def _cmd_mixup_plan(args) -> int:
    plan = make_plan(args.n, args.sources, args.alpha, args.seed)
    save_plan(plan, args.out)
    _note(f"wrote plan with {len(plan)} pairs to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgg",
        description="Predict classifier generalization from latent geometry graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    graph = sub.add_parser("graph", help="graph construction utilities")
    graph_sub = graph.add_subparsers(dest="graph_command", required=True)
    build = graph_sub.add_parser("build", help="build a k-NN graph from embeddings")
    build.add_argument("--embeddings", required=True, help="embedding matrix (.npy or .csv)")
    build.add_argument("--kernel", choices=("cosine", "rbf"), default="cosine")
    build.add_argument("--k", type=_positive_int, default=10)
    build.add_argument("--binarize", action="store_true")
    build.add_argument("--symmetrize", action="store_true")
    build.add_argument("--normalize", action="store_true")
    build.add_argument("--gamma", type=_positive_float, default=None)
    build.add_argument("--out", required=True, help="output graph JSON path")
    build.set_defaults(func=_cmd_graph_build)

    score = sub.add_parser("score", help="score a dataset manifest")
    score.add_argument("--manifest", required=True)
    score.add_argument("--method", required=True, choices=("vr", "wcv", "vpm"))
    score.add_argument("--graphs", type=_positive_int, default=None,
                       help="graph count (default: the method's preset)")
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--alpha", type=_positive_float, default=None)
    score.add_argument("--vertex-policy", choices=("mixed", "original", "both"),
                       default=None, dest="vertex_policy")
    score.add_argument("--target", type=_positive_int, default=500,
                       help="vertices per graph before class rounding")
    score.add_argument("--out", default=None, help="report JSON path")
    score.set_defaults(func=_cmd_score)

    experiment = sub.add_parser("experiment", help="run a model zoo")
    experiment.add_argument("--zoo", default=None,
                            help="zoo JSON file (default: the bundled 12-model zoo)")
    experiment.add_argument("--seed", type=int, default=0)
    experiment.add_argument("--out-dir", required=True, dest="out_dir")
    experiment.add_argument("--threads", type=_positive_int, default=None,
                            help="worker cap (default: available cores)")
    experiment.set_defaults(func=_cmd_experiment)

    mixup = sub.add_parser("mixup", help="mixup utilities")
    mixup_sub = mixup.add_subparsers(dest="mixup_command", required=True)
    plan = mixup_sub.add_parser("plan", help="write a mixup plan file")
    plan.add_argument("--n", type=_positive_int, required=True, help="pair count")
    plan.add_argument("--sources", type=_positive_int, required=True,
                      help="source pool size")
    plan.add_argument("--alpha", type=_positive_float, required=True)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", required=True)
    plan.set_defaults(func=_cmd_mixup_plan)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
