"""Command-line interface: ``tensorlvm <command> ...``.

Exit status is 0 on success, 2 for invalid input and 3 for numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import learn as pipelines
from . import models
from .direct import AlsConfig, als, simdiag
from .errors import NumericalError, ValidationError
from .evaluation import match_by_distance, match_components, perturbation_sweep
from .formats import read_corpus, read_dten, write_corpus, write_dten, write_factors
from .imaging import compress_image
from .instances import nonorthogonal_instance, orthogonal_instance
from .overcomplete import foobi, tensorize_decompose
from .power import PowerConfig, decompose_orthogonal
from .report import DecompositionReport, plain_data
from .stream import TripleSampleBatch
from .tensor import frobenius_norm, kruskal_to_tensor
from .whitening import decompose_nonorthogonal

METHODS = ("power", "whiten-power", "simdiag", "als", "foobi", "tensorize")
FAMILIES = ("topic", "gmm", "gmm-diff", "lda", "multiview", "hmm", "ica", "noisyor")


def _deterministic(report):
    """Report as plain data without wall-clock timings."""
    out = report.to_dict() if isinstance(report, DecompositionReport) else dict(report)
    out.pop("timings", None)
    extra = out.get("extra")
    if isinstance(extra, dict):
        out["extra"] = {k: v for k, v in extra.items() if k not in ("components", "gamma")}
    return out


def _power_cfg(args):
    return PowerConfig(restarts=args.restarts, iterations=args.iters or 100, seed=args.seed)


def cmd_decompose(args):
    T = read_dten(args.input)
    k = args.rank
    if args.method == "whiten-power" and args.second_moment is None:
        raise ValidationError(
            "whiten-power needs --second-moment: whitening requires a second-moment matrix "
            "M = sum_j w_j a_j a_j^T with the same components as the tensor")
    if args.method == "power":
        K, report = decompose_orthogonal(T, k, _power_cfg(args))
    elif args.method == "whiten-power":
        K, report = decompose_nonorthogonal(T, read_dten(args.second_moment), k, _power_cfg(args))
    elif args.method == "als":
        cfg = AlsConfig(rank=k, l2_reg=args.reg, max_iters=args.iters or 200, seed=args.seed)
        K, report = als(T, cfg)
    else:
        if args.method == "simdiag":
            K = simdiag(T, seed=args.seed, rank=k)
        elif args.method == "foobi":
            K = foobi(T, k, seed=args.seed)
        else:
            K = tensorize_decompose(T, k, _power_cfg(args), seed=args.seed)
        report = DecompositionReport(method=args.method, rank=k)
        report.reconstruction_error = frobenius_norm(T - kruskal_to_tensor(K))
        report.relative_error = report.reconstruction_error / max(frobenius_norm(T), 1e-300)
    write_factors(args.out, K, _deterministic(report))
    print(json.dumps({"method": args.method, "rank": k,
                      "relative_error": report.relative_error}))
    return 0


def _load_spec(family, path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        if family == "topic":
            return models.TopicSpec(raw["w"], raw["mu"])
        if family in ("gmm", "gmm-diff"):
            return models.GmmSpec(raw["w"], raw["means"], raw.get("sigma", 1.0))
        if family == "lda":
            return models.LdaSpec(raw["alpha"], raw["mu"])
        if family == "multiview":
            return models.MultiviewSpec(raw["w"], tuple(raw["means"]), raw.get("sigma", 0.0))
        if family == "hmm":
            return models.HmmSpec(raw["pi"], raw["T"], raw["O"])
        if family == "ica":
            return models.IcaSpec(raw["A"], raw["kurtosis"], raw.get("noise", 0.0))
        return models.NoisyOrSpec(raw["rho"], raw["W"])
    except KeyError as exc:
        raise ValidationError(f"spec for {family} is missing {exc}") from exc


def _population(family, spec):
    if family == "topic":
        return models.topic_population_moments(spec)
    if family in ("gmm", "gmm-diff"):
        return models.gmm_population_moments(spec)
    if family == "lda":
        return models.lda_population_moments(spec)
    if family == "multiview":
        return models.multiview_population_moments(spec)
    if family == "hmm":
        return models.hmm_population_moments(spec)
    if family == "ica":
        return models.ica_population_moments(spec)
    M, T = models.noisy_or_lowrank(spec)
    return models.MomentSet("noisyor", m2=M, m3=T)


def cmd_generate(args):
    spec = _load_spec(args.family, args.spec)
    os.makedirs(args.out, exist_ok=True)
    path = lambda name: os.path.join(args.out, name)
    fam, n, seed = args.family, args.n, args.seed
    if fam == "topic":
        write_corpus(path("corpus.txt"), models.sample_topic(spec, n, seed, args.length))
    elif fam == "lda":
        write_corpus(path("corpus.txt"), models.sample_lda(spec, n, seed, args.length))
    elif fam in ("gmm", "gmm-diff"):
        write_dten(path("samples.dten"), models.sample_gmm(spec, n, seed))
    elif fam == "multiview":
        batch = models.sample_multiview(spec, n, seed)
        for name in ("x1", "x2", "x3"):
            write_dten(path(f"{name}.dten"), getattr(batch, name))
    elif fam == "hmm":
        symbols, _ = models.sample_hmm(spec, n, seed, max(args.length, 3))
        write_corpus(path("sequences.txt"), symbols)
    elif fam == "ica":
        write_dten(path("samples.dten"), models.sample_ica(spec, n, seed))
    else:
        write_dten(path("samples.dten"), models.sample_noisyor(spec, n, seed).astype(np.float64))
    moments = _population(fam, spec)
    write_dten(path("m2.dten"), moments.m2)
    for name in ("m3", "m4"):
        if getattr(moments, name) is not None:
            write_dten(path(f"{name}.dten"), getattr(moments, name))
    print(json.dumps({"family": fam, "n": n, "out": args.out}))
    return 0


def _truth_columns(family, spec):
    """The parameter matrix the learned model is compared against, and the metric."""
    if family in ("topic", "lda"):
        return "mu", spec.mu, 1
    if family in ("gmm", "gmm-diff"):
        return "means", spec.means, 2
    if family == "multiview":
        return "means", spec.means[2], 2
    if family == "hmm":
        return "O", spec.O, 1
    if family == "ica":
        return "A", spec.A, 2
    return "F", spec.F, 2


def cmd_learn(args):
    fam, k = args.family, args.rank
    cfg = PowerConfig(seed=args.seed)
    if fam in ("topic", "lda", "hmm"):
        data = read_corpus(args.input)
        width = 3
        arr = np.array([doc[:width] for doc in data if len(doc) >= width])
        if len(arr) != len(data):
            raise ValidationError("every document or sequence needs at least 3 symbols")
    if fam == "topic":
        out = pipelines.learn_topic(arr, k, cfg, d=args.dim)
    elif fam == "lda":
        if args.alpha0 is None:
            raise ValidationError("lda needs --alpha0")
        out = pipelines.learn_lda(arr, k, args.alpha0, cfg, d=args.dim)
    elif fam == "hmm":
        out = pipelines.learn_hmm(arr, k, cfg, d=args.dim)
    elif fam == "multiview":
        views = [read_dten(os.path.join(args.input, f"{v}.dten")) for v in ("x1", "x2", "x3")]
        out = pipelines.learn_multiview(TripleSampleBatch(*views), k, cfg)
    elif fam in ("gmm", "gmm-diff"):
        out = pipelines.learn_gmm(read_dten(args.input), k, cfg, differing=fam == "gmm-diff")
    elif fam == "ica":
        out = pipelines.learn_ica(read_dten(args.input), k, cfg, seed=args.seed)
    else:
        out = pipelines.learn_noisyor(read_dten(args.input), k, cfg)
    report = out.pop("report")
    model = {"family": fam, "rank": k, "parameters": plain_data(out), "report": _deterministic(report)}
    if args.truth:
        key, truth, order = _truth_columns(fam, _load_spec(fam, args.truth))
        est = out[key][2] if fam == "multiview" else out[key]
        if fam in ("ica", "noisyor"):
            match = match_components(truth, est)
        else:
            match = match_by_distance(truth, est, ord=order)
        model["match"] = {"parameter": key, "norm": order, "permutation": match.permutation.tolist(),
                          "errors": match.errors.tolist(), "max_error": match.max_error}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(model, fh, indent=1)
        fh.write("\n")
    print(json.dumps({"family": fam, "rank": k, "max_error": model.get("match", {}).get("max_error")}))
    return 0


def cmd_sweep(args):
    if args.instance == "orthogonal":
        builder = lambda s: orthogonal_instance(args.dim, args.rank, s)

        def decomposer(T, M):
            K, _ = decompose_orthogonal(T, args.rank, PowerConfig(seed=args.seed))
            return K.factors[0], K.weights
    else:
        builder = lambda s: nonorthogonal_instance(args.dim, args.rank, s)

        def decomposer(T, M):
            _, rep = decompose_nonorthogonal(T, M, args.rank, PowerConfig(seed=args.seed))
            return rep.extra["components"], rep.extra["Lambda"]
    result = perturbation_sweep(builder, decomposer, args.eps, args.seeds, csv_path=args.out)
    print(json.dumps({"slope": result.slope, "monotone": result.monotone, "rows": len(result.rows)}))
    return 0


def cmd_compress(args):
    cfg = AlsConfig(rank=args.rank, max_iters=args.iters, seed=args.seed, l2_reg=args.reg)
    _, _, stats = compress_image(args.input, args.rank, cfg, ppm_out=args.output,
                                 factors_out=args.factors)
    stats = {k: v for k, v in stats.items() if k != "seconds"}
    print(json.dumps(stats))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tensorlvm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="decompose a DTEN tensor")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--in", dest="input", required=True, help="input tensor (.dten)")
    p.add_argument("--out", required=True, help="output factors JSON")
    p.add_argument("--second-moment", help="second-moment matrix (.dten) for whiten-power")
    p.add_argument("--reg", type=float, default=0.0, help="ALS ridge parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, help="power iterations or ALS sweeps")
    p.add_argument("--restarts", type=int, help="power-method restarts")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("generate", help="sample data and population moments from a model spec")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--spec", required=True, help="model parameters (JSON)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=3, help="words per document or sequence length")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("learn", help="estimate model parameters from data")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--in", dest="input", required=True, help="corpus, DTEN samples or view directory")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--dim", type=int, help="vocabulary or alphabet size")
    p.add_argument("--alpha0", type=float, help="Dirichlet concentration (lda)")
    p.add_argument("--truth", help="spec JSON to match the estimate against")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("sweep", help="perturbation sweep written as CSV")
    p.add_argument("--instance", choices=("orthogonal", "whitened"), default="orthogonal")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--eps", type=float, nargs="+", default=[0.0, 1e-5, 1e-4, 1e-3])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--seed", type=int, default=0, help="power-method seed")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compress-image", help="rank-K CP compression of a P6 image")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--factors", help="also write the factors JSON here")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_compress)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
