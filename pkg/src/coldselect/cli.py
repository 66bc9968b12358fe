"""Command-line pipeline: select / round / calibrate / propagate / metrics / synth.

Exit codes: 0 success, 2 validation failure, 3 computation failure.
Errors are reported with the pipeline stage that raised them.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import calibration, dataio, metrics as metrics_mod, propagation, rewrite, synthgen
from .errors import (
    ComputationError,
    EngineError,
    LabeledPoolInvalid,
    MissingLabels,
    ParamsInvalid,
    ValidationError,
    ZeroVector,
)
from .params import HyperParams
from .partition import kmeans

REPRESENTATIVENESS_K = 10


class StageFailure(EngineError):
    """Carries the pipeline stage where the underlying error was raised."""

    def __init__(self, stage: str, cause: EngineError):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass
class RunConfig:
    manifest_path: str
    output_path: str | None
    params: HyperParams
    normalize_embeddings: bool = False
    jacobi: bool = False
    threads: int | None = None
    labeled_pool_path: str | None = None
    reference_freqs_path: str | None = None
    uncertainty_path: str | None = None


def _load_presets(spec: str | None) -> dict:
    if spec is None:
        return {}
    if ":" in spec:
        path, name = spec.rsplit(":", 1)
        with open(path, "r", encoding="utf-8") as fh:
            table = json.load(fh)
    else:
        name = spec
        table = json.loads(resources.files("coldselect").joinpath("presets.json").read_text())
    if name not in table:
        raise ParamsInvalid(f"preset {name!r} not found (have: {sorted(table)})")
    return dict(table[name])


def _normalized(embeddings: np.ndarray) -> np.ndarray:
    emb = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(emb, axis=1)
    zero = np.nonzero(norms == 0)[0]
    if zero.size:
        raise ZeroVector(f"cannot normalize: embedding row {int(zero[0])} has zero norm")
    return emb / norms[:, None]


def _embedding_view(data: dataio.DatasetMatrices, normalize: bool) -> np.ndarray:
    if normalize:
        return _normalized(data.embeddings)
    return np.asarray(data.embeddings, dtype=np.float64)


def _read_labeled_pool(path: str, n: int) -> list[int]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise LabeledPoolInvalid(f"cannot read labeled pool {path}: {exc}") from exc
    pool: list[int] = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            pool.append(int(line))
        except ValueError:
            raise LabeledPoolInvalid(f"labeled pool {path}: not an integer: {line!r}") from None
    if any(i < 0 or i >= n for i in pool):
        raise LabeledPoolInvalid(f"labeled pool indices must lie in [0, {n})")
    if len(set(pool)) != len(pool):
        raise LabeledPoolInvalid("labeled pool contains duplicate indices")
    return pool


def _read_reference_freqs(path: str, c: int) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = [t for line in fh for t in line.split("#", 1)[0].split()]
    freqs = np.asarray([float(t) for t in tokens], dtype=np.float64)
    if freqs.size != c:
        raise ParamsInvalid(f"reference frequencies: expected {c} values, got {freqs.size}")
    return freqs


def _build_report(data: dataio.DatasetMatrices, emb: np.ndarray, selected: list[int],
                  cfg: RunConfig, require_labels: bool) -> metrics_mod.SelectionReport | None:
    if data.gold_labels is None:
        if require_labels:
            raise MissingLabels("IMB/LDD need gold labels, but the dataset has none")
        return None
    if data.n <= REPRESENTATIVENESS_K and not require_labels:
        # diagnostics need pool > K; skip them rather than fail the selection
        return None
    sel_labels = data.gold_labels[np.asarray(selected, dtype=np.int64)]
    if cfg.reference_freqs_path is not None:
        ref = _read_reference_freqs(cfg.reference_freqs_path, data.c)
        source = f"file:{cfg.reference_freqs_path}"
    else:
        ref = np.bincount(data.gold_labels, minlength=data.c) / data.n
        source = "pool-gold-frequencies"
    rep = metrics_mod.representativeness(selected, emb, k=REPRESENTATIVENESS_K)
    return metrics_mod.SelectionReport(
        imb=metrics_mod.imbalance(sel_labels, data.c),
        ldd=metrics_mod.label_divergence(sel_labels, ref),
        diversity=metrics_mod.diversity(selected, emb),
        representativeness=[float(v) for v in rep],
        representativeness_mean=float(rep.mean()),
        embedding_space="l2-normalized" if cfg.normalize_embeddings else "raw",
        reference_source=source,
    )


def _run_pipeline(cfg: RunConfig, labeled_pool: list[int] | None) -> dataio.SelectionOutput:
    stage = "load"
    try:
        data = dataio.load_dataset(cfg.manifest_path)
        emb = _embedding_view(data, cfg.normalize_embeddings)
        if cfg.labeled_pool_path is not None and labeled_pool is None:
            labeled_pool = _read_labeled_pool(cfg.labeled_pool_path, data.n)

        prior_source = None
        if cfg.uncertainty_path is not None:
            stage = "propagate"
            vec, meta = dataio.read_array_artifact(cfg.uncertainty_path,
                                                   expect_kind="propagated_uncertainty")
            if vec.shape != (data.n,):
                raise ParamsInvalid(
                    f"uncertainty artifact has shape {vec.shape}, dataset has n={data.n}")
            if "normalized" in meta and (meta["normalized"] == "true") != cfg.normalize_embeddings:
                raise ParamsInvalid("uncertainty artifact normalization flag does not match --normalize")
            unc = propagation.UncertaintyVectors(raw=vec, propagated=vec)
        else:
            stage = "calibrate"
            support = calibration.build_support_set(data, cfg.params.k_support)
            prior = calibration.contextual_prior(data, support)
            cal = calibration.calibrate(data, prior)
            raw_u = calibration.entropy(cal)
            prior_source = prior.source
            stage = "propagate"
            graph = propagation.knn_graph(emb, cfg.params.knn_size, workers=cfg.threads)
            unc = propagation.propagate(raw_u, graph, cfg.params.rho)

        stage = "partition"
        cfg.params.check_pool(data.n)
        part = kmeans(emb, cfg.params.budget, cfg.params.seed, workers=cfg.threads)

        stage = "rewrite"
        state = rewrite.run_ptr(emb, part, unc, cfg.params,
                                labeled_pool=labeled_pool, jacobi=cfg.jacobi)

        stage = "metrics"
        report = _build_report(data, emb, state.selected, cfg, require_labels=False)

        stage = "write"
        out = dataio.SelectionOutput(
            selected=list(state.selected),
            per_cluster={i: q for i, q in enumerate(state.selected)},
            iterations_run=state.iterations_run,
            config_echo=cfg.params,
            metrics=report,
            run_info={
                "manifest": cfg.manifest_path,
                "normalize_embeddings": cfg.normalize_embeddings,
                "jacobi": cfg.jacobi,
                "labeled_pool": cfg.labeled_pool_path,
                "reference_freqs": cfg.reference_freqs_path,
                "uncertainty": cfg.uncertainty_path,
                "prior_source": prior_source,
                "objective_trace": [float(v) for v in state.objective_trace],
                "change_counts": list(state.change_counts),
            },
        )
        if cfg.output_path is not None:
            dataio.write_selection(out, cfg.output_path)
        return out
    except StageFailure:
        raise
    except EngineError as exc:
        raise StageFailure(stage, exc) from exc


def cmd_select(cfg: RunConfig) -> dataio.SelectionOutput:
    """End-to-end single-round selection."""
    return _run_pipeline(cfg, labeled_pool=None)


def cmd_round(cfg: RunConfig) -> dataio.SelectionOutput:
    """Multi-round selection: labeled-pool members are excluded as candidates
    and added to the cross-neighbor reference set."""
    if cfg.labeled_pool_path is None:
        raise StageFailure("config", ParamsInvalid("round requires --labeled-pool"))
    return _run_pipeline(cfg, labeled_pool=None)


def cmd_metrics(cfg: RunConfig, selection_path: str) -> metrics_mod.SelectionReport:
    """Recompute the quality report for an existing selection file."""
    stage = "load"
    try:
        data = dataio.load_dataset(cfg.manifest_path)
        emb = _embedding_view(data, cfg.normalize_embeddings)
        sel = dataio.load_selection(selection_path)
        stage = "metrics"
        bad = [i for i in sel.selected if i < 0 or i >= data.n]
        if bad:
            raise ParamsInvalid(f"selection indices out of range for n={data.n}: {bad}")
        report = _build_report(data, emb, sel.selected, cfg, require_labels=True)
        assert report is not None
        return report
    except StageFailure:
        raise
    except EngineError as exc:
        raise StageFailure(stage, exc) from exc


def cmd_calibrate(cfg: RunConfig, out_prefix: str) -> None:
    stage = "load"
    try:
        data = dataio.load_dataset(cfg.manifest_path)
        stage = "calibrate"
        support = calibration.build_support_set(data, cfg.params.k_support)
        prior = calibration.contextual_prior(data, support)
        cal = calibration.calibrate(data, prior)
        raw_u = calibration.entropy(cal)
        stage = "write"
        meta = {"k_support": str(cfg.params.k_support), "prior_source": prior.source}
        dataio.write_array_artifact(out_prefix + ".calibrated.f64", cal.probs,
                                    kind="calibrated_probs", extra=meta)
        dataio.write_array_artifact(out_prefix + ".entropy.f64", raw_u,
                                    kind="entropy", extra=meta)
    except StageFailure:
        raise
    except EngineError as exc:
        raise StageFailure(stage, exc) from exc


def cmd_propagate(cfg: RunConfig, entropy_path: str, out_path: str) -> None:
    stage = "load"
    try:
        data = dataio.load_dataset(cfg.manifest_path)
        emb = _embedding_view(data, cfg.normalize_embeddings)
        raw_u, _ = dataio.read_array_artifact(entropy_path, expect_kind="entropy")
        if raw_u.shape != (data.n,):
            raise ParamsInvalid(f"entropy artifact has shape {raw_u.shape}, dataset has n={data.n}")
        stage = "propagate"
        graph = propagation.knn_graph(emb, cfg.params.knn_size, workers=cfg.threads)
        unc = propagation.propagate(raw_u, graph, cfg.params.rho)
        stage = "write"
        dataio.write_array_artifact(
            out_path, unc.propagated, kind="propagated_uncertainty",
            extra={"rho": repr(cfg.params.rho), "knn": str(cfg.params.knn_size),
                   "normalized": "true" if cfg.normalize_embeddings else "false"})
    except StageFailure:
        raise
    except EngineError as exc:
        raise StageFailure(stage, exc) from exc


def cmd_synth(args) -> str:
    spec = synthgen.SynthSpec(n=args.n, d=args.d, c=args.c,
                              cluster_separation=args.separation,
                              label_noise=args.noise, seed=args.seed)
    data = synthgen.generate(spec)
    return dataio.write_dataset(data, args.out, stem=args.stem)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest path")
    p.add_argument("--budget", type=int, help="number of samples to select")
    p.add_argument("--rho", type=float, help="kernel sharpness for propagation")
    p.add_argument("--beta", type=float, help="centroid-distance weight")
    p.add_argument("--gamma", type=float, help="margin penalty weight")
    p.add_argument("--margin", type=float, default=0.5, help="squared-distance margin")
    p.add_argument("--iterations", type=int, default=2, help="max rewrite rounds")
    p.add_argument("--k-support", type=int, dest="k_support",
                   help="per-class support set size for the prior")
    p.add_argument("--knn", type=int, default=50, help="pool-level neighbor count")
    p.add_argument("--cknn", type=int, default=10, help="selected-set neighbor count")
    p.add_argument("--seed", type=int, default=0, help="seed for clustering")
    p.add_argument("--threads", type=int, default=None, help="BLAS thread cap")
    p.add_argument("--normalize", action="store_true", help="L2-normalize embeddings")
    p.add_argument("--jacobi", action="store_true",
                   help="simultaneous rewrite updates instead of sequential")
    p.add_argument("--labeled-pool", dest="labeled_pool", default=None,
                   help="file of already-labeled sample indices")
    p.add_argument("--reference-freqs", dest="reference_freqs", default=None,
                   help="file of reference class frequencies for the divergence metric")
    p.add_argument("--preset", default=None,
                   help="named hyperparameter preset, NAME or FILE:NAME")


def _params_from_args(args, need=("k_support", "rho", "beta", "gamma", "budget")) -> HyperParams:
    preset = _load_presets(args.preset)
    merged = {
        "k_support": args.k_support if args.k_support is not None else preset.get("k_support"),
        "rho": args.rho if args.rho is not None else preset.get("rho"),
        "beta": args.beta if args.beta is not None else preset.get("beta"),
        "gamma": args.gamma if args.gamma is not None else preset.get("gamma"),
        "budget": args.budget,
        "seed": args.seed,
        "knn_size": args.knn,
        "cknn_size": args.cknn,
        "margin": args.margin,
        "iterations": args.iterations,
    }
    missing = [k for k in need if merged.get(k) is None]
    if missing:
        raise ParamsInvalid(
            f"missing required parameters: {', '.join('--' + m.replace('_', '-') for m in missing)}"
            " (pass flags or --preset)")
    # fill unneeded blanks so the dataclass constructs
    for key, default in (("k_support", 1), ("rho", 1.0), ("beta", 0.0),
                         ("gamma", 0.0), ("budget", 1)):
        if merged[key] is None:
            merged[key] = default
    return HyperParams(**merged)


def _config_from_args(args, params: HyperParams, out: str | None) -> RunConfig:
    return RunConfig(
        manifest_path=args.manifest,
        output_path=out,
        params=params,
        normalize_embeddings=args.normalize,
        jacobi=args.jacobi,
        threads=args.threads,
        labeled_pool_path=args.labeled_pool,
        reference_freqs_path=args.reference_freqs,
        uncertainty_path=getattr(args, "uncertainty", None),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldselect",
        description="Deterministic cold-start data selection over embedding/probability matrices")
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="run the full selection pipeline")
    _add_common_flags(p_select)
    p_select.add_argument("--out", required=True, help="selection output path")
    p_select.add_argument("--uncertainty", default=None,
                          help="precomputed propagated-uncertainty artifact (skips "
                               "calibration and propagation)")

    p_round = sub.add_parser("round", help="selection round against a labeled pool")
    _add_common_flags(p_round)
    p_round.add_argument("--out", required=True, help="selection output path")

    p_cal = sub.add_parser("calibrate", help="write calibrated probabilities and entropy")
    _add_common_flags(p_cal)
    p_cal.add_argument("--out", required=True, help="output artifact prefix")

    p_prop = sub.add_parser("propagate", help="propagate a stored entropy artifact")
    _add_common_flags(p_prop)
    p_prop.add_argument("--entropy", required=True, help="entropy artifact from calibrate")
    p_prop.add_argument("--out", required=True, help="propagated-uncertainty artifact path")

    p_met = sub.add_parser("metrics", help="quality report for an existing selection")
    _add_common_flags(p_met)
    p_met.add_argument("--selection", required=True, help="selection output file")
    p_met.add_argument("--out", default=None, help="write report JSON here instead of stdout")

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset")
    p_syn.add_argument("--out", required=True, help="output directory")
    p_syn.add_argument("--stem", default="dataset", help="file name stem")
    p_syn.add_argument("--n", type=int, required=True)
    p_syn.add_argument("--d", type=int, required=True)
    p_syn.add_argument("--c", type=int, required=True)
    p_syn.add_argument("--separation", type=float, default=4.0)
    p_syn.add_argument("--noise", type=float, default=0.0)
    p_syn.add_argument("--seed", type=int, default=0)
    return parser


def _dispatch(args) -> int:
    if args.command == "synth":
        manifest = cmd_synth(args)
        print(manifest)
        return 0

    if args.command in ("select", "round"):
        params = _params_from_args(args)
    elif args.command == "calibrate":
        params = _params_from_args(args, need=("k_support",))
    elif args.command == "propagate":
        params = _params_from_args(args, need=("rho",))
    else:  # metrics
        params = _params_from_args(args, need=())

    cfg = _config_from_args(args, params, getattr(args, "out", None))

    # BLAS reductions are not bitwise stable across BLAS thread counts, so
    # BLAS is pinned to one thread; --threads controls row-block workers.
    from threadpoolctl import threadpool_limits
    limits = threadpool_limits(limits=1)
    try:
        if args.command == "select":
            out = cmd_select(cfg)
            print(f"selected {len(out.selected)} samples in {out.iterations_run} "
                  f"rewrite rounds -> {cfg.output_path}")
        elif args.command == "round":
            out = cmd_round(cfg)
            print(f"selected {len(out.selected)} samples (labeled pool respected) "
                  f"-> {cfg.output_path}")
        elif args.command == "calibrate":
            cmd_calibrate(cfg, args.out)
            print(f"wrote {args.out}.calibrated.f64 and {args.out}.entropy.f64")
        elif args.command == "propagate":
            cmd_propagate(cfg, args.entropy, args.out)
            print(f"wrote {args.out}")
        elif args.command == "metrics":
            report = cmd_metrics(cfg, args.selection)
            from dataclasses import asdict
            text = json.dumps(asdict(report), indent=2)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
    finally:
        limits.unregister()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except StageFailure as exc:
        print(f"error[{exc.stage}] {type(exc.cause).__name__}: {exc.cause}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ValidationError) else 3
    except ValidationError as exc:
        print(f"error[config] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
