"""Command-line entry point: spvlad <subcommand> ..."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import islice

import numpy as np

from . import ingest
from .codebook import Codebook, train_codebook
from .datamodel import PyramidSpec
from .encoder import NORM_MODES, augmented_descriptors, encode_augmented, encode_pyramid
from .pca import DEFAULT_SAMPLE_SIZE, STANDARD_DIMS, PcaModel, fit_pca, project, sample_regions
from .synthbench import BenchConfig, generate_scenes, run_benchmark

DEFAULT_SEED = 0
DEFAULT_DIM = 256
DEFAULT_K = 4
DEFAULT_LEVEL = 2


class CliError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _add_seed(p):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default: %(default)s)")


def _add_threads(p):
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads; output is identical for any value (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spvlad",
        description="Spatial-pyramid VLAD encoding of region descriptors.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("sample", formatter_class=fmt,
                       help="reservoir-sample region descriptors to a .npy file")
    p.add_argument("--in", dest="input", required=True, help="dataset file (.spvd)")
    p.add_argument("--sample", type=_positive_int, default=DEFAULT_SAMPLE_SIZE, help="sample size cap")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output .npy file")

    p = sub.add_parser("train-pca", formatter_class=fmt, help="fit PCA on sampled regions")
    p.add_argument("--in", dest="input", required=True, help="dataset file (.spvd)")
    p.add_argument("--dim", type=_positive_int, default=DEFAULT_DIM, help="output dimension")
    p.add_argument("--nonstandard-dim", action="store_true",
                   help=f"allow a dimension outside {STANDARD_DIMS}")
    p.add_argument("--sample", type=_positive_int, default=DEFAULT_SAMPLE_SIZE, help="sample size cap")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output model file (.spvm)")

    p = sub.add_parser("train-codebook", formatter_class=fmt, help="k-means++ / Lloyd codebook")
    p.add_argument("--in", dest="input", required=True, help="dataset file (.spvd)")
    p.add_argument("--pca", required=True, help="PCA model file (.spvm)")
    p.add_argument("--k", type=_positive_int, default=DEFAULT_K, help="number of codewords")
    p.add_argument("--augment", action="store_true",
                   help="train over descriptors augmented with box position and scale (d + 3)")
    p.add_argument("--sample", type=_positive_int, default=DEFAULT_SAMPLE_SIZE, help="sample size cap")
    p.add_argument("--max-iter", type=_positive_int, default=100, help="Lloyd iteration cap")
    p.add_argument("--tol", type=float, default=1e-6, help="relative inertia improvement to stop")
    _add_seed(p)
    p.add_argument("--out", required=True, help="output model file (.spvm)")

    for name, helptext in (("encode", "spatial-pyramid VLAD encoding"),
                           ("augment-encode", "single-cell VLAD over augmented descriptors")):
        p = sub.add_parser(name, formatter_class=fmt, help=helptext)
        p.add_argument("--in", dest="input", required=True, help="dataset file (.spvd)")
        p.add_argument("--pca", required=True, help="PCA model file (.spvm)")
        p.add_argument("--codebook", required=True, help="codebook model file (.spvm)")
        if name == "encode":
            p.add_argument("--level", type=int, choices=(1, 2, 3), default=DEFAULT_LEVEL,
                           help="pyramid level")
        p.add_argument("--mode", choices=NORM_MODES, default="ssr", help="per-cell normalization")
        _add_threads(p)
        p.add_argument("--out", required=True, help="output encodings file (.spve)")
        p.add_argument("--csv", help="also export encodings as CSV to this path")

    p = sub.add_parser("synth", formatter_class=fmt, help="write a synthetic scene dataset")
    p.add_argument("--classes", type=_positive_int, default=4, help="number of scene classes")
    p.add_argument("--scenes", type=_positive_int, default=100, help="total number of scenes")
    p.add_argument("--noise", type=float, default=BenchConfig.noise, help="descriptor noise scale")
    p.add_argument("--regions", type=_positive_int, default=BenchConfig.regions_per_image,
                   help="regions per image")
    p.add_argument("--feature-dim", type=_positive_int, default=BenchConfig.feature_dim,
                   help="descriptor dimension D")
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", required=True, help="output dataset file (.spvd)")
    p.add_argument("--labels", help="optional JSON file mapping image id to class")

    p = sub.add_parser("bench", formatter_class=fmt, help="level-1 vs level-2 retrieval benchmark")
    p.add_argument("--classes", type=_positive_int, default=4, help="number of scene classes")
    p.add_argument("--scenes", type=_positive_int, default=100, help="total number of scenes")
    p.add_argument("--noise", type=float, default=BenchConfig.noise, help="descriptor noise scale")
    p.add_argument("--regions", type=_positive_int, default=BenchConfig.regions_per_image,
                   help="regions per image")
    p.add_argument("--feature-dim", type=_positive_int, default=BenchConfig.feature_dim,
                   help="descriptor dimension D")
    p.add_argument("--dim", type=_positive_int, default=BenchConfig.pca_dim, help="PCA dimension")
    p.add_argument("--k", type=_positive_int, default=BenchConfig.n_words, help="number of codewords")
    p.add_argument("--mode", choices=NORM_MODES, default="ssr", help="per-cell normalization")
    _add_seed(p)
    _add_threads(p)
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("inspect", formatter_class=fmt, help="print header and shape of any spvlad file")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=5, help="records to detail (dataset, encodings)")
    return parser


def _check_dim(dim: int, allow: bool) -> None:
    if dim not in STANDARD_DIMS and not allow:
        raise CliError(
            f"--dim {dim} is not one of {STANDARD_DIMS}; pass --nonstandard-dim to use it anyway"
        )


class _AugmentedRows:
    """Duck-types the `features()` accessor that sample_regions reads."""

    def __init__(self, image_id, rows):
        self.id = image_id
        self._rows = rows

    def features(self):
        return self._rows


def cmd_sample(args) -> None:
    sample = sample_regions(ingest.read_dataset(args.input), args.sample, args.seed)
    np.save(args.out, sample)
    print(f"sampled {len(sample)} descriptors of dim {sample.shape[1]} -> {args.out}")


def cmd_train_pca(args) -> None:
    _check_dim(args.dim, args.nonstandard_dim)
    sample = sample_regions(ingest.read_dataset(args.input), args.sample, args.seed)
    model = fit_pca(sample, args.dim, args.seed)
    ingest.save_model(args.out, model)
    print(f"pca D={model.input_dim} d={model.output_dim} from {len(sample)} regions -> {args.out}")


def cmd_train_codebook(args) -> None:
    pca = ingest.load_model(args.pca, expect=PcaModel)
    if args.augment:
        # sample whole augmented rows so geometry travels with its descriptor
        rows = (
            _AugmentedRows(rec.id, augmented_descriptors(pca, rec))
            for rec in ingest.read_dataset(args.input)
        )
        points = sample_regions(rows, args.sample, args.seed).astype(np.float64)
    else:
        sample = sample_regions(ingest.read_dataset(args.input), args.sample, args.seed)
        points = project(pca, sample)
    cb = train_codebook(points, args.k, args.seed, args.max_iter, args.tol)
    ingest.save_model(args.out, cb)
    print(f"codebook K={cb.n_words} d={cb.dim} inertia={cb.inertia:.6g} "
          f"iterations={cb.n_iter} -> {args.out}")


def cmd_encode(args, augmented: bool) -> None:
    pca = ingest.load_model(args.pca, expect=PcaModel)
    cb = ingest.load_model(args.codebook, expect=Codebook)
    if augmented:
        def work(rec):
            return encode_augmented(pca, cb, rec, args.mode)
    else:
        spec = PyramidSpec(args.level)

        def work(rec):
            return encode_pyramid(pca, cb, rec, spec, args.mode)
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        encodings = list(pool.map(work, ingest.read_dataset(args.input)))
    ingest.save_encodings(args.out, encodings)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            ingest.export_csv(encodings, f)
    dim = encodings[0].vector.size if encodings else 0
    print(f"encoded {len(encodings)} images, dim {dim} -> {args.out}")


def _bench_config(args, **extra) -> BenchConfig:
    if args.noise < 0:
        raise CliError("--noise must be >= 0")
    return BenchConfig(
        n_classes=args.classes, n_scenes=args.scenes, noise=args.noise,
        regions_per_image=args.regions, feature_dim=args.feature_dim, **extra,
    )


def cmd_synth(args) -> None:
    scenes, labels = generate_scenes(_bench_config(args), args.seed, args.threads)
    ingest.write_dataset(args.out, scenes)
    if args.labels:
        with open(args.labels, "w") as f:
            json.dump({s.id: lab for s, lab in zip(scenes, labels)}, f, indent=2)
            f.write("\n")
    print(f"wrote {len(scenes)} synthetic scenes -> {args.out}")


def cmd_bench(args) -> None:
    config = _bench_config(args, pca_dim=args.dim, n_words=args.k, mode=args.mode)
    report = run_benchmark(config, args.seed, args.threads)
    text = report.to_json() + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_inspect(args) -> None:
    magic = ingest.sniff(args.file)
    if magic == ingest.DATASET_MAGIC:
        dim, count = ingest.read_dataset_header(args.file)
        print(f"format=dataset version={ingest.FORMAT_VERSION} D={dim} images={count}")
        for rec in islice(ingest.read_dataset(args.file), max(args.limit, 0)):
            print(f"  {rec.id}: {rec.width}x{rec.height} regions={rec.n_regions}")
    elif magic == ingest.MODEL_MAGIC:
        kind, rows, cols = ingest.read_model_header(args.file)
        if kind == ingest.KIND_PCA:
            print(f"kind=pca d={rows} D={cols}")
        else:
            print(f"kind=codebook K={rows} d={cols}")
    elif magic == ingest.ENCODING_MAGIC:
        level, k, d, count = ingest.read_encoding_header(args.file)
        spec = PyramidSpec(level)
        print(f"format=encodings level={level} K={k} d={d} dim={spec.dim(k, d)} count={count}")
        for enc in ingest.load_encodings(args.file)[:max(args.limit, 0)]:
            print(f"  {enc.image_id}:")
            for (lv, idx, off, n), norm, c in zip(enc.layout, enc.cell_norms(), enc.cell_counts):
                print(f"    level={lv} cell={idx} offset={off} length={n} regions={c} norm={norm:.6f}")
    else:
        raise CliError(f"{args.file}: unrecognized file format (magic {magic!r})")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "sample": cmd_sample,
        "train-pca": cmd_train_pca,
        "train-codebook": cmd_train_codebook,
        "encode": lambda a: cmd_encode(a, augmented=False),
        "augment-encode": lambda a: cmd_encode(a, augmented=True),
        "synth": cmd_synth,
        "bench": cmd_bench,
        "inspect": cmd_inspect,
    }
    try:
        handlers[args.command](args)
    except (CliError, ValueError, OSError) as exc:
        print(f"spvlad {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
