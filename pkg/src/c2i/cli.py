"""Command-line surface: c2i encode|decode|stats|oversample|batch|eval|check.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 internal
invariant violation (e.g. a failed round-trip check).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .codebook import ColorCodebook
from .compact import compact
from .cparser import parse_source
from .decode import decode
from .errors import C2IError, InputError, InternalError
from .render import ImageRep, RenderConfig, plan_layout, rasterize
from .tree import Ast, read_interchange, write_interchange

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

ENV_CODEBOOK = "C2I_CODEBOOK"


def _add_render_flags(p: argparse.ArgumentParser):
    p.add_argument("--box-w", type=int, default=8)
    p.add_argument("--box-h", type=int, default=4)
    p.add_argument("--gap-x", type=int, default=2)
    p.add_argument("--lane-pitch", type=int, default=2)
    p.add_argument("--margin-y", type=int, default=1)
    p.add_argument("--fixed-lanes", type=int, default=None,
                   help="fixed lane budget per band (may reintroduce crossings)")
    p.add_argument("--collapse-cols", action="store_true",
                   help="also collapse adjacent duplicate columns when compacting")


def _config_from(args) -> RenderConfig:
    return RenderConfig(box_w=args.box_w, box_h=args.box_h, gap_x=args.gap_x,
                        lane_pitch=args.lane_pitch, margin_y=args.margin_y,
                        fixed_lanes=args.fixed_lanes)


def _codebook_path(args) -> str | None:
    return args.codebook or os.environ.get(ENV_CODEBOOK)


def _load_or_new_codebook(path: str | None) -> ColorCodebook:
    if path and Path(path).exists():
        return ColorCodebook.load(path)
    return ColorCodebook()


def _load_ast(path: Path) -> Ast:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return read_interchange(text)
    return parse_source(text)


def _load_image(path: Path) -> ImageRep:
    if path.suffix == ".png":
        return corpus_mod.import_png(path)
    batch = corpus_mod.load_tensor(path)
    if batch.pixels.shape[0] != 1:
        raise InputError(f"{path}: expected a single-image tensor, got "
                         f"{batch.pixels.shape[0]} images")
    return ImageRep(pixels=batch.pixels[0], meta={"source": str(path)})


# --- subcommands ------------------------------------------------------------

def cmd_encode(args) -> int:
    if not (args.png or args.raw or args.json):
        raise UsageError("encode needs at least one of --png/--raw/--json")
    book_path = _codebook_path(args)
    book = _load_or_new_codebook(book_path)
    ast = _load_ast(Path(args.input))
    plan = plan_layout(ast, _config_from(args))
    image = rasterize(plan, book)
    image = compact(image, collapse_cols=args.collapse_cols)
    if args.png:
        corpus_mod.export_png(image, args.png)
    if args.raw:
        batch = corpus_mod.BatchTensor(pixels=image.pixels[None, ...],
                                       dims=[(image.height, image.width)])
        corpus_mod.save_tensor(batch, args.raw)
    if args.json:
        Path(args.json).write_text(write_interchange(ast) + "\n", encoding="utf-8")
    if book_path:
        book.save(book_path)
    return EXIT_OK


def cmd_decode(args) -> int:
    book_path = _codebook_path(args)
    if not book_path:
        raise UsageError("decode needs --codebook (or C2I_CODEBOOK)")
    book = ColorCodebook.load(book_path)
    image = _load_image(Path(args.input))
    ast = decode(image, book)
    text = write_interchange(ast)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def cmd_stats(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    report = corpus_mod.stats(manifest, warn=lambda m: print(f"warning: {m}",
                                                             file=sys.stderr))
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    if args.plot:
        report.plot(args.plot)
    summary = {
        "samples": len(manifest.samples),
        "counted": len(manifest.samples) - len(report.skipped),
        "skipped": len(report.skipped),
        "depth_hist": {str(k): v for k, v in sorted(report.depth_hist.items())},
        "max_nodes_per_level_hist": {str(k): v for k, v
                                     in sorted(report.max_width_hist.items())},
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_oversample(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    out = corpus_mod.oversample(manifest, args.category,
                                target_ratio=args.target_ratio)
    corpus_mod.save_manifest(out, args.out)
    cat = corpus_mod.category_index(args.category)
    train = out.split("train")
    pos = sum(1 for s in train if s.labels[cat])
    print(f"train positives: {pos} / {len(train)} "
          f"({100.0 * pos / len(train):.2f}%)")
    return EXIT_OK


def cmd_batch(args) -> int:
    manifest = corpus_mod.load_manifest(args.manifest)
    samples = manifest.split(args.split) if args.split else manifest.samples
    if args.sort_by_area:
        def area(s):
            img = corpus_mod.import_png(s.image)
            return img.height * img.width
        samples = sorted(samples, key=area)
    images = []
    ids = []
    for s in samples:
        if s.image is None:
            raise InputError(f"sample {s.id}: no image locator")
        images.append(corpus_mod.import_png(s.image))
        ids.append(s.id)
    batches = corpus_mod.make_batches(images, args.batch_size, ids=ids)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    index = []
    for i, b in enumerate(batches):
        name = f"batch_{i:05d}.c2i1"
        corpus_mod.save_tensor(b, outdir / name)
        index.append({"file": name, "ids": b.ids,
                      "dims": [list(d) for d in b.dims]})
    (outdir / "index.json").write_text(json.dumps(index, indent=2),
                                       encoding="utf-8")
    print(f"wrote {len(batches)} batches to {outdir}")
    return EXIT_OK


def _read_csv_column(path, value_name) -> dict[str, str]:
    rows = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'id,{value_name}'")
            if lineno == 1 and parts[1].lower() in (value_name, "value"):
                continue  # header row
            rows[parts[0]] = parts[1]
    return rows


def cmd_eval(args) -> int:
    score_rows = _read_csv_column(args.scores, "score")
    label_rows = _read_csv_column(args.labels, "label")
    missing = set(score_rows) ^ set(label_rows)
    if missing:
        raise InputError(f"ids present in only one file: {sorted(missing)[:5]}")
    ids = sorted(score_rows)
    try:
        scores = [float(score_rows[i]) for i in ids]
        labels = [bool(int(label_rows[i])) for i in ids]
    except ValueError as e:
        raise InputError(f"bad numeric value: {e}") from e
    report = corpus_mod.evaluate(scores, labels)
    if args.pr:
        Path(args.pr).write_text(report.pr_csv(), encoding="utf-8")
    print(report.to_json())
    return EXIT_OK


def _check_one(payload):
    ast, config, book = payload
    plan = plan_layout(ast, config)
    image = compact(rasterize(plan, book))
    return decode(image, book) == ast


def cmd_check(args) -> int:
    book_path = _codebook_path(args)
    book = _load_or_new_codebook(book_path)
    config = _config_from(args)
    root = Path(args.corpus)
    files = sorted(p for p in root.rglob("*") if p.suffix in (".c", ".json"))
    if not files:
        raise InputError(f"no .c or .json files under {root}")

    asts = []
    for path in files:
        asts.append((path, _load_ast(path)))
    # sequential codebook-population pass; round-trips then run read-only
    from .tree import bfs
    for _, ast in asts:
        for node, _ in bfs(ast):
            book.get_or_assign(node.key())

    payloads = [(ast, config, book) for _, ast in asts]
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_check_one, payloads))
    else:
        results = [_check_one(p) for p in payloads]

    failures = 0
    for (path, _), ok in zip(asts, results):
        status = "ok" if ok else "MISMATCH"
        if not ok:
            failures += 1
        print(f"{status}\t{path}")
    print(f"{len(files) - failures}/{len(files)} round-trips passed")
    if book_path:
        book.save(book_path)
    if failures:
        raise InternalError(f"{failures} round-trip failures")
    return EXIT_OK


# --- dispatch ---------------------------------------------------------------

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="c2i",
                     description="Lossless RGB image encoding of C ASTs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="render source or interchange JSON to an image")
    p.add_argument("input")
    p.add_argument("--codebook")
    p.add_argument("--png")
    p.add_argument("--raw")
    p.add_argument("--json")
    _add_render_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover the AST from an image")
    p.add_argument("input")
    p.add_argument("--codebook")
    p.add_argument("--json")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="AST depth/width histograms over a corpus")
    p.add_argument("manifest")
    p.add_argument("--csv")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("oversample", help="duplicate positive train samples")
    p.add_argument("manifest")
    p.add_argument("--category", required=True)
    p.add_argument("--target-ratio", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oversample)

    p = sub.add_parser("batch", help="pack manifest images into padded tensors")
    p.add_argument("manifest")
    p.add_argument("--split", default=None, choices=corpus_mod.SPLITS)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--sort-by-area", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="score a classifier's per-sample probabilities")
    p.add_argument("scores")
    p.add_argument("labels")
    p.add_argument("--pr", help="write the precision-recall sweep CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="verify encode->compact->decode round-trips")
    p.add_argument("corpus")
    p.add_argument("--codebook")
    p.add_argument("--jobs", type=int, default=1)
    _add_render_flags(p)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"c2i: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as e:
        print(f"c2i: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, OSError) as e:
        print(f"c2i: {e}", file=sys.stderr)
        return EXIT_INPUT
    except C2IError as e:
        print(f"c2i: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
