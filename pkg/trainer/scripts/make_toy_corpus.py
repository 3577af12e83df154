"""Generate a labeled toy image corpus for the trainer tests.

Writes PNGs, a manifest, and per-split padded tensor batch directories
(train/, validation/, test/) under the given output directory, using the
c2i package's public API and CLI.

Usage: python3 make_toy_corpus.py OUTDIR [N_SAMPLES] [SEED]
"""

import sys
from pathlib import Path

from c2i import ColorCodebook, RenderConfig, compact, plan_layout, rasterize
from c2i.cli import main as c2i_main
from c2i.corpus import CorpusManifest, Sample, export_png, save_manifest
from c2i.synth import toy_corpus_asts


def split_of(i: int) -> str:
    slot = i % 20
    if slot < 14:
        return "train"
    if slot < 17:
        return "validation"
    return "test"


def main() -> int:
    outdir = Path(sys.argv[1])
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0
    outdir.mkdir(parents=True, exist_ok=True)
    images_dir = outdir / "images"
    images_dir.mkdir(exist_ok=True)

    book = ColorCodebook()
    # small boxes keep the toy images tiny, which keeps training fast
    config = RenderConfig(box_w=2, box_h=1, gap_x=1)
    samples = []
    for i, (sample_id, ast, positive) in enumerate(toy_corpus_asts(n, seed)):
        image = compact(rasterize(plan_layout(ast, config), book),
                        collapse_cols=True)
        png = images_dir / f"{sample_id}.png"
        export_png(image, png)
        samples.append(Sample(id=sample_id, split=split_of(i),
                              labels=(positive, False, False, False, False),
                              image=str(png)))
    book_path = outdir / "codebook.txt"
    book.save(book_path)
    manifest_path = outdir / "manifest.ndjson"
    save_manifest(CorpusManifest(samples=samples, codebook=str(book_path)),
                  manifest_path)

    for split in ("train", "validation", "test"):
        rc = c2i_main(["batch", str(manifest_path), "--split", split,
                       "--batch-size", "32", "--sort-by-area",
                       "--out", str(outdir / split)])
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
