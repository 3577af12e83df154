"""Dataset plumbing: manifests with CWE labels, AST statistics,
oversampling, batch padding, tensor/PNG export, and classifier-score
evaluation.

Manifest files are newline-delimited JSON records
{id, split, labels[5], image, ast}; the raw tensor format is
magic "C2I1" + little-endian u32 N, H, W + N*H*W*3 bytes of row-major RGB.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EvaluationError, InputError, ManifestError
from .render import ImageRep
from .tree import Ast, depth as ast_depth, level_widths, read_interchange

CATEGORIES = ("CWE-119", "CWE-120/121/122", "CWE-469", "CWE-476", "CWE-other")
SPLITS = ("train", "validation", "test")

TENSOR_MAGIC = b"C2I1"


@dataclass(frozen=True)
class Sample:
    id: str
    split: str
    labels: tuple[bool, bool, bool, bool, bool]
    image: str | None = None
    ast: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ManifestError(f"sample {self.id!r}: unknown split {self.split!r}")
        if len(self.labels) != len(CATEGORIES):
            raise ManifestError(
                f"sample {self.id!r}: expected {len(CATEGORIES)} labels")
        object.__setattr__(self, "labels", tuple(bool(v) for v in self.labels))


@dataclass
class CorpusManifest:
    samples: list[Sample] = field(default_factory=list)
    codebook: str | None = None

    def __post_init__(self):
        ids = [s.id for s in self.samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ManifestError(f"duplicate sample ids: {dupes[:5]}")

    def split(self, name: str) -> list[Sample]:
        return [s for s in self.samples if s.split == name]

    def category_counts(self) -> dict[str, dict[str, int]]:
        counts = {cat: {s: 0 for s in SPLITS} for cat in CATEGORIES}
        for s in self.samples:
            for cat, flag in zip(CATEGORIES, s.labels):
                if flag:
                    counts[cat][s.split] += 1
        return counts


def category_index(category) -> int:
    if isinstance(category, int):
        if not 0 <= category < len(CATEGORIES):
            raise ManifestError(f"category index {category} out of range")
        return category
    try:
        return CATEGORIES.index(category)
    except ValueError:
        raise ManifestError(
            f"unknown category {category!r}; expected one of {CATEGORIES}") from None


# --- manifest IO ----------------------------------------------------------

def read_manifest(text: str) -> CorpusManifest:
    samples = []
    codebook = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"line {lineno}: {e.msg}") from e
        if "codebook" in rec and "id" not in rec:
            codebook = rec["codebook"]
            continue
        try:
            samples.append(Sample(id=rec["id"], split=rec["split"],
                                  labels=tuple(rec["labels"]),
                                  image=rec.get("image"), ast=rec.get("ast")))
        except KeyError as e:
            raise ManifestError(f"line {lineno}: missing field {e}") from e
    return CorpusManifest(samples=samples, codebook=codebook)


def write_manifest(manifest: CorpusManifest) -> str:
    lines = []
    if manifest.codebook is not None:
        lines.append(json.dumps({"codebook": manifest.codebook},
                                separators=(",", ":")))
    for s in manifest.samples:
        rec = {"id": s.id, "split": s.split, "labels": list(s.labels),
               "image": s.image, "ast": s.ast}
        lines.append(json.dumps(rec, separators=(",", ":"), ensure_ascii=False))
    return "\n".join(lines) + "\n"


def load_manifest(path) -> CorpusManifest:
    with open(path, encoding="utf-8") as f:
        return read_manifest(f.read())


def save_manifest(manifest: CorpusManifest, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_manifest(manifest))


# --- statistics -----------------------------------------------------------

@dataclass
class CorpusStats:
    depth_hist: dict[int, int]
    max_width_hist: dict[int, int]
    skipped: list[str]  # sample ids whose AST could not be resolved

    def to_csv(self) -> str:
        lines = ["statistic,value,count"]
        for d in sorted(self.depth_hist):
            lines.append(f"depth,{d},{self.depth_hist[d]}")
        for w in sorted(self.max_width_hist):
            lines.append(f"max_nodes_per_level,{w},{self.max_width_hist[w]}")
        return "\n".join(lines) + "\n"

    def plot(self, path):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6))
        ax1.bar(list(self.depth_hist), list(self.depth_hist.values()))
        ax1.set_xlabel("AST depth")
        ax1.set_ylabel("samples")
        ax2.bar(list(self.max_width_hist), list(self.max_width_hist.values()))
        ax2.set_xlabel("max nodes per level")
        ax2.set_ylabel("samples")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def stats(manifest: CorpusManifest, ast_loader=None, warn=None) -> CorpusStats:
    """Depth and max-nodes-per-level histograms over the corpus.

    ast_loader maps a sample's ast locator to an Ast; by default the
    locator is read as an interchange JSON file path. Unresolvable samples
    are warned about and excluded from the counts.
    """
    if ast_loader is None:
        def ast_loader(locator):
            with open(locator, encoding="utf-8") as f:
                return read_interchange(f.read())

    depth_hist: dict[int, int] = {}
    width_hist: dict[int, int] = {}
    skipped: list[str] = []
    for sample in manifest.samples:
        try:
            if sample.ast is None:
                raise InputError("no ast locator")
            ast = ast_loader(sample.ast)
        except (OSError, InputError) as e:
            skipped.append(sample.id)
            if warn is not None:
                warn(f"sample {sample.id}: {e}")
            continue
        d = ast_depth(ast)
        w = max(level_widths(ast))
        depth_hist[d] = depth_hist.get(d, 0) + 1
        width_hist[w] = width_hist.get(w, 0) + 1
    return CorpusStats(depth_hist=depth_hist, max_width_hist=width_hist,
                       skipped=skipped)


# --- oversampling ---------------------------------------------------------

def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def oversample(manifest: CorpusManifest, category,
               target_ratio: float = 0.25) -> CorpusManifest:
    """Duplicate positive train samples until they form target_ratio of
    the train split; validation and test are never touched.

    Duplicates are appended round-robin over the positives in manifest
    order; each copy gets a '#k' id suffix so manifest ids stay unique.
    """
    if not 0 < target_ratio < 1:
        raise ManifestError(f"target_ratio must be in (0,1), got {target_ratio}")
    cat = category_index(category)
    train = manifest.split("train")
    positives = [s for s in train if s.labels[cat]]
    negatives = [s for s in train if not s.labels[cat]]
    if not positives:
        raise ManifestError(f"no positive train samples for {CATEGORIES[cat]}")

    target_pos = _round_half_away(len(negatives) * target_ratio / (1 - target_ratio))
    need = target_pos - len(positives)
    if need <= 0:
        return manifest

    copies: list[Sample] = []
    for i in range(need):
        src = positives[i % len(positives)]
        k = i // len(positives) + 1
        copies.append(replace(src, id=f"{src.id}#{k}"))
    return CorpusManifest(samples=manifest.samples + copies,
                          codebook=manifest.codebook)


# --- batching -------------------------------------------------------------

@dataclass
class BatchTensor:
    pixels: np.ndarray  # N x H x W x 3 uint8, white-padded right/down
    dims: list[tuple[int, int]]  # original (height, width) per member
    ids: list[str] = field(default_factory=list)


def make_batches(images: list[ImageRep], batch_size: int,
                 ids: list[str] | None = None) -> list[BatchTensor]:
    """Group images in order; per batch, pad to the batch max height/width
    with white pixels placed right/down. Original pixels are never altered."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if ids is not None and len(ids) != len(images):
        raise ValueError("ids and images length mismatch")
    batches: list[BatchTensor] = []
    for start in range(0, len(images), batch_size):
        chunk = images[start:start + batch_size]
        h = max(img.height for img in chunk)
        w = max(img.width for img in chunk)
        tensor = np.full((len(chunk), h, w, 3), 255, dtype=np.uint8)
        dims = []
        for i, img in enumerate(chunk):
            tensor[i, :img.height, :img.width] = img.pixels
            dims.append((img.height, img.width))
        batch_ids = ids[start:start + batch_size] if ids is not None else []
        batches.append(BatchTensor(pixels=tensor, dims=dims, ids=list(batch_ids)))
    return batches


# --- raw tensor format ----------------------------------------------------

def export_tensor(batch: BatchTensor) -> bytes:
    n, h, w, c = batch.pixels.shape
    assert c == 3
    return TENSOR_MAGIC + struct.pack("<III", n, h, w) + batch.pixels.tobytes()


def import_tensor(data: bytes) -> BatchTensor:
    if len(data) < 16 or data[:4] != TENSOR_MAGIC:
        raise InputError("bad magic; not a C2I1 tensor file")
    n, h, w = struct.unpack("<III", data[4:16])
    expected = 16 + n * h * w * 3
    if len(data) != expected:
        raise InputError(f"short read: expected {expected} bytes, got {len(data)}")
    pixels = np.frombuffer(data[16:], dtype=np.uint8).reshape(n, h, w, 3).copy()
    return BatchTensor(pixels=pixels, dims=[(h, w)] * n)


def save_tensor(batch: BatchTensor, path):
    with open(path, "wb") as f:
        f.write(export_tensor(batch))


def load_tensor(path) -> BatchTensor:
    with open(path, "rb") as f:
        return import_tensor(f.read())


# --- PNG export -----------------------------------------------------------

def export_png(image: ImageRep, path):
    from PIL import Image

    Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


def import_png(path) -> ImageRep:
    from PIL import Image

    with Image.open(path) as im:
        px = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return ImageRep(pixels=px, meta={"source": str(path)})


# --- evaluation -----------------------------------------------------------

@dataclass
class MetricsReport:
    thresholds: list[float]
    precisions: list[float]
    recalls: list[float]
    best_f1: float
    best_threshold: float
    best_precision: float
    best_recall: float
    mcc: float  # at the best-F1 threshold
    auc: float  # area under the precision-recall curve

    def to_json(self) -> str:
        return json.dumps({
            "best_f1": self.best_f1,
            "best_threshold": self.best_threshold,
            "precision": self.best_precision,
            "recall": self.best_recall,
            "mcc": self.mcc,
            "pr_auc": self.auc,
            "points": len(self.thresholds),
        }, indent=2)

    def pr_csv(self) -> str:
        lines = ["threshold,precision,recall"]
        for t, p, r in zip(self.thresholds, self.precisions, self.recalls):
            lines.append(f"{t},{p},{r}")
        return "\n".join(lines) + "\n"


def _confusion(scores: np.ndarray, labels: np.ndarray, threshold: float):
    pred = scores >= threshold
    tp = int(np.count_nonzero(pred & labels))
    fp = int(np.count_nonzero(pred & ~labels))
    fn = int(np.count_nonzero(~pred & labels))
    tn = int(np.count_nonzero(~pred & ~labels))
    return tp, fp, fn, tn


def _f1(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _mcc(tp, fp, fn, tn) -> float:
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / denom


def metrics_at(scores, labels, threshold: float) -> dict[str, float]:
    """Precision/recall/F1/MCC at one fixed decision threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1 or scores.size == 0:
        raise EvaluationError("scores and labels must be 1-d, same length, non-empty")
    tp, fp, fn, tn = _confusion(scores, labels, threshold)
    p, r, f1 = _f1(tp, fp, fn)
    return {"precision": p, "recall": r, "f1": f1, "mcc": _mcc(tp, fp, fn, tn)}


def evaluate(scores, labels) -> MetricsReport:
    """Threshold sweep over all distinct score values; a sample is
    predicted positive when its score >= threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise EvaluationError("scores and labels must be 1-d and the same length")
    if scores.size == 0:
        raise EvaluationError("no samples to evaluate")
    if np.any((scores < 0) | (scores > 1)):
        raise EvaluationError("scores must lie in [0, 1]")
    if labels.all() or not labels.any():
        raise EvaluationError("labels contain a single class; MCC is undefined")

    thresholds = sorted(set(float(s) for s in scores), reverse=True)
    precisions: list[float] = []
    recalls: list[float] = []
    best = (-1.0, 0.0)  # (f1, threshold)
    best_pr = (0.0, 0.0)
    for t in thresholds:
        tp, fp, fn, tn = _confusion(scores, labels, t)
        p, r, f1 = _f1(tp, fp, fn)
        precisions.append(p)
        recalls.append(r)
        if f1 > best[0]:
            best = (f1, t)
            best_pr = (p, r)

    tp, fp, fn, tn = _confusion(scores, labels, best[1])
    mcc = _mcc(tp, fp, fn, tn)

    # trapezoid over recall; sweep order (descending threshold) gives
    # non-decreasing recall already. The curve is anchored at recall 0 with
    # the strictest threshold's precision so the first segment is counted.
    xs = [0.0] + recalls
    ys = [precisions[0]] + precisions
    auc = sum((xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2
              for i in range(1, len(xs)))

    return MetricsReport(thresholds=thresholds, precisions=precisions,
                         recalls=recalls, best_f1=best[0], best_threshold=best[1],
                         best_precision=best_pr[0], best_recall=best_pr[1],
                         mcc=mcc, auc=auc)
