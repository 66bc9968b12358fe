"""Binary interchange format: dataset manifests, matrix payloads, selection outputs.

A dataset is a small key/value manifest plus headerless binary payloads:
32-bit little-endian floats, row-major, with all shape metadata in the
manifest.  Gold labels, when present, are 32-bit little-endian integers.
Declared shapes must match file byte lengths exactly; probability rows are
validated (sum within 1e-5 of 1, no negative entries) but never modified,
so matrices are returned exactly as stored on disk.

Selection results are written as JSON (indent 2) and round-trip bit for
bit: floats serialize via the shortest repr that reparses to the same
value, and infinities use the JSON extension literals.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .errors import (
    DuplicateIndex,
    IoFailure,
    LabelsInvalid,
    ManifestInvalid,
    MissingFile,
    ParamsInvalid,
    ProbRowInvalid,
    SizeMismatch,
)
from .metrics import SelectionReport
from .params import HyperParams

PROB_ROW_TOL = 1e-5

_MANIFEST_KEYS = {"n", "d", "c", "dtype", "layout", "embedding_path", "prob_path",
                  "raw_prob_path", "labels_path"}


@dataclass(frozen=True)
class Manifest:
    """Shape metadata and payload locations for one dataset."""

    n: int
    d: int
    c: int
    dtype: str
    layout: str
    embedding_path: str
    prob_path: str
    raw_prob_path: str | None = None
    labels_path: str | None = None


@dataclass
class DatasetMatrices:
    """Validated, immutable in-memory view of one dataset.

    embeddings: (n, d) float32, unitless coordinates.
    class_probs: (n, c) float32 probabilities, rows sum to 1 within 1e-5.
    raw_label_probs: optional (n, c) float32, entries in [0, 1], not
        normalized across classes.
    gold_labels: optional (n,) int32 in [0, c).
    """

    n: int
    d: int
    c: int
    embeddings: np.ndarray
    class_probs: np.ndarray
    raw_label_probs: np.ndarray | None = None
    gold_labels: np.ndarray | None = None


@dataclass
class SelectionOutput:
    """Final result of a selection run.

    per_cluster maps cluster id to the sample selected from that cluster;
    config_echo is the complete hyperparameter set that produced the run,
    run_info carries any CLI-level resolved settings (audit trail).
    """

    selected: list[int]
    per_cluster: dict[int, int]
    iterations_run: int
    config_echo: HyperParams
    metrics: SelectionReport | None = None
    run_info: dict | None = None


def _parse_kv_lines(text: str, path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ManifestInvalid(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in out:
            raise ManifestInvalid(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_manifest(path: str) -> Manifest:
    """Parse and structurally validate a manifest file."""
    if not os.path.isfile(path):
        raise MissingFile(f"manifest not found: {path}")
    kv = _parse_kv_lines(_read_text(path), path)
    unknown = set(kv) - _MANIFEST_KEYS
    if unknown:
        raise ManifestInvalid(f"{path}: unknown keys {sorted(unknown)}")
    for req in ("n", "d", "c", "dtype", "layout", "embedding_path", "prob_path"):
        if req not in kv:
            raise ManifestInvalid(f"{path}: missing key {req!r}")
    try:
        n, d, c = int(kv["n"]), int(kv["d"]), int(kv["c"])
    except ValueError as exc:
        raise ManifestInvalid(f"{path}: n/d/c must be integers: {exc}") from None
    if n < 1 or d < 1 or c < 2:
        raise ManifestInvalid(f"{path}: require n >= 1, d >= 1, c >= 2, got n={n} d={d} c={c}")
    if kv["dtype"] != "f32le":
        raise ManifestInvalid(f"{path}: unsupported dtype {kv['dtype']!r} (only f32le)")
    if kv["layout"] != "row-major":
        raise ManifestInvalid(f"{path}: unsupported layout {kv['layout']!r} (only row-major)")
    return Manifest(
        n=n, d=d, c=c, dtype=kv["dtype"], layout=kv["layout"],
        embedding_path=kv["embedding_path"], prob_path=kv["prob_path"],
        raw_prob_path=kv.get("raw_prob_path"), labels_path=kv.get("labels_path"),
    )


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _read_binary(path: str, dtype: str, shape: tuple[int, ...], what: str) -> np.ndarray:
    if not os.path.isfile(path):
        raise MissingFile(f"{what} file not found: {path}")
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    actual = os.path.getsize(path)
    if actual != expected:
        raise SizeMismatch(
            f"{what} file {path}: expected {expected} bytes for shape {shape}, found {actual}"
        )
    arr = np.fromfile(path, dtype=dtype).reshape(shape)
    arr.flags.writeable = False
    return arr


def _validate_prob_rows(probs: np.ndarray) -> None:
    neg = np.nonzero((probs < 0).any(axis=1))[0]
    sums = probs.sum(axis=1, dtype=np.float64)
    bad = np.nonzero(np.abs(sums - 1.0) > PROB_ROW_TOL)[0]
    first_neg = int(neg[0]) if neg.size else None
    first_bad = int(bad[0]) if bad.size else None
    if first_neg is not None and (first_bad is None or first_neg <= first_bad):
        raise ProbRowInvalid(first_neg, "negative probability entry")
    if first_bad is not None:
        raise ProbRowInvalid(first_bad, f"row sum {sums[first_bad]:.8f} outside 1 +/- {PROB_ROW_TOL}")


def load_dataset(manifest_path: str) -> DatasetMatrices:
    """Load and validate the dataset referenced by a manifest.

    Matrices are returned exactly as stored (no renormalization) and are
    marked read-only, so they are safe to share across threads.
    """
    man = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    embeddings = _read_binary(resolve(man.embedding_path), "<f4", (man.n, man.d), "embedding")
    class_probs = _read_binary(resolve(man.prob_path), "<f4", (man.n, man.c), "class_probs")
    _validate_prob_rows(class_probs)

    raw = None
    if man.raw_prob_path is not None:
        raw = _read_binary(resolve(man.raw_prob_path), "<f4", (man.n, man.c), "raw_label_probs")
        bad = np.nonzero(((raw < 0) | (raw > 1)).any(axis=1))[0]
        if bad.size:
            raise ProbRowInvalid(int(bad[0]), "raw label probability outside [0, 1]")

    labels = None
    if man.labels_path is not None:
        labels = _read_binary(resolve(man.labels_path), "<i4", (man.n,), "gold_labels")
        if labels.size and (labels.min() < 0 or labels.max() >= man.c):
            raise LabelsInvalid(
                f"gold labels must lie in [0, {man.c}), found range "
                f"[{int(labels.min())}, {int(labels.max())}]"
            )

    return DatasetMatrices(
        n=man.n, d=man.d, c=man.c,
        embeddings=embeddings, class_probs=class_probs,
        raw_label_probs=raw, gold_labels=labels,
    )


def write_dataset(data: DatasetMatrices, out_dir: str, stem: str = "dataset") -> str:
    """Write matrices plus manifest into out_dir; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    names = {
        "embedding_path": f"{stem}.embeddings.f32",
        "prob_path": f"{stem}.class_probs.f32",
    }
    try:
        np.ascontiguousarray(data.embeddings, dtype="<f4").tofile(
            os.path.join(out_dir, names["embedding_path"]))
        np.ascontiguousarray(data.class_probs, dtype="<f4").tofile(
            os.path.join(out_dir, names["prob_path"]))
        if data.raw_label_probs is not None:
            names["raw_prob_path"] = f"{stem}.raw_label_probs.f32"
            np.ascontiguousarray(data.raw_label_probs, dtype="<f4").tofile(
                os.path.join(out_dir, names["raw_prob_path"]))
        if data.gold_labels is not None:
            names["labels_path"] = f"{stem}.gold_labels.i32"
            np.ascontiguousarray(data.gold_labels, dtype="<i4").tofile(
                os.path.join(out_dir, names["labels_path"]))
        manifest_path = os.path.join(out_dir, f"{stem}.manifest")
        lines = [f"n = {data.n}", f"d = {data.d}", f"c = {data.c}",
                 "dtype = f32le", "layout = row-major"]
        lines += [f"{key} = {value}" for key, value in names.items()]
        with open(manifest_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write dataset to {out_dir}: {exc}") from exc
    return manifest_path


def validate_selection(out: SelectionOutput) -> None:
    if out.config_echo.budget < 1:
        raise ParamsInvalid("budget must be >= 1")
    if len(out.selected) != out.config_echo.budget:
        raise ParamsInvalid(
            f"selected has {len(out.selected)} indices, budget is {out.config_echo.budget}")
    if len(set(out.selected)) != len(out.selected):
        raise DuplicateIndex(f"selected indices contain duplicates: {out.selected}")
    if any(i < 0 for i in out.selected):
        raise ParamsInvalid("selected indices must be nonnegative")
    if sorted(out.per_cluster.values()) != sorted(out.selected):
        raise ParamsInvalid("per_cluster values do not match selected")


def write_selection(out: SelectionOutput, path: str) -> None:
    """Validate then write a selection result; see load_selection for the inverse."""
    validate_selection(out)
    doc = {
        "selected": [int(i) for i in out.selected],
        "per_cluster": {str(k): int(v) for k, v in out.per_cluster.items()},
        "iterations_run": int(out.iterations_run),
        "config_echo": asdict(out.config_echo),
        "metrics": asdict(out.metrics) if out.metrics is not None else None,
        "run_info": out.run_info,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write selection to {path}: {exc}") from exc


def load_selection(path: str) -> SelectionOutput:
    if not os.path.isfile(path):
        raise MissingFile(f"selection file not found: {path}")
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"{path}: not valid selection JSON: {exc}") from None
    metrics = None
    if doc.get("metrics") is not None:
        metrics = SelectionReport(**doc["metrics"])
    return SelectionOutput(
        selected=[int(i) for i in doc["selected"]],
        per_cluster={int(k): int(v) for k, v in doc["per_cluster"].items()},
        iterations_run=int(doc["iterations_run"]),
        config_echo=HyperParams(**doc["config_echo"]),
        metrics=metrics,
        run_info=doc.get("run_info"),
    )


# Stage artifacts: float64 payloads used to chain CLI subcommands without
# losing precision relative to the in-process pipeline.

def write_array_artifact(path: str, arr: np.ndarray, kind: str,
                         extra: dict[str, str] | None = None) -> None:
    arr64 = np.ascontiguousarray(arr, dtype="<f8")
    try:
        arr64.tofile(path)
        lines = [f"kind = {kind}", f"dtype = f64le",
                 f"shape = {'x'.join(str(s) for s in arr64.shape)}"]
        for key, value in (extra or {}).items():
            lines.append(f"{key} = {value}")
        with open(path + ".meta", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write artifact {path}: {exc}") from exc


def read_array_artifact(path: str, expect_kind: str | None = None) -> tuple[np.ndarray, dict[str, str]]:
    meta_path = path + ".meta"
    if not os.path.isfile(path):
        raise MissingFile(f"artifact not found: {path}")
    if not os.path.isfile(meta_path):
        raise MissingFile(f"artifact sidecar not found: {meta_path}")
    meta = _parse_kv_lines(_read_text(meta_path), meta_path)
    if expect_kind is not None and meta.get("kind") != expect_kind:
        raise ManifestInvalid(
            f"{path}: artifact kind {meta.get('kind')!r}, expected {expect_kind!r}")
    shape = tuple(int(s) for s in meta["shape"].split("x"))
    expected = int(np.prod(shape)) * 8
    actual = os.path.getsize(path)
    if actual != expected:
        raise SizeMismatch(f"artifact {path}: expected {expected} bytes, found {actual}")
    arr = np.fromfile(path, dtype="<f8").reshape(shape)
    arr.flags.writeable = False
    return arr, meta
