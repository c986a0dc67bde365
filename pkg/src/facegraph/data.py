"""Dataset containers, file formats, synthetic data and plotting exports.

A dataset is a JSON manifest plus optional side files: per-sample feature
blobs (float32 little-endian with a 16-byte header) and PGM images. Landmarks
and labels live inline in the manifest. The synthetic generator produces
deterministic, verifiably separable desk-scale datasets, either with
precomputed features or with rendered images for patch-size experiments.

Feature blob layout (little endian): 4-byte magic ``FGF1``, uint32 version,
uint32 row count, uint32 dimension, then rows * dimension float32 values in
row-major order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DatasetError,
    DimensionMismatchError,
    InvalidInputError,
    ManifestParseError,
    MissingFileError,
)
from .features import EncoderConfig, features_for_sample, read_pgm, write_pgm
from .graphs import GraphSample, build_graph, edge_count
from .gcn import GcnModel, graph_embedding, predict

__all__ = [
    "Dataset",
    "SampleRecord",
    "SyntheticSpec",
    "dataset_graphs",
    "export_embeddings",
    "generate_synthetic",
    "generate_synthetic_imageset",
    "load_dataset",
    "read_feature_blob",
    "save_dataset",
    "split_indices",
    "write_feature_blob",
    "write_graph_dot",
    "write_graph_json",
]

MANIFEST_FORMAT = "facegraph-dataset"
MANIFEST_VERSION = 1
FEATURE_MAGIC = b"FGF1"
FEATURE_VERSION = 1

# Conventional emotion class names; datasets with more classes fall back to
# generic names.
EXPRESSION_NAMES = ("anger", "disgust", "fear", "happy", "sad", "surprise", "neutral")

IMAGE_SIZE = 224
CIRCLE_RADIUS = 50.0
CIRCLE_CENTER = (112.0, 112.0)


@dataclass
class SampleRecord:
    sample_id: str
    label: int
    landmarks: np.ndarray            # N x 2 float64
    features: np.ndarray | None      # N x d float32, or None when image-backed
    image_path: str | None = None


@dataclass
class Dataset:
    class_names: list[str]
    feature_dim: int
    landmark_count: int
    samples: list[SampleRecord] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the deterministic synthetic generator."""

    num_classes: int = 6
    samples_per_class: int = 40
    landmark_count: int = 12
    feature_dim: int = 16
    geometry_displacement_scale: float = 12.0
    feature_noise_scale: float = 0.25
    seed: int = 1000

    def __post_init__(self):
        if min(self.num_classes, self.samples_per_class, self.landmark_count,
               self.feature_dim) < 1:
            raise InvalidInputError("all synthetic counts must be positive")
        if self.geometry_displacement_scale < 0 or self.feature_noise_scale < 0:
            raise InvalidInputError("synthetic noise scales must be >= 0")


def write_feature_blob(path, features: np.ndarray) -> None:
    array = np.ascontiguousarray(features, dtype="<f4")
    if array.ndim != 2:
        raise InvalidInputError("feature blob payload must be 2-D")
    with open(path, "wb") as handle:
        handle.write(FEATURE_MAGIC)
        handle.write(struct.pack("<III", FEATURE_VERSION, array.shape[0], array.shape[1]))
        handle.write(array.tobytes())


def read_feature_blob(path) -> np.ndarray:
    with open(path, "rb") as handle:
        header = handle.read(16)
        if len(header) != 16 or header[:4] != FEATURE_MAGIC:
            raise DatasetError(f"{path}: not a feature blob")
        version, rows, dim = struct.unpack("<III", header[4:])
        if version != FEATURE_VERSION:
            raise DatasetError(f"{path}: unsupported feature blob version {version}")
        payload = handle.read(4 * rows * dim)
    if len(payload) != 4 * rows * dim:
        raise DatasetError(f"{path}: feature blob truncated")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()


def _class_names(num_classes: int) -> list[str]:
    if num_classes <= len(EXPRESSION_NAMES):
        return list(EXPRESSION_NAMES[:num_classes])
    return [f"class_{c}" for c in range(num_classes)]


def _circle_template(n: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([CIRCLE_CENTER[0] + CIRCLE_RADIUS * np.cos(angles),
                            CIRCLE_CENTER[1] + CIRCLE_RADIUS * np.sin(angles)])


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.sqrt((matrix * matrix).sum(axis=1, keepdims=True))
    return matrix / np.maximum(norms, 1e-12)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministic feature-backed dataset with class structure.

    Each class gets a fixed displacement pattern applied to a circular
    landmark template and one unit feature prototype per landmark. Samples
    add per-sample landmark jitter (a tenth of the displacement scale, so
    zero scales mean identical samples) and feature noise, then the feature
    rows are re-normalized and quantized to float32 so that writing and
    reloading the dataset is bitwise faithful.
    """
    rng = np.random.default_rng(spec.seed)
    template = _circle_template(spec.landmark_count)
    class_geometry = rng.normal(size=(spec.num_classes, spec.landmark_count, 2))
    class_prototypes = np.stack([
        _unit_rows(rng.normal(size=(spec.landmark_count, spec.feature_dim)))
        for _ in range(spec.num_classes)
    ])

    samples = []
    jitter_scale = 0.1 * spec.geometry_displacement_scale
    for label in range(spec.num_classes):
        base = template + spec.geometry_displacement_scale * class_geometry[label]
        for k in range(spec.samples_per_class):
            jitter = rng.normal(size=(spec.landmark_count, 2)) * jitter_scale
            noise = rng.normal(size=(spec.landmark_count, spec.feature_dim))
            feats = _unit_rows(class_prototypes[label] + spec.feature_noise_scale * noise)
            samples.append(SampleRecord(
                sample_id=f"s{k:03d}_c{label}",
                label=label,
                landmarks=base + jitter,
                features=feats.astype(np.float32),
            ))
    return Dataset(class_names=_class_names(spec.num_classes),
                   feature_dim=spec.feature_dim,
                   landmark_count=spec.landmark_count,
                   samples=samples)


def _render_image(landmarks: np.ndarray, amplitudes: np.ndarray,
                  size: int = IMAGE_SIZE, sigma: float = 6.0) -> np.ndarray:
    """Grayscale image with one Gaussian blob per landmark."""
    img = np.full((size, size), 30.0)
    reach = int(3 * sigma)
    for (x, y), amp in zip(landmarks, amplitudes):
        cx, cy = int(round(x)), int(round(y))
        x0, x1 = max(0, cx - reach), min(size, cx + reach + 1)
        y0, y1 = max(0, cy - reach), min(size, cy + reach + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        ys = np.arange(y0, y1)[:, None]
        xs = np.arange(x0, x1)[None, :]
        img[y0:y1, x0:x1] += amp * np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2 * sigma ** 2))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_synthetic_imageset(spec: SyntheticSpec):
    """Image-backed variant for patch-size experiments.

    Returns (dataset, images) where images maps sample_id to a rendered PGM
    array; the dataset carries no precomputed features, so downstream code
    encodes patches. The class signal is the per-landmark blob brightness.
    """
    rng = np.random.default_rng(spec.seed)
    template = _circle_template(spec.landmark_count)
    class_geometry = rng.normal(size=(spec.num_classes, spec.landmark_count, 2))
    amplitudes = rng.uniform(60.0, 220.0, size=(spec.num_classes, spec.landmark_count))

    samples = []
    images = {}
    jitter_scale = 0.1 * spec.geometry_displacement_scale
    for label in range(spec.num_classes):
        base = template + spec.geometry_displacement_scale * class_geometry[label]
        for k in range(spec.samples_per_class):
            jitter = rng.normal(size=(spec.landmark_count, 2)) * jitter_scale
            landmarks = base + jitter
            sample_id = f"s{k:03d}_c{label}"
            samples.append(SampleRecord(
                sample_id=sample_id, label=label, landmarks=landmarks,
                features=None, image_path=f"images/{sample_id}.pgm",
            ))
            images[sample_id] = _render_image(landmarks, amplitudes[label])
    dataset = Dataset(class_names=_class_names(spec.num_classes),
                      feature_dim=spec.feature_dim,
                      landmark_count=spec.landmark_count,
                      samples=samples)
    return dataset, images


def save_dataset(dataset: Dataset, out_dir, images: dict | None = None,
                 feature_storage: str = "blob") -> Path:
    """Write manifest.json plus feature blobs / PGM images; returns the manifest path."""
    if feature_storage not in ("blob", "inline"):
        raise InvalidInputError("feature_storage must be 'blob' or 'inline'")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    sample_docs = []
    for sample in dataset.samples:
        doc = {
            "sample_id": sample.sample_id,
            "label": int(sample.label),
            "landmarks": np.asarray(sample.landmarks, dtype=float).tolist(),
            "features": None,
            "image": None,
        }
        if sample.features is not None:
            if feature_storage == "inline":
                doc["features"] = np.asarray(sample.features, dtype=np.float32).tolist()
            else:
                rel = f"features/{sample.sample_id}.fgf"
                (root / "features").mkdir(exist_ok=True)
                write_feature_blob(root / rel, sample.features)
                doc["features"] = rel
        if sample.image_path is not None:
            rel = sample.image_path
            if images is not None and sample.sample_id in images:
                target = root / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                write_pgm(target, images[sample.sample_id])
            doc["image"] = rel
        sample_docs.append(doc)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "class_names": list(dataset.class_names),
        "feature_dim": int(dataset.feature_dim),
        "landmark_count": int(dataset.landmark_count),
        "samples": sample_docs,
    }
    manifest_path = root / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, sort_keys=True, indent=1)
        handle.write("\n")
    return manifest_path


def _manifest_path(path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    return p


def load_dataset(path) -> Dataset:
    """Parse and fully validate a dataset manifest.

    Errors name the offending sample: label out of range, wrong landmark
    count, wrong feature dimension, or a missing side file each raise a
    distinct exception type.
    """
    manifest_path = _manifest_path(path)
    if not manifest_path.exists():
        raise MissingFileError(f"manifest not found: {manifest_path}")
    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise ManifestParseError(f"{manifest_path}: not a {MANIFEST_FORMAT} manifest")
    if doc.get("version") != MANIFEST_VERSION:
        raise ManifestParseError(f"{manifest_path}: unsupported version {doc.get('version')}")
    try:
        class_names = [str(n) for n in doc["class_names"]]
        feature_dim = int(doc["feature_dim"])
        landmark_count = int(doc["landmark_count"])
        sample_docs = doc["samples"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParseError(f"{manifest_path}: missing or malformed field ({exc})") from exc

    root = manifest_path.parent
    num_classes = len(class_names)
    samples = []
    for entry in sample_docs:
        sid = str(entry.get("sample_id", f"#{len(samples)}"))
        try:
            label = int(entry["label"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestParseError(f"sample {sid!r}: missing or bad label") from exc
        if not 0 <= label < num_classes:
            raise DatasetError(
                f"sample {sid!r}: label {label} outside [0, {num_classes})"
            )
        try:
            landmarks = np.asarray(entry["landmarks"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestParseError(f"sample {sid!r}: malformed landmarks") from exc
        if landmarks.shape != (landmark_count, 2):
            raise DimensionMismatchError(
                f"sample {sid!r}: landmarks shape {landmarks.shape}, "
                f"expected ({landmark_count}, 2)"
            )
        if not np.all(np.isfinite(landmarks)):
            raise DatasetError(f"sample {sid!r}: non-finite landmark coordinates")

        feature_entry = entry.get("features")
        image_entry = entry.get("image")
        if feature_entry is None and image_entry is None:
            raise DatasetError(f"sample {sid!r}: needs features or an image")

        features = None
        if feature_entry is not None:
            if isinstance(feature_entry, str):
                blob_path = root / feature_entry
                if not blob_path.exists():
                    raise MissingFileError(f"sample {sid!r}: missing feature file {blob_path}")
                features = read_feature_blob(blob_path)
            else:
                try:
                    features = np.asarray(feature_entry, dtype=np.float32)
                except (TypeError, ValueError) as exc:
                    raise ManifestParseError(
                        f"sample {sid!r}: malformed inline features") from exc
            if features.shape != (landmark_count, feature_dim):
                raise DimensionMismatchError(
                    f"sample {sid!r}: features shape {features.shape}, "
                    f"expected ({landmark_count}, {feature_dim})"
                )

        image_path = None
        if image_entry is not None:
            image_file = root / str(image_entry)
            if not image_file.exists():
                raise MissingFileError(f"sample {sid!r}: missing image file {image_file}")
            image_path = str(image_file)

        samples.append(SampleRecord(sample_id=sid, label=label, landmarks=landmarks,
                                    features=features, image_path=image_path))
    return Dataset(class_names=class_names, feature_dim=feature_dim,
                   landmark_count=landmark_count, samples=samples)


def dataset_graphs(dataset: Dataset, tau: float, patch_size=(30, 30),
                   encoder: EncoderConfig | None = None):
    """Build one graph per sample; returns [(sample_id, GraphSample), ...].

    Precomputed features take precedence; image-backed samples are encoded
    with the toy patch encoder at the given patch size.
    """
    encoder = encoder or EncoderConfig()
    pairs = []
    for sample in dataset.samples:
        if sample.features is not None:
            feats = np.asarray(sample.features, dtype=float)
        elif sample.image_path is not None:
            image = read_pgm(sample.image_path)
            feats = features_for_sample(image, sample.landmarks,
                                        patch_size[0], patch_size[1], encoder)
        else:
            raise DatasetError(f"sample {sample.sample_id!r}: no features and no image")
        pairs.append((sample.sample_id,
                      build_graph(sample.landmarks, feats, tau, sample.label)))
    return pairs


def split_indices(dataset: Dataset, test_fraction: float, seed: int,
                  mode: str = "random"):
    """Deterministic train/test split.

    ``random`` splits stratified per class; ``subject`` keeps whole subjects
    (the sample_id prefix before the first underscore) on one side.
    """
    if not 0.0 <= test_fraction < 1.0:
        raise InvalidInputError("test_fraction must lie in [0, 1)")
    if mode not in ("random", "subject"):
        raise InvalidInputError(f"unknown split mode {mode!r}")
    n = len(dataset.samples)
    rng = np.random.default_rng(seed)
    test: list[int] = []
    if mode == "random":
        by_class: dict[int, list[int]] = {}
        for idx, sample in enumerate(dataset.samples):
            by_class.setdefault(sample.label, []).append(idx)
        for label in sorted(by_class):
            indices = np.array(by_class[label])
            rng.shuffle(indices)
            n_test = int(round(test_fraction * len(indices)))
            if test_fraction > 0.0:
                n_test = min(max(n_test, 1), len(indices) - 1)
            test.extend(indices[:n_test].tolist())
    else:
        subjects: dict[str, list[int]] = {}
        for idx, sample in enumerate(dataset.samples):
            subjects.setdefault(sample.sample_id.split("_", 1)[0], []).append(idx)
        names = sorted(subjects)
        rng.shuffle(names)
        target = test_fraction * n
        taken = 0
        for name in names:
            if taken >= target or taken + len(subjects[name]) >= n:
                break
            test.extend(subjects[name])
            taken += len(subjects[name])
    test_set = set(test)
    train = [i for i in range(n) if i not in test_set]
    return train, sorted(test_set)


def export_embeddings(model: GcnModel, graph_pairs, path) -> None:
    """CSV with sample_id, true and predicted label, then the readout embedding."""
    ids = [sid for sid, _ in graph_pairs]
    samples = [g for _, g in graph_pairs]
    predictions, _ = predict(model, samples)
    dim = model.config.hidden_dim
    header = ["sample_id", "label", "prediction"] + [f"dim_{k}" for k in range(dim)]
    lines = [",".join(header)]
    for sid, sample, pred in zip(ids, samples, predictions):
        emb = graph_embedding(model, sample)
        values = [sid, str(sample.label), str(int(pred))] + [repr(float(v)) for v in emb]
        lines.append(",".join(values))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _edge_list(sample: GraphSample):
    adj = np.asarray(sample.adjacency)
    n = adj.shape[0]
    return [(i, j) for i in range(n) for j in range(i + 1, n) if adj[i, j]]


def write_graph_json(sample: GraphSample, path) -> None:
    """Plotter-friendly node/edge description of one graph."""
    doc = {
        "format": "facegraph-graph",
        "version": 1,
        "label": int(sample.label),
        "num_nodes": sample.num_nodes,
        "num_edges": edge_count(sample.adjacency),
        "nodes": [{"id": i, "x": float(x), "y": float(y)}
                  for i, (x, y) in enumerate(np.asarray(sample.landmarks, dtype=float))],
        "edges": [[i, j] for i, j in _edge_list(sample)],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, indent=1)
        handle.write("\n")


def write_graph_dot(sample: GraphSample, path) -> None:
    """Graphviz rendering of one graph; node positions carry pixel coordinates."""
    lines = ["graph landmarks {", "  node [shape=point];"]
    for i, (x, y) in enumerate(np.asarray(sample.landmarks, dtype=float)):
        lines.append(f'  n{i} [pos="{x},{y}!"];')
    for i, j in _edge_list(sample):
        lines.append(f"  n{i} -- n{j};")
    lines.append("}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
