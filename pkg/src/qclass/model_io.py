"""Binary model files and the on-disk layout of a trained classifier.

One file holds one model. Layout: 4-byte magic ``QCNN``, 1-byte format
version, uint32 little-endian header length, a JSON header (sorted keys),
then every parameter tensor concatenated as little-endian float64 in the
header's manifest order. A full two-tier classifier is a directory of seven
such files: ``tier1.qcnn`` plus ``tier2-<coarse>.qcnn`` for each category.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DEFAULT_TAXONOMY, LabelTaxonomy
from .errors import ModelFormatError
from .hierarchy import TwoTierClassifier
from .network import ConvFilterBank, DenseLayer, QcnnModel, parameters

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "LoadedModel",
    "save_model",
    "load_model",
    "save_classifier",
    "load_classifier",
    "classifier_file_names",
]

MAGIC = b"QCNN"
FORMAT_VERSION = 1

_PAYLOAD_DTYPE = "<f8"


@dataclass(repr=False)
class LoadedModel:
    """A deserialized model plus the metadata stored alongside it."""

    model: QcnnModel
    kind: str
    taxonomy: LabelTaxonomy
    max_len: int
    coarse: str | None = None

    def __repr__(self) -> str:
        return f"LoadedModel(kind={self.kind!r}, coarse={self.coarse!r})"


def _header_dict(model: QcnnModel, kind: str, taxonomy: LabelTaxonomy, max_len: int, coarse):
    manifest = []
    offset = 0
    for name, tensor in parameters(model).items():
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset += tensor.size * 8
    return {
        "kind": kind,
        "coarse": coarse,
        "max_len": max_len,
        "taxonomy": {
            "coarse": list(taxonomy.coarse),
            "fine": {c: list(taxonomy.fine_labels(c)) for c in taxonomy.coarse},
        },
        "hyperparameters": {
            "embedding_dim": model.embedding_dim,
            "class_count": model.class_count,
            "pool_size": model.pool_size,
            "dropout_p": model.dropout_p,
            "conv_activation": model.conv_activation,
            "heights": list(model.heights),
            "filters": [bank.filter_count for bank in model.banks],
            "hidden": model.fc1.out_size,
        },
        "tensors": manifest,
        "payload_bytes": offset,
    }


def save_model(
    path,
    model: QcnnModel,
    *,
    kind: str,
    taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY,
    max_len: int = 40,
    coarse: str | None = None,
) -> None:
    """Write one model to ``path``.

    ``kind`` is ``"tier1"`` or ``"tier2"``; tier-2 files must name their
    coarse category. The byte stream is a pure function of the model and
    metadata, so identical models produce identical files.
    """
    if kind not in ("tier1", "tier2"):
        raise ValueError(f"kind must be 'tier1' or 'tier2', got {kind!r}")
    if kind == "tier2":
        if coarse not in taxonomy.coarse:
            raise ValueError(f"tier2 model needs a valid coarse category, got {coarse!r}")
    elif coarse is not None:
        raise ValueError("tier1 model must not name a coarse category")
    header = _header_dict(model, kind, taxonomy, max_len, coarse)
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(bytes([FORMAT_VERSION]))
        handle.write(struct.pack("<I", len(header_bytes)))
        handle.write(header_bytes)
        for tensor in parameters(model).values():
            handle.write(np.ascontiguousarray(tensor, dtype=_PAYLOAD_DTYPE).tobytes())


def _read_exact(handle, count: int, path, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise ModelFormatError(f"{path}: truncated file while reading {what}")
    return data


def load_model(path) -> LoadedModel:
    """Read a model file written by save_model; every failure is named."""
    path = Path(path)
    with path.open("rb") as handle:
        magic = _read_exact(handle, 4, path, "magic")
        if magic != MAGIC:
            raise ModelFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version = _read_exact(handle, 1, path, "version")[0]
        if version != FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported format version {version}, "
                f"expected {FORMAT_VERSION}"
            )
        (header_len,) = struct.unpack("<I", _read_exact(handle, 4, path, "header length"))
        try:
            header = json.loads(_read_exact(handle, header_len, path, "header"))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: header is not valid JSON: {exc}") from None
        payload = handle.read()

    try:
        expected_bytes = header["payload_bytes"]
        manifest = header["tensors"]
        hyper = header["hyperparameters"]
        tax = header["taxonomy"]
        kind = header["kind"]
        coarse = header["coarse"]
        max_len = header["max_len"]
    except KeyError as exc:
        raise ModelFormatError(f"{path}: header is missing key {exc}") from None
    if len(payload) != expected_bytes:
        raise ModelFormatError(
            f"{path}: payload length mismatch: {len(payload)} bytes on disk, "
            f"header says {expected_bytes}"
        )

    tensors: dict[str, np.ndarray] = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = entry["offset"]
        end = start + size * 8
        if end > len(payload):
            raise ModelFormatError(
                f"{path}: tensor {entry['name']} extends past the payload"
            )
        flat = np.frombuffer(payload[start:end], dtype=_PAYLOAD_DTYPE)
        tensors[entry["name"]] = flat.reshape(shape).astype(np.float64)

    try:
        taxonomy = LabelTaxonomy(
            coarse=tuple(tax["coarse"]),
            fine={c: tuple(v) for c, v in tax["fine"].items()},
        )
        banks = [
            ConvFilterBank(
                height=h,
                kernels=tensors[f"conv{h}.kernels"],
                biases=tensors[f"conv{h}.biases"],
            )
            for h in hyper["heights"]
        ]
        model = QcnnModel(
            embedding_dim=hyper["embedding_dim"],
            class_count=hyper["class_count"],
            pool_size=hyper["pool_size"],
            dropout_p=hyper["dropout_p"],
            conv_activation=hyper["conv_activation"],
            banks=banks,
            fc1=DenseLayer(tensors["fc1.weights"], tensors["fc1.biases"]),
            fc2=DenseLayer(tensors["fc2.weights"], tensors["fc2.biases"]),
            out=DenseLayer(tensors["out.weights"], tensors["out.biases"]),
        )
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"{path}: inconsistent model header: {exc}") from None
    return LoadedModel(model=model, kind=kind, taxonomy=taxonomy, max_len=max_len, coarse=coarse)


def classifier_file_names(taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY) -> list[str]:
    """The seven file names a saved classifier directory contains."""
    return ["tier1.qcnn"] + [f"tier2-{c.lower()}.qcnn" for c in taxonomy.coarse]


def save_classifier(directory, classifier: TwoTierClassifier) -> None:
    """Write the seven model files of a two-tier classifier to a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    taxonomy = classifier.taxonomy
    save_model(
        directory / "tier1.qcnn",
        classifier.tier1,
        kind="tier1",
        taxonomy=taxonomy,
        max_len=classifier.max_len,
    )
    for coarse in taxonomy.coarse:
        save_model(
            directory / f"tier2-{coarse.lower()}.qcnn",
            classifier.tier2[coarse],
            kind="tier2",
            taxonomy=taxonomy,
            max_len=classifier.max_len,
            coarse=coarse,
        )


def load_classifier(directory) -> TwoTierClassifier:
    """Read a classifier directory; all seven files must agree on taxonomy."""
    directory = Path(directory)
    tier1_loaded = load_model(directory / "tier1.qcnn")
    if tier1_loaded.kind != "tier1":
        raise ModelFormatError(
            f"{directory / 'tier1.qcnn'}: expected a tier1 model, "
            f"got kind {tier1_loaded.kind!r}"
        )
    taxonomy = tier1_loaded.taxonomy
    tier2: dict[str, QcnnModel] = {}
    for coarse in taxonomy.coarse:
        file_path = directory / f"tier2-{coarse.lower()}.qcnn"
        loaded = load_model(file_path)
        if loaded.kind != "tier2" or loaded.coarse != coarse:
            raise ModelFormatError(
                f"{file_path}: expected a tier2 model for {coarse}, "
                f"got kind {loaded.kind!r} coarse {loaded.coarse!r}"
            )
        if loaded.taxonomy != taxonomy:
            raise ModelFormatError(
                f"{file_path}: taxonomy does not match tier1.qcnn"
            )
        if loaded.max_len != tier1_loaded.max_len:
            raise ModelFormatError(
                f"{file_path}: max_len {loaded.max_len} does not match "
                f"tier1.qcnn max_len {tier1_loaded.max_len}"
            )
        tier2[coarse] = loaded.model
    return TwoTierClassifier(
        taxonomy=taxonomy,
        tier1=tier1_loaded.model,
        tier2=tier2,
        max_len=tier1_loaded.max_len,
    )
