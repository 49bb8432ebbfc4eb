"""Reading and writing datasets and trained model pairs.

Dataset files:

* ``ratings.csv``: header ``service_id,usage_id,rating``, one integer rating per row.
* ``services.json``: ``{"schema": [...], "services": [{"id", "attributes"}, ...]}``.
* ``usages.json``: ``[{"id", "metadata", "avg_duration_minutes"}, ...]``.
* ``sessions.json`` (optional): ``[{"service_id", "usages", "rating"}, ...]``.
* ``ground_truth.json`` (generator output only).

A model directory holds ``meta.json`` plus one JSON file per network. Floats
are written with ``repr`` precision, so every round trip is bit-exact.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import (
    CATEGORICAL,
    NUMERIC,
    AttributeSchema,
    AttributeSpec,
    Dataset,
    RatingRecord,
    ServiceProfile,
    Session,
    UsageProfile,
)
from ..errors import InvalidDataset, ParseError, VersionMismatch
from ..models import MetadataVocabulary, TrainedModelPair
from ..nnet import Network
from .generator import GroundTruth

FORMAT_VERSION = 1
RATINGS_HEADER = ("service_id", "usage_id", "rating")
META_FILE = "meta.json"
SERVICE_MODEL_FILE = "service_model.json"
USAGE_MODEL_FILE = "usage_model.json"


@dataclass(frozen=True)
class DatasetPaths:
    ratings: Path
    services: Path
    usages: Path
    sessions: Path | None = None
    ground_truth: Path | None = None

    @classmethod
    def in_dir(cls, directory, sessions: bool = True, ground_truth: bool = True) -> "DatasetPaths":
        """The conventional file names inside ``directory``."""
        d = Path(directory)
        return cls(
            d / "ratings.csv",
            d / "services.json",
            d / "usages.json",
            d / "sessions.json" if sessions else None,
            d / "ground_truth.json" if ground_truth else None,
        )


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _field(obj, key, where: str, kinds=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing field {key!r}", where)
    value = obj[key]
    if kinds is not None and (isinstance(value, bool) and bool not in kinds or not isinstance(value, kinds)):
        raise ParseError(f"field {key!r} has type {type(value).__name__}", where)
    return value


# schema


def schema_to_json(schema: AttributeSchema) -> list[dict]:
    out = []
    for a in schema.attributes:
        entry: dict = {"name": a.name, "kind": a.kind}
        if a.kind == CATEGORICAL:
            entry["categories"] = list(a.categories)
        else:
            entry["bounds"] = list(a.bounds)
        out.append(entry)
    return out


def schema_from_json(obj, where: str) -> AttributeSchema:
    if not isinstance(obj, list):
        raise ParseError("schema must be a list of attribute declarations", where)
    specs = []
    for i, entry in enumerate(obj):
        loc = f"{where} schema[{i}]"
        name = _field(entry, "name", loc, (str,))
        kind = _field(entry, "kind", loc, (str,))
        try:
            if kind == CATEGORICAL:
                cats = _field(entry, "categories", loc, (list,))
                specs.append(AttributeSpec(name, kind, tuple(cats)))
            elif kind == NUMERIC:
                bounds = _field(entry, "bounds", loc, (list,))
                if len(bounds) != 2:
                    raise ParseError("bounds must be [lo, hi]", loc)
                specs.append(AttributeSpec(name, kind, bounds=(bounds[0], bounds[1])))
            else:
                raise ParseError(f"unknown kind {kind!r}", loc)
        except ParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), loc) from None
    try:
        return AttributeSchema(tuple(specs))
    except ValueError as exc:
        raise ParseError(str(exc), f"{where} schema") from None


# dataset


def _read_ratings(path) -> list[RatingRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RATINGS_HEADER:
            raise ParseError(f"header must be {','.join(RATINGS_HEADER)}", f"{path} row 1")
        for row in reader:
            loc = f"{path} row {reader.line_num}"
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", loc)
            sid, uid, raw = (c.strip() for c in row)
            try:
                rating = int(raw)
            except ValueError:
                raise ParseError(f"rating {raw!r} is not an integer", f"{loc} field rating") from None
            records.append(RatingRecord(sid, uid, rating))
    return records


def load_services(path) -> tuple[AttributeSchema, list[ServiceProfile]]:
    obj = _read_json(path)
    where = str(path)
    schema = schema_from_json(_field(obj, "schema", where, (list,)), where)
    services = []
    for i, entry in enumerate(_field(obj, "services", where, (list,))):
        loc = f"{where} services[{i}]"
        sid = _field(entry, "id", loc, (str,))
        attrs = _field(entry, "attributes", loc, (dict,))
        services.append(
            ServiceProfile(
                sid,
                dict(attrs),
                entry.get("owner", ""),
                entry.get("device", ""),
                tuple(entry.get("functions", ())),
                dict(entry.get("qos", {})),
            )
        )
    return schema, services


def load_usages(path) -> list[UsageProfile]:
    obj = _read_json(path)
    where = str(path)
    if not isinstance(obj, list):
        raise ParseError("expected a list of usages", where)
    usages = []
    for i, entry in enumerate(obj):
        loc = f"{where} usages[{i}]"
        uid = _field(entry, "id", loc, (str,))
        words = _field(entry, "metadata", loc, (list,))
        if not all(isinstance(w, str) for w in words):
            raise ParseError("metadata words must be strings", f"{loc} field metadata")
        dur = _field(entry, "avg_duration_minutes", loc, (int, float))
        usages.append(UsageProfile(uid, frozenset(words), dur))
    return usages


def _read_sessions(path) -> list[Session]:
    obj = _read_json(path)
    where = str(path)
    if not isinstance(obj, list):
        raise ParseError("expected a list of sessions", where)
    out = []
    for i, entry in enumerate(obj):
        loc = f"{where} sessions[{i}]"
        usages = _field(entry, "usages", loc, (list,))
        out.append(
            Session(
                _field(entry, "service_id", loc, (str,)),
                tuple(usages),
                _field(entry, "rating", loc, (int,)),
            )
        )
    return out


def load_dataset(paths: DatasetPaths, validate: bool = True) -> Dataset:
    """Parse the dataset files; raises :class:`InvalidDataset` if validation finds problems."""
    schema, services = load_services(paths.services)
    usages = load_usages(paths.usages)
    ratings = _read_ratings(paths.ratings)
    sessions = _read_sessions(paths.sessions) if paths.sessions is not None and os.path.exists(paths.sessions) else []
    ds = Dataset(schema, tuple(services), tuple(usages), tuple(ratings), tuple(sessions))
    if validate:
        report = ds.validate()
        if not report.ok:
            raise InvalidDataset(report)
    return ds


def _service_json(s: ServiceProfile) -> dict:
    out: dict = {"id": s.id, "attributes": dict(s.attributes)}
    # optional descriptive fields only when set, keeping files small
    if s.owner:
        out["owner"] = s.owner
    if s.device:
        out["device"] = s.device
    if s.functions:
        out["functions"] = list(s.functions)
    if s.qos:
        out["qos"] = dict(s.qos)
    return out


def save_dataset(dataset: Dataset, paths: DatasetPaths, truth: GroundTruth | None = None) -> None:
    """Write ``dataset`` (and ``truth`` when a ground-truth path is given)."""
    with open(paths.ratings, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATINGS_HEADER)
        for r in dataset.ratings:
            w.writerow((r.service_id, r.usage_id, int(r.rating)))
    _write_json(
        paths.services,
        {"schema": schema_to_json(dataset.schema), "services": [_service_json(s) for s in dataset.services]},
    )
    _write_json(
        paths.usages,
        [{"id": u.id, "metadata": sorted(u.metadata), "avg_duration_minutes": u.avg_duration_minutes} for u in dataset.usages],
    )
    if paths.sessions is not None:
        _write_json(
            paths.sessions,
            [{"service_id": s.service_id, "usages": list(s.usages), "rating": int(s.rating)} for s in dataset.sessions],
        )
    if paths.ground_truth is not None and truth is not None:
        _write_json(paths.ground_truth, truth.to_json())


def load_ground_truth(path) -> GroundTruth:
    obj = _read_json(path)
    try:
        return GroundTruth.from_json(obj)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed ground truth ({exc})", str(path)) from None


# models


def _network_json(net: Network) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.ravel(order="C").tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "hidden_activation": net.hidden_activation,
        "output_activation": net.output_activation,
        "seed": net.seed,
    }


def _check_version(obj, where: str) -> None:
    version = _field(obj, "format_version", where, (int,))
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{where}: format version {version}, this build reads {FORMAT_VERSION}")


def _network_from_json(obj, where: str) -> Network:
    _check_version(obj, where)
    sizes = _field(obj, "layer_sizes", where, (list,))
    weights = _field(obj, "weights", where, (list,))
    biases = _field(obj, "biases", where, (list,))
    if len(sizes) < 2 or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in sizes):
        raise ParseError("layer_sizes must be at least two positive integers", f"{where} field layer_sizes")
    if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
        raise ParseError("need one weight list and one bias list per layer transition", where)
    ws, bs = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = np.asarray(weights[i], dtype=float)
        b = np.asarray(biases[i], dtype=float)
        if w.ndim != 1 or w.size != fan_in * fan_out:
            raise ParseError(f"layer {i} has {w.size} weights, expected {fan_in * fan_out}", f"{where} field weights[{i}]")
        if b.shape != (fan_out,):
            raise ParseError(f"layer {i} has {b.size} biases, expected {fan_out}", f"{where} field biases[{i}]")
        ws.append(w.reshape(fan_out, fan_in))
        bs.append(b)
    try:
        return Network(
            tuple(sizes),
            ws,
            bs,
            _field(obj, "hidden_activation", where, (str,)),
            _field(obj, "output_activation", where, (str,)),
            int(obj.get("seed", 0)),
        )
    except ValueError as exc:
        raise ParseError(str(exc), where) from None


def save_model_pair(pair: TrainedModelPair, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_json(
        d / META_FILE,
        {
            "format_version": FORMAT_VERSION,
            "indicator_count": pair.indicator_count,
            "seed": pair.seed,
            "vocabulary": list(pair.vocabulary.words),
            "schema": schema_to_json(pair.schema),
        },
    )
    _write_json(d / SERVICE_MODEL_FILE, _network_json(pair.service_model))
    _write_json(d / USAGE_MODEL_FILE, _network_json(pair.usage_model))


def load_model_pair(directory) -> TrainedModelPair:
    d = Path(directory)
    meta_path = d / META_FILE
    meta = _read_json(meta_path)
    _check_version(meta, str(meta_path))
    schema = schema_from_json(_field(meta, "schema", str(meta_path), (list,)), str(meta_path))
    try:
        vocabulary = MetadataVocabulary(tuple(_field(meta, "vocabulary", str(meta_path), (list,))))
    except ValueError as exc:
        raise ParseError(str(exc), f"{meta_path} field vocabulary") from None
    service_model = _network_from_json(_read_json(d / SERVICE_MODEL_FILE), str(d / SERVICE_MODEL_FILE))
    usage_model = _network_from_json(_read_json(d / USAGE_MODEL_FILE), str(d / USAGE_MODEL_FILE))
    try:
        return TrainedModelPair(
            service_model,
            usage_model,
            schema,
            vocabulary,
            _field(meta, "indicator_count", str(meta_path), (int,)),
            _field(meta, "seed", str(meta_path), (int,)),
        )
    except ValueError as exc:
        raise ParseError(str(exc), str(d)) from None
