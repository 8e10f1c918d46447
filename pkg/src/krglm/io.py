"""CSV ingestion and the model artifact format.

Model artifacts are UTF-8 JSON documents::

    {"format": "krglm-model", "format_version": 1,
     "family": "logistic", "kernel": {"name": "polynomial", "degree": 2},
     "lambda": 0.001, "converged": true, "iterations": 6, "objective": ...,
     "n_train": n, "n_features": d, "alpha": [...], "train_X": [[...], ...]}

Every float is written with 17 significant digits so the file round-trips
exactly.
"""

import csv
import json
import math

import numpy as np

from .dataset import Dataset
from .family import get_family
from .kernels import Polynomial, get_kernel
from .solver import FittedModel

MODEL_FORMAT = "krglm-model"
MODEL_VERSION = 1


class InputError(ValueError):
    """Malformed or inconsistent user input."""


def fmt(x):
    """17-significant-digit decimal representation of a float."""
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    return format(x, ".17g")


def read_csv(path, label_col="label", require_label=False):
    """Read a headed, comma-separated numeric table.

    Returns ``(Dataset, feature_names)``. The label column, when present,
    becomes the response vector.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names in header")
    has_label = label_col in header
    if require_label and not has_label:
        raise InputError(f"{path}: no label column {label_col!r} in header")
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise InputError(f"{path}: no data rows")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i} has {len(row)} fields, "
                             f"expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {i}, column {j + 1} "
                                 f"({header[j]!r}): not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}: row {i}, column {j + 1} "
                                 f"({header[j]!r}): non-finite value")
            values[i - 2, j] = v
    features = [h for h in header if h != label_col]
    if not features:
        raise InputError(f"{path}: no feature columns")
    fcols = [header.index(h) for h in features]
    y = values[:, header.index(label_col)] if has_label else None
    return Dataset(values[:, fcols], y), features


def read_vector(path):
    """One number per row; a non-numeric first row is taken as a header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and r[0].strip()]
    out = []
    for i, row in enumerate(rows, start=1):
        try:
            out.append(float(row[-1]))
        except ValueError:
            if i == 1:
                continue
            raise InputError(f"{path}: row {i}: not a number: {row[-1]!r}") from None
    return np.asarray(out)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def _encode(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], (list, tuple)):
            return "[\n" + ",\n".join(pad + _encode(v, indent + 1)
                                      for v in obj) + "\n" + end + "]"
        return "[" + ", ".join(_encode(v, indent) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return json.dumps(obj)


def model_to_dict(model):
    kernel = {"name": model.kernel.name}
    if isinstance(model.kernel, Polynomial):
        kernel["degree"] = model.kernel.degree
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_VERSION,
        "family": model.family.name,
        "kernel": kernel,
        "lambda": float(model.lam),
        "converged": bool(model.converged),
        "iterations": int(model.iterations),
        "objective": float(model.objective),
        "n_train": int(model.train_X.shape[0]),
        "n_features": int(model.train_X.shape[1]),
        "alpha": model.alpha,
        "train_X": model.train_X,
    }


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_encode(model_to_dict(model)) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise InputError(f"{path}: not a krglm model file")
    if doc.get("format_version") != MODEL_VERSION:
        raise InputError(f"{path}: unsupported format version "
                         f"{doc.get('format_version')}")
    kernel = get_kernel(doc["kernel"]["name"], doc["kernel"].get("degree", 2))
    family = get_family(doc["family"])
    X = np.asarray(doc["train_X"], dtype=float).reshape(doc["n_train"],
                                                        doc["n_features"])
    alpha = np.asarray(doc["alpha"], dtype=float)
    return FittedModel(alpha=alpha, train_X=X, kernel=kernel, family=family,
                       lam=float(doc["lambda"]),
                       fitted_scores=kernel.operator(X)(alpha),
                       converged=doc["converged"], iterations=doc["iterations"],
                       objective=float(doc["objective"]))
