"""Plain-text model files.

Every float is written in hexadecimal notation (``float.hex``), so loading
a file reproduces the in-memory model bit for bit.

MLP layout::

    # mlp-v1
    dims 7 16 4 1
    params learning_rate=0x1.0624dd2f1a9fcp-10 max_epochs=2000 ...
    x_mean <hex> ...
    x_scale ...
    y_mean ...
    y_scale ...
    W0 <hex, row-major> ...
    b0 ...

Forest layout::

    # forest-v1
    dims <n_features> <n_classes> <n_trees>
    params n_estimators=100 max_depth=12 ...
    tree <n_nodes>
    <feature> <threshold> <left> <right> <class counts...>   (one line per node)
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from .forest import GiniForestClassifier, Tree
from .mlp import AdamMLPRegressor

MLP_HEADER = "# mlp-v1"
FOREST_HEADER = "# forest-v1"


def _hex(values):
    return " ".join(float(v).hex() for v in np.ravel(values))


def _unhex(tokens):
    return np.array([float.fromhex(t) for t in tokens], dtype=float)


def _format_param(v):
    if isinstance(v, float):
        return v.hex()
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v) or "-"
    return str(v)


def _parse_param(key, text, template):
    current = template.get_params()[key]
    if isinstance(current, tuple):
        return tuple(int(x) for x in text.split(",")) if text != "-" else ()
    if isinstance(current, bool):
        return text == "True"
    if isinstance(current, float):
        return float.fromhex(text)
    if isinstance(current, int):
        return int(text)
    if text == "None":
        return None
    return text


def _params_line(model):
    return "params " + " ".join(
        f"{k}={_format_param(v)}" for k, v in sorted(model.get_params().items())
    )


def _read_params(line, template):
    tokens = line.split()
    if not tokens or tokens[0] != "params":
        raise DomainError("missing params line")
    out = {}
    for tok in tokens[1:]:
        key, _, text = tok.partition("=")
        out[key] = _parse_param(key, text, template)
    return out


def dumps_mlp(model: AdamMLPRegressor) -> str:
    dims = model.layer_dims
    lines = [MLP_HEADER, "dims " + " ".join(map(str, dims)), _params_line(model)]
    for name in ("x_mean_", "x_scale_", "y_mean_", "y_scale_"):
        lines.append(f"{name.rstrip('_')} {_hex(getattr(model, name))}")
    for k, (W, b) in enumerate(zip(model.coefs_, model.intercepts_)):
        lines.append(f"W{k} {_hex(W)}")
        lines.append(f"b{k} {_hex(b)}")
    lines.append(f"loss {float(model.loss_).hex()} {model.n_epochs_}")
    return "\n".join(lines) + "\n"


def loads_mlp(text: str) -> AdamMLPRegressor:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MLP_HEADER:
        raise DomainError("not an mlp-v1 model file")
    dims = [int(t) for t in lines[1].split()[1:]]
    model = AdamMLPRegressor()
    model.set_params(**_read_params(lines[2], model))
    rows = {ln.split()[0]: ln.split()[1:] for ln in lines[3:] if ln.strip()}
    model.x_mean_ = _unhex(rows["x_mean"])
    model.x_scale_ = _unhex(rows["x_scale"])
    model.y_mean_ = _unhex(rows["y_mean"])
    model.y_scale_ = _unhex(rows["y_scale"])
    model.coefs_, model.intercepts_ = [], []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        model.coefs_.append(_unhex(rows[f"W{k}"]).reshape(fan_in, fan_out))
        model.intercepts_.append(_unhex(rows[f"b{k}"]))
    model.loss_ = float.fromhex(rows["loss"][0])
    model.n_epochs_ = int(rows["loss"][1])
    model.n_features_in_ = dims[0]
    model.n_outputs_ = dims[-1]
    return model


def dumps_forest(model: GiniForestClassifier) -> str:
    lines = [
        FOREST_HEADER,
        f"dims {model.n_features_in_} {model.n_classes} {len(model.trees_)}",
        _params_line(model),
    ]
    for tree in model.trees_:
        lines.append(f"tree {tree.n_nodes}")
        for i in range(tree.n_nodes):
            counts = " ".join(str(c) for c in tree.hist[i])
            lines.append(
                f"{tree.feature[i]} {float(tree.threshold[i]).hex()} "
                f"{tree.left[i]} {tree.right[i]} {counts}"
            )
    return "\n".join(lines) + "\n"


def loads_forest(text: str) -> GiniForestClassifier:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FOREST_HEADER:
        raise DomainError("not a forest-v1 model file")
    n_features, n_classes, n_trees = (int(t) for t in lines[1].split()[1:])
    model = GiniForestClassifier()
    model.set_params(**_read_params(lines[2], model))
    pos = 3
    trees = []
    for _ in range(n_trees):
        head = lines[pos].split()
        if head[0] != "tree":
            raise DomainError(f"expected a tree block at line {pos + 1}")
        n_nodes = int(head[1])
        rows = [lines[pos + 1 + i].split() for i in range(n_nodes)]
        pos += 1 + n_nodes
        trees.append(
            Tree(
                np.array([int(r[0]) for r in rows], dtype=np.int64),
                np.array([float.fromhex(r[1]) for r in rows]),
                np.array([int(r[2]) for r in rows], dtype=np.int64),
                np.array([int(r[3]) for r in rows], dtype=np.int64),
                np.array([[int(c) for c in r[4:]] for r in rows], dtype=np.int64).reshape(-1, n_classes),
            )
        )
    model.trees_ = trees
    model.classes_ = np.arange(n_classes)
    model.n_features_in_ = n_features
    return model


def save_model(model, path):
    text = dumps_mlp(model) if isinstance(model, AdamMLPRegressor) else dumps_forest(model)
    with open(path, "w") as fh:
        fh.write(text)


def load_model(path):
    with open(path) as fh:
        text = fh.read()
    if text.startswith(MLP_HEADER):
        return loads_mlp(text)
    if text.startswith(FOREST_HEADER):
        return loads_forest(text)
    raise DomainError(f"{path}: unrecognised model file")
