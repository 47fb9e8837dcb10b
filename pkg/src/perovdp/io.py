"""Model files, result files, and canonical serialization.

Model files are JSON with a required ``"schema_version": 1``, a ``kind``
of dp, asset or savings, and a kind-specific ``payload`` (documented in
schemas/model_schema_v1.json).  All emitted JSON and CSV is canonical:
keys sorted, floats printed with 17 significant digits, newline
terminated, so reruns with identical inputs are byte-identical.
"""

import csv
import json
import math

import numpy as np

from .errors import InvalidInputError

SCHEMA_VERSION = 1
MODEL_KINDS = ("dp", "asset", "savings")


def format_float(x):
    """17 significant digits: exact round trip for doubles."""
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        raise InvalidInputError(f"cannot serialize non-finite number {x!r}")
    return format(x, ".17g")


def _canonical(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for n, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InvalidInputError("JSON object keys must be strings")
            if n:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _canonical(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for n, item in enumerate(seq):
            if n:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    else:
        raise InvalidInputError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj):
    """Deterministic JSON text (sorted keys, 17-digit floats, newline)."""
    out = []
    _canonical(obj, out)
    return "".join(out) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))


# ---------------------------------------------------------------------------
# model files


def _require(payload, key, context):
    if key not in payload:
        raise InvalidInputError(f"{context} is missing required key {key!r}")
    return payload[key]


def _number_matrix(raw, context):
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{context} is not a numeric array: {exc}") from None
    return arr


class ModelFile:
    """Parsed model document: kind, the built model object, and metadata."""

    def __init__(self, kind, model, metadata, payload):
        self.kind = kind
        self.model = model
        self.metadata = metadata
        self.payload = payload

    def to_document(self):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "payload": self.payload,
        }
        if self.metadata:
            doc["metadata"] = self.metadata
        return doc


def parse_model_document(doc):
    """Validate and build a model from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise InvalidInputError("model file must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidInputError(
            f"schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise InvalidInputError(f"kind must be one of {MODEL_KINDS}, got {kind!r}")
    payload = _require(doc, "payload", "model file")
    if not isinstance(payload, dict):
        raise InvalidInputError("payload must be a JSON object")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InvalidInputError("metadata must be a JSON object")
    builder = {"dp": _build_dp, "asset": _build_asset, "savings": _build_savings}[kind]
    model = builder(payload)
    return ModelFile(kind, model, metadata, payload)


def load_model_file(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"model file is not valid JSON: {exc}") from None
    return parse_model_document(doc)


def load_matrix_file(path):
    """A bare row-major JSON array of arrays of numbers."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"cannot read matrix file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"matrix file is not valid JSON: {exc}") from None
    arr = _number_matrix(doc, "matrix file")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"matrix file must hold a square matrix, got shape {arr.shape}")
    return arr


def _build_dp(payload):
    from .markov_dp import DPModel

    P = _number_matrix(_require(payload, "P", "dp payload"), "P")
    beta = _number_matrix(_require(payload, "beta", "dp payload"), "beta")
    x_grid = _number_matrix(_require(payload, "x_grid", "dp payload"), "x_grid")
    y_grid = _number_matrix(_require(payload, "y_grid", "dp payload"), "y_grid")
    utility = _number_matrix(_require(payload, "utility", "dp payload"), "utility")
    feasible = np.array(_require(payload, "feasible", "dp payload"), dtype=bool)
    motion = np.array(_require(payload, "motion", "dp payload"), dtype=np.intp)
    return DPModel.from_tables(P, beta, x_grid, y_grid, utility, feasible, motion)


def _build_asset(payload):
    from .asset_pricing import AssetModel

    P = _number_matrix(_require(payload, "P", "asset payload"), "P")
    m = _number_matrix(_require(payload, "m", "asset payload"), "m")
    G = _number_matrix(_require(payload, "G", "asset payload"), "G")
    return AssetModel.create(P, m, G)


def _build_savings(payload):
    from .savings import SavingsModel, ShockDistribution, UtilitySpec, geometric_grid

    P = _number_matrix(_require(payload, "P", "savings payload"), "P")
    shocks_doc = _require(payload, "shocks", "savings payload")
    shocks = ShockDistribution(
        support=_number_matrix(_require(shocks_doc, "support", "shocks"), "support"),
        weights=_number_matrix(_require(shocks_doc, "weights", "shocks"), "weights"),
    )
    beta_t = _number_matrix(_require(payload, "beta_table", "savings payload"), "beta_table")
    R_t = _number_matrix(_require(payload, "R_table", "savings payload"), "R_table")
    Y_t = _number_matrix(_require(payload, "Y_table", "savings payload"), "Y_table")

    util_doc = _require(payload, "utility", "savings payload")
    kind = _require(util_doc, "kind", "utility")
    if kind != "crra":
        raise InvalidInputError(f"utility kind must be 'crra' in model files, got {kind!r}")
    utility = UtilitySpec.crra(float(_require(util_doc, "gamma", "utility")))

    grid_doc = _require(payload, "grid", "savings payload")
    spacing = grid_doc.get("spacing", "geometric")
    lo = float(_require(grid_doc, "min", "grid"))
    hi = float(_require(grid_doc, "max", "grid"))
    pts = int(_require(grid_doc, "points", "grid"))
    if spacing == "geometric":
        grid = geometric_grid(lo, hi, pts)
    elif spacing == "linear":
        grid = np.linspace(lo, hi, pts)
    else:
        raise InvalidInputError(f"grid spacing must be geometric or linear, got {spacing!r}")
    return SavingsModel.create(P, shocks, beta_t, R_t, Y_t, utility, grid)


# ---------------------------------------------------------------------------
# result writers


def write_dp_solution_csv(path, model, V, policy):
    """Columns: state, x_index, x_value, V, y_choice."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "x_index", "x_value", "V", "y_choice"])
        for i in range(model.I):
            for xi in range(model.nx):
                w.writerow([
                    i, xi,
                    format_float(model.x_grid[xi]),
                    format_float(V[i, xi]),
                    format_float(model.y_grid[policy[i, xi]]),
                ])


def write_asset_solution_csv(path, v):
    """Columns: state, v."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "v"])
        for i, value in enumerate(np.asarray(v, dtype=float)):
            w.writerow([i, format_float(value)])


def write_savings_solution_csv(path, model, solution):
    """Columns: state, a, c, f, euler_residual."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "a", "c", "f", "euler_residual"])
        for i in range(model.I):
            for m in range(model.M):
                w.writerow([
                    i,
                    format_float(model.asset_grid[m]),
                    format_float(solution.consumption[i, m]),
                    format_float(solution.marginal[i, m]),
                    format_float(solution.euler_residuals[i, m]),
                ])


def convergence_summary(report):
    return {
        "iterations": report.iterations,
        "terminated": report.terminated,
        "rho": report.rho,
        "kappa": report.kappa,
        "tol": report.tol,
        "error_bound": report.error_bound(),
        "fitted_rate": report.fitted_rate,
        "fitted_constant": report.fitted_constant,
    }
