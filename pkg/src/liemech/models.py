"""Model files and the built-in catalog.

A model is a YAML (or JSON) document with these fields::

    name:                 str
    parameters:           {NAME: real}           # substituted before parsing
    base:                 {dim: int, coords: [str, ...]}
    rank:                 int
    fiber_coords:         [str, ...]             # length = rank
    structure_functions:  [{alpha, beta, gamma, expr}, ...]   # 1-based, sparse
    anchor:               [[expr, ...], ...]     # rank rows of dim entries
    lagrangians:          {NAME: expr}
    sections:             {NAME: [expr, ...]}    # functions of base coords
    one_forms:            {NAME: [expr, ...]}
    functions_on_M:       {NAME: expr}

A structure entry ``{alpha: a, beta: b, gamma: g, expr: e}`` sets
``[e_a, e_b] = ... + e * e_g``; the ``(b, a)`` entry is filled in with
``-e``.  Giving both orders with values that are not negatives of each
other is an error.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .algebroid import LieAlgebroid, OneForm, Section, ValidationReport, validate
from .dynamics import LagrangianSystem
from .symbolics import Expr, ExprError, SampleDomain, parse

__all__ = [
    "SchemaError", "ModelValidationError", "Model", "CATALOG", "catalog_names",
    "load", "load_document", "dump",
]

FIELDS = ("name", "parameters", "base", "rank", "fiber_coords", "structure_functions",
          "anchor", "lagrangians", "sections", "one_forms", "functions_on_M")


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ModelValidationError(ValueError):
    def __init__(self, model_name: str, report: ValidationReport):
        lines = ", ".join(f"{k}={c.residual:.3e}" for k, c in report.checks.items() if not c.passed)
        super().__init__(f"model {model_name!r} failed validation ({lines})")
        self.report = report


def catalog_names() -> list[str]:
    root = resources.files("liemech") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


CATALOG = tuple(catalog_names())


@dataclass
class Model:
    name: str
    document: dict
    parameters: dict[str, float]
    algebroid: LieAlgebroid
    lagrangians: dict[str, Expr] = field(default_factory=dict)
    sections: dict[str, Section] = field(default_factory=dict)
    one_forms: dict[str, OneForm] = field(default_factory=dict)
    functions: dict[str, Expr] = field(default_factory=dict)
    report: ValidationReport | None = None
    validated: bool = True

    def parse(self, text: str) -> Expr:
        return parse(text, self.algebroid.variables, self.parameters)

    def parse_base(self, text: str) -> Expr:
        return parse(text, self.algebroid.base_coords, self.parameters)

    def lagrangian(self, ref: str) -> Expr:
        """A named Lagrangian, or an expression if ``ref`` is not a name."""
        return self.lagrangians[ref] if ref in self.lagrangians else self.parse(ref)

    def system(self, ref: str = "L") -> LagrangianSystem:
        return LagrangianSystem(self.algebroid, self.lagrangian(ref), name=ref)

    def section(self, ref: str) -> Section:
        if ref in self.sections:
            return self.sections[ref]
        return Section(tuple(self.parse_base(s) for s in _split(ref)))

    def one_form(self, ref: str) -> OneForm:
        if ref in self.one_forms:
            return self.one_forms[ref]
        return OneForm(tuple(self.parse_base(s) for s in _split(ref)))

    def function(self, ref: str) -> Expr:
        return self.functions[ref] if ref in self.functions else self.parse_base(ref)


def _split(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    parts.append(cur)
    return [p.strip() for p in parts]


def _require(doc: Mapping, key: str, kind, path: str = ""):
    if key not in doc:
        raise SchemaError(path + key, "missing field")
    value = doc[key]
    if not isinstance(value, kind):
        raise SchemaError(path + key, f"expected {getattr(kind, '__name__', kind)}")
    return value


def _expr_text(value, path: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise SchemaError(path, "expected an expression string")
    return str(value)


def _parse_at(text, variables, params, path) -> Expr:
    try:
        return parse(_expr_text(text, path), variables, params)
    except ExprError as exc:
        raise SchemaError(path, str(exc)) from None


def _structure(doc: dict, p: int, base: tuple[str, ...], params) -> list:
    zero = "0"
    entries: dict[tuple[int, int, int], tuple[str, Expr]] = {}
    for k, item in enumerate(doc.get("structure_functions") or []):
        path = f"structure_functions[{k}]"
        if not isinstance(item, Mapping):
            raise SchemaError(path, "expected a mapping")
        idx = []
        for key in ("alpha", "beta", "gamma"):
            v = _require(item, key, int, path + ".")
            if not 1 <= v <= p:
                raise SchemaError(f"{path}.{key}", f"index out of range 1..{p}")
            idx.append(v - 1)
        a, b, g = idx
        e = _parse_at(item.get("expr", zero), base, params, path + ".expr")
        if a == b and not e.is_zero():
            raise SchemaError(path, "diagonal entries must vanish")
        for key, val in (((a, b, g), e), ((b, a, g), -e)):
            if key in entries and entries[key][1] != val:
                raise SchemaError(path, f"inconsistent antisymmetric entries for C[{a + 1},{b + 1},{g + 1}]")
            entries[key] = (path, val)
    C = [[[parse(zero)] * p for _ in range(p)] for _ in range(p)]
    for (a, b, g), (_, e) in entries.items():
        C[a][b][g] = e
    return C


def load_document(doc: Mapping, overrides: Mapping[str, float] | None = None,
                  force: bool = False, domain: SampleDomain | None = None) -> Model:
    if not isinstance(doc, Mapping):
        raise SchemaError("<root>", "expected a mapping")
    unknown = set(doc) - set(FIELDS)
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    doc = copy.deepcopy(dict(doc))
    name = str(_require(doc, "name", str))
    params = {}
    for k, v in (doc.get("parameters") or {}).items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"parameters.{k}", "expected a real number")
        params[str(k)] = float(v)
    for k, v in (overrides or {}).items():
        if k not in params:
            raise SchemaError(f"parameters.{k}", "unknown parameter")
        params[k] = float(v)
    doc["parameters"] = params

    base_doc = _require(doc, "base", Mapping)
    dim = _require(base_doc, "dim", int, "base.")
    base = tuple(str(c) for c in _require(base_doc, "coords", list, "base."))
    if len(base) != dim:
        raise SchemaError("base.coords", f"expected {dim} names")
    p = _require(doc, "rank", int)
    fiber = tuple(str(c) for c in _require(doc, "fiber_coords", list))
    if len(fiber) != p:
        raise SchemaError("fiber_coords", f"expected {p} names")
    clash = set(params) & set(base + fiber)
    if clash:
        raise SchemaError("parameters", f"names clash with coordinates: {sorted(clash)}")

    C = _structure(doc, p, base, params)
    anchor_doc = _require(doc, "anchor", list)
    if len(anchor_doc) != p:
        raise SchemaError("anchor", f"expected {p} rows")
    rho = []
    for a, row in enumerate(anchor_doc):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError(f"anchor[{a}]", f"expected {dim} entries")
        rho.append([_parse_at(v, base, params, f"anchor[{a}][{i}]") for i, v in enumerate(row)])
    algebroid = LieAlgebroid(base, fiber, C, rho, name)

    variables = base + fiber
    lagrangians = {str(k): _parse_at(v, variables, params, f"lagrangians.{k}")
                   for k, v in (doc.get("lagrangians") or {}).items()}

    def vectors(key: str, cls):
        out = {}
        for k, comps in (doc.get(key) or {}).items():
            if not isinstance(comps, list) or len(comps) != p:
                raise SchemaError(f"{key}.{k}", f"expected {p} components")
            out[str(k)] = cls(tuple(_parse_at(v, base, params, f"{key}.{k}[{i}]")
                                    for i, v in enumerate(comps)))
        return out

    functions = {str(k): _parse_at(v, base, params, f"functions_on_M.{k}")
                 for k, v in (doc.get("functions_on_M") or {}).items()}
    report = validate(algebroid, domain)
    if not report.passed and not force:
        raise ModelValidationError(name, report)
    return Model(name, doc, params, algebroid, lagrangians, vectors("sections", Section),
                 vectors("one_forms", OneForm), functions, report, report.passed)


def load(source: str | Path, overrides: Mapping[str, float] | None = None,
         force: bool = False, domain: SampleDomain | None = None) -> Model:
    """Load a model from a file path or a catalog name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in CATALOG:
        text = (resources.files("liemech") / "catalog" / f"{source}.yaml").read_text()
    else:
        raise FileNotFoundError(f"no model file or catalog entry named {str(source)!r}")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<root>", f"not valid YAML: {exc}") from None
    return load_document(doc, overrides, force, domain)


def dump(model: Model) -> str:
    """Serialise a model back to the schema (parameters are kept symbolic)."""
    doc = {k: model.document[k] for k in FIELDS if k in model.document}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def to_plain(value: Any):
    """Convert report objects to YAML-safe builtins."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, Expr):
        return str(value)
    if hasattr(value, "item"):
        return value.item()
    return value
