"""Experiment configuration: flat ``dotted.key = value`` text.

Grammar (one statement per line)::

    line    := blank | comment | key "=" value [comment]
    comment := "#" ...
    key     := name ("." name)*        name := [A-Za-z_][A-Za-z0-9_]*
    value   := scalar | "[" [scalar ("," scalar)*] "]"
    scalar  := Python literal (number, 'string', "string", True/False/None)
             | bare word                (taken as a string, e.g. singular, out/run1)

Keys may repeat neither verbatim nor with different spacing.  A key can be
both a value and a prefix: ``fields.A = singular`` names the family and
``fields.A.gamma = 1.5`` sets one of its parameters.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path

from .fields import AssumptionConstants, FieldSet, make_fields
from .grid import Grid, build_grid
from .operator import AbsorbingLayerConfig

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config"]

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
_WORD = re.compile(r"^[A-Za-z_./][A-Za-z0-9_\-+./]*$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


def _strip_comment(text: str) -> str:
    quote = None
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return text[:i]
    return text


def _scalar(text: str):
    try:
        v = ast.literal_eval(text)
    except (ValueError, SyntaxError):
        if not _WORD.match(text):
            raise ValueError(text) from None
        return text
    if isinstance(v, (list, tuple, dict, set)):
        raise ValueError(text)
    return v


def _value(text: str):
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_scalar(part.strip()) for part in inner.split(",")]
    return _scalar(text)


def parse_config(text: str) -> tuple[dict, dict]:
    """Return (values, line numbers) keyed by dotted key."""
    values: dict = {}
    lines: dict = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", no)
        key, _, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if not _KEY.match(key):
            raise ConfigError(f"malformed key {key!r}", no)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", no, key)
        if not val:
            raise ConfigError("missing value", no, key)
        try:
            values[key] = _value(val)
        except ValueError:
            raise ConfigError(f"cannot parse value {val!r}", no, key) from None
        lines[key] = no
    return values, lines


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass
class ExperimentConfig:
    values: dict
    lines: dict = field(default_factory=dict)
    path: str = "<string>"

    # ------------------------------------------------------------- access
    def get(self, key: str, default=None, kind=None):
        if key not in self.values:
            return default
        v = self.values[key]
        if kind is not None:
            try:
                if kind is float and isinstance(v, bool):
                    raise TypeError
                v = kind(v)
            except (TypeError, ValueError):
                raise ConfigError(f"expected {kind.__name__}, got {v!r}", self.lines.get(key), key) from None
        return v

    def require(self, key: str, kind=None):
        if key not in self.values:
            raise ConfigError(f"required key missing in {self.path}", None, key)
        return self.get(key, kind=kind)

    def floats(self, key: str, default=None, required: bool = False) -> list[float]:
        if required:
            self.require(key)
        if key not in self.values:
            return list(default or [])
        out = []
        for v in _as_list(self.values[key]):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"expected number(s), got {v!r}", self.lines.get(key), key)
            out.append(float(v))
        return out

    def section(self, prefix: str) -> dict:
        """Parameters under ``prefix.`` (one level), literal values only."""
        pre = prefix + "."
        return {k[len(pre):]: v for k, v in self.values.items() if k.startswith(pre) and "." not in k[len(pre):]}

    # ------------------------------------------------------------- builders
    def grid(self) -> Grid:
        try:
            return build_grid(self.require("grid.d", int), self.require("grid.L", float),
                              self.require("grid.n", int), bool(self.get("grid.offset", True)))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), self.lines.get("grid.n"), "grid") from None

    def constants(self) -> AssumptionConstants:
        c = self.section("constants")
        allowed = {"r0", "mu", "c", "alpha", "cstar", "c_div"}
        for k in c:
            if k not in allowed:
                raise ConfigError(f"unknown constant (allowed: {sorted(allowed)})",
                                  self.lines.get(f"constants.{k}"), f"constants.{k}")
        return AssumptionConstants(**{k: (None if v is None else float(v)) for k, v in c.items()})

    def fields(self, d: int) -> FieldSet:
        specs = {}
        for name in ("A", "V1", "V2"):
            fam = self.get(f"fields.{name}", "zero")
            if not isinstance(fam, str):
                raise ConfigError("family must be a name", self.lines.get(f"fields.{name}"), f"fields.{name}")
            specs[name] = {"family": fam, **self.section(f"fields.{name}")}
        try:
            return make_fields(d, specs["A"], specs["V1"], specs["V2"], self.constants())
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), None, "fields") from None

    def layer(self) -> AbsorbingLayerConfig:
        p = self.section("layer")
        try:
            return AbsorbingLayerConfig(float(p.get("width", 0.25)), float(p.get("strength", 8.0)),
                                        int(p.get("order", 2)))
        except ValueError as exc:
            raise ConfigError(str(exc), None, "layer") from None

    def source(self) -> tuple[str, dict]:
        kind = self.get("source", "gaussian")
        return kind, self.section("source")

    @property
    def out_dir(self) -> str:
        return str(self.get("output.dir", "out"))

    @property
    def formats(self) -> list[str]:
        return [str(x) for x in _as_list(self.get("output.formats", ["csv", "svg"]))]


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    values, lines = parse_config(text)
    return ExperimentConfig(values, lines, str(path))
