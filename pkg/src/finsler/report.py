"""Check/Report containers and deterministic serialization.

All verification operations return a `Report`: a list of named checks with a
residual, a tolerance and a pass flag.  Serialization is deterministic
byte-for-byte for a fixed input: floats are printed with 17 significant
digits (round-trip exact), keys keep insertion order, no timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def fmt_float(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    if x != x:
        return "nan"
    if x == float("inf"):
        return "inf"
    if x == float("-inf"):
        return "-inf"
    return format(float(x), ".17g")


def _json_escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def dump_json(obj, indent: int = 0) -> str:
    """Serialize nested dict/list/scalar data to JSON deterministically.

    Unlike ``json.dumps`` this prints every float with 17 significant digits.
    Non-finite floats become null (JSON has no representation for them).
    """
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k, v in obj.items():
            items.append('%s  "%s": %s' % (pad, _json_escape(str(k)), dump_json(v, indent + 1)))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [pad + "  " + dump_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return "null"
        return fmt_float(obj)
    if isinstance(obj, str):
        return '"' + _json_escape(obj) + '"'
    # numpy scalars and anything float-like
    try:
        return dump_json(float(obj), indent)
    except (TypeError, ValueError):
        return '"' + _json_escape(str(obj)) + '"'


@dataclass
class Check:
    """A single named verification: residual against a tolerance."""

    name: str
    residual: float
    tol: float
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(self.residual <= self.tol)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "residual": float(self.residual),
            "tol": float(self.tol),
            "pass": bool(self.passed),
        }


@dataclass
class Report:
    """A titled list of checks plus free-form metadata."""

    title: str
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name: str, residual: float, tol: float, passed: bool | None = None) -> Check:
        c = Check(name, float(residual), float(tol), passed)
        self.checks.append(c)
        return c

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def max_residual(self, prefix: str = "") -> float:
        vals = [c.residual for c in self.checks if c.name.startswith(prefix)]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        d = {"report": self.title, "pass": self.passed}
        if self.meta:
            d["meta"] = dict(self.meta)
        d["checks"] = [c.to_dict() for c in self.checks]
        return d

    def to_json(self) -> str:
        return dump_json(self.to_dict()) + "\n"
