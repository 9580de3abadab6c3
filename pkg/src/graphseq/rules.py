"""Two-tier attribute validation rules.

A rule checks an attribute value in two tiers: a syntactic tier (full-string
regular expression match) and a semantic tier (a named predicate such as a
numeric range check). The semantic tier is only evaluated when the syntactic
tier passes. Every rule also bans the reserved field-separator byte 0x1F,
which the codec uses to join multi-slot edge attributes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import SchemaError

SEPARATOR = "\x1f"

# Built-in syntactic patterns (Python regex source, matched with fullmatch).
WINDOWS_EXE_PATTERN = r"^[A-Za-z]:\\(?:[^\\/:*?\"<>|\r\n]+\\)*[^\\/:*?\"<>|\r\n]*\.exe$"
LINUX_EXE_PATTERN = r"^/([^/\0]+/)*[^/\0]+$"
WINDOWS_PATH_PATTERN = r"^[A-Za-z]:\\(?:[^\\/:*?\"<>|\r\n]+\\)*[^\\/:*?\"<>|\r\n]*$"
LINUX_PATH_PATTERN = r"^/([^/\0]+/)*[^/\0]+$"
IP_PORT_PATTERN = r"^(?:\d{1,3}\.){3}\d{1,3}\|\d{1,5}$"
ANY_TEXT_PATTERN = r"(?s)^.*$"


def _ip_port_in_range(text: str) -> bool:
    """Octets must fit in a byte and the port must fit in 16 bits."""
    try:
        addr, port = text.split("|", 1)
        octets = addr.split(".")
    except ValueError:
        return False
    if len(octets) != 4:
        return False
    try:
        ok = all(0 <= int(o) <= 255 for o in octets)
        return ok and 0 <= int(port) <= 65535
    except ValueError:
        return False


SEMANTIC_PREDICATES = {
    "none": lambda text: True,
    "ip-port-range": _ip_port_in_range,
}


@dataclass(frozen=True)
class AttributeCheck:
    """Outcome of a two-tier check; semantic is None when syntactic failed."""

    syntactic: bool
    semantic: bool | None

    @property
    def ok(self) -> bool:
        return self.syntactic and bool(self.semantic)


@dataclass(frozen=True)
class AttributeRule:
    kind: str
    pattern: str
    semantic: str = "none"
    default: str = ""
    _compiled: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.semantic not in SEMANTIC_PREDICATES:
            raise SchemaError(f"unknown semantic predicate {self.semantic!r} for kind {self.kind!r}")
        try:
            compiled = re.compile(self.pattern)
        except re.error as exc:
            raise SchemaError(f"pattern for kind {self.kind!r} does not compile: {exc}") from exc
        object.__setattr__(self, "_compiled", compiled)
        if not self.validate(self.default).ok:
            raise SchemaError(f"default value {self.default!r} fails rule for kind {self.kind!r}")

    def validate(self, text: str) -> AttributeCheck:
        if self._compiled.fullmatch(text) is None:
            return AttributeCheck(False, None)
        semantic = SEPARATOR not in text and SEMANTIC_PREDICATES[self.semantic](text)
        return AttributeCheck(True, semantic)


def validate_attribute(rule: AttributeRule, text: str) -> AttributeCheck:
    return rule.validate(text)


def builtin_rules() -> dict[str, AttributeRule]:
    """Rules for the shipped system-activity attribute kinds."""
    rules = [
        AttributeRule("windows_exe", WINDOWS_EXE_PATTERN, "none", "C:\\Windows\\System32\\cmd.exe"),
        AttributeRule("linux_exe", LINUX_EXE_PATTERN, "none", "/usr/bin/true"),
        AttributeRule("windows_path", WINDOWS_PATH_PATTERN, "none", "C:\\Windows\\Temp\\default"),
        AttributeRule("linux_path", LINUX_PATH_PATTERN, "none", "/tmp/default"),
        AttributeRule("ip_port", IP_PORT_PATTERN, "ip-port-range", "0.0.0.0|0"),
        AttributeRule("free_text", ANY_TEXT_PATTERN, "none", ""),
    ]
    return {rule.kind: rule for rule in rules}


ALWAYS_TRUE_RULE = AttributeRule("any", ANY_TEXT_PATTERN, "none", "")
