"""Prompt template grammar and deterministic prompt compilation.

Templates are flat text with placeholder slots: ``{name}`` is optional,
``{name!}`` is required, ``{{`` and ``}}`` escape literal braces. Parsing
is lossless (serializing the tokens reproduces the source byte-for-byte)
and compilation is a pure function of (template, attributes).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .errors import MissingAttribute, TemplateParseError, UnknownPlaceholder

# Placeholder vocabulary: the attribute fields plus the joined feature list.
PLACEHOLDER_FIELDS = frozenset(
    {
        "site_name",
        "structural_type",
        "primary_material",
        "scale_elements",
        "decorative_features",
        "illumination",
        "features_joined",
    }
)

LIST_JOINER = ", "

DEFAULT_TEMPLATE_ID = "default"


@dataclass(frozen=True)
class AttributeSet:
    """Architectural attributes extracted for one site."""

    site_name: str = ""
    structural_type: str = ""
    primary_material: str = ""
    scale_elements: tuple[str, ...] = ()
    decorative_features: tuple[str, ...] = ()
    illumination: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scale_elements", tuple(self.scale_elements))
        object.__setattr__(self, "decorative_features", tuple(self.decorative_features))

    def value_for(self, field_name: str) -> str:
        """Render the value substituted for a placeholder (lists joined)."""
        if field_name == "features_joined":
            return LIST_JOINER.join(self.scale_elements + self.decorative_features)
        if field_name not in PLACEHOLDER_FIELDS:
            raise UnknownPlaceholder(f"unknown attribute field {field_name!r}")
        value = getattr(self, field_name)
        if isinstance(value, tuple):
            return LIST_JOINER.join(value)
        return value

    def digest(self) -> str:
        """Content hash of the canonical serialization."""
        canonical = json.dumps(
            {
                "site_name": self.site_name,
                "structural_type": self.structural_type,
                "primary_material": self.primary_material,
                "scale_elements": list(self.scale_elements),
                "decorative_features": list(self.decorative_features),
                "illumination": self.illumination,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Placeholder:
    field_name: str
    required: bool = False


Token = Literal | Placeholder


@dataclass(frozen=True)
class PromptTemplate:
    source_text: str
    tokens: tuple[Token, ...]

    def placeholders(self) -> list[Placeholder]:
        return [t for t in self.tokens if isinstance(t, Placeholder)]


@dataclass(frozen=True)
class PromptText:
    text: str
    template_id: str
    attr_digest: str

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "template_id": self.template_id,
            "attr_digest": self.attr_digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptText":
        return cls(d["text"], d["template_id"], d["attr_digest"])


def parse_template(source: str) -> PromptTemplate:
    """Parse template source into an alternating literal/placeholder stream.

    Stray unescaped braces are rejected so that every parseable template
    round-trips losslessly through serialize_template.
    """
    tokens: list[Token] = []
    buf: list[str] = []
    i = 0
    n = len(source)

    def flush():
        if buf:
            tokens.append(Literal("".join(buf)))
            buf.clear()

    while i < n:
        c = source[i]
        if c == "{":
            if i + 1 < n and source[i + 1] == "{":
                buf.append("{")
                i += 2
                continue
            end = source.find("}", i + 1)
            if end == -1:
                raise TemplateParseError(f"unterminated placeholder at offset {i}")
            name = source[i + 1:end]
            required = name.endswith("!")
            if required:
                name = name[:-1]
            if not name:
                raise TemplateParseError(f"empty placeholder name at offset {i}")
            if name not in PLACEHOLDER_FIELDS:
                raise UnknownPlaceholder(
                    f"unknown field {name!r}; expected one of "
                    + ", ".join(sorted(PLACEHOLDER_FIELDS))
                )
            flush()
            tokens.append(Placeholder(name, required))
            i = end + 1
        elif c == "}":
            if i + 1 < n and source[i + 1] == "}":
                buf.append("}")
                i += 2
                continue
            raise TemplateParseError(f"stray '}}' at offset {i}")
        else:
            buf.append(c)
            i += 1
    flush()
    return PromptTemplate(source_text=source, tokens=tuple(tokens))


def serialize_template(template: PromptTemplate) -> str:
    """Inverse of parse_template: reproduces the source byte-for-byte."""
    parts = []
    for token in template.tokens:
        if isinstance(token, Literal):
            parts.append(token.text.replace("{", "{{").replace("}", "}}"))
        else:
            bang = "!" if token.required else ""
            parts.append("{" + token.field_name + bang + "}")
    return "".join(parts)


def compile_prompt(
    template: PromptTemplate,
    attrs: AttributeSet,
    template_id: str = DEFAULT_TEMPLATE_ID,
) -> PromptText:
    """Substitute attributes into the template. Deterministic and byte-stable."""
    parts = []
    for token in template.tokens:
        if isinstance(token, Literal):
            parts.append(token.text)
            continue
        value = attrs.value_for(token.field_name)
        if token.required and not value:
            raise MissingAttribute(
                f"required attribute {token.field_name!r} is empty"
            )
        parts.append(value)
    return PromptText(
        text="".join(parts),
        template_id=template_id,
        attr_digest=attrs.digest(),
    )


@dataclass(frozen=True)
class Issue:
    kind: str  # missing_required | empty_optional | unused
    field_name: str

    def __str__(self) -> str:
        return f"{self.kind}({self.field_name})"


# Which template references "cover" which attribute fields. features_joined
# consumes both list fields.
_COVERS = {
    "features_joined": {"scale_elements", "decorative_features"},
}


def lint_attributes(attrs: AttributeSet, template: PromptTemplate) -> list[Issue]:
    """Report missing required, empty optional, and unused attribute fields."""
    issues: list[Issue] = []
    referenced: set[str] = set()
    for ph in template.placeholders():
        referenced.add(ph.field_name)
        referenced |= _COVERS.get(ph.field_name, set())
        value = attrs.value_for(ph.field_name)
        if not value:
            kind = "missing_required" if ph.required else "empty_optional"
            issues.append(Issue(kind, ph.field_name))
    attr_fields = sorted(PLACEHOLDER_FIELDS - {"features_joined"})
    for name in attr_fields:
        if name not in referenced and attrs.value_for(name):
            issues.append(Issue("unused", name))
    return issues


def default_template_source() -> str:
    """The shipped template: Table-style context paragraph with slots."""
    return (
        resources.files("heritage3d.data")
        .joinpath("default.prompt")
        .read_text(encoding="utf-8")
    )


def default_template() -> PromptTemplate:
    return parse_template(default_template_source())
