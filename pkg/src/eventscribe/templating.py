"""Section-based logic-less template engine.

Supports ``{{variable}}`` substitution, ``{{#section}}...{{/section}}``
blocks emitted when the binding is truthy, and ``{{^section}}...{{/section}}``
inverted blocks emitted when it is falsy or absent. Variables substitute
verbatim; a reachable variable with no binding is a render error (a present
but empty value is fine and renders as the empty string).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union


class TemplateParseError(ValueError):
    pass


class RenderError(KeyError):
    def __init__(self, variable: str):
        super().__init__(variable)
        self.variable = variable

    def __str__(self) -> str:
        return f"no binding for template variable {self.variable!r}"


_TAG = re.compile(r"\{\{([#^/]?)\s*([A-Za-z0-9_.]+)\s*\}\}")


@dataclass(frozen=True)
class _Var:
    name: str


@dataclass(frozen=True)
class _Section:
    name: str
    inverted: bool
    children: tuple["Node", ...]


Node = Union[str, _Var, _Section]


def _parse(body: str) -> tuple[Node, ...]:
    root: list[Node] = []
    stack: list[tuple[str, bool, list[Node]]] = []
    current = root
    pos = 0
    for match in _TAG.finditer(body):
        if match.start() > pos:
            current.append(body[pos : match.start()])
        sigil, name = match.group(1), match.group(2)
        if sigil in ("#", "^"):
            stack.append((name, sigil == "^", current))
            current = []
        elif sigil == "/":
            if not stack or stack[-1][0] != name:
                raise TemplateParseError(f"unexpected section close {{{{/{name}}}}}")
            open_name, inverted, parent = stack.pop()
            parent.append(_Section(open_name, inverted, tuple(current)))
            current = parent
        else:
            current.append(_Var(name))
        pos = match.end()
    if stack:
        raise TemplateParseError(f"unclosed section {{{{#{stack[-1][0]}}}}}")
    if pos < len(body):
        current.append(body[pos:])
    return tuple(root)


def _variables(nodes: tuple[Node, ...]) -> frozenset[str]:
    names: set[str] = set()
    for node in nodes:
        if isinstance(node, _Var):
            names.add(node.name)
        elif isinstance(node, _Section):
            names |= _variables(node.children)
    return frozenset(names)


@dataclass(frozen=True)
class Template:
    name: str
    body: str
    nodes: tuple[Node, ...] = field(init=False, repr=False)
    required_vars: frozenset[str] = field(init=False)

    def __post_init__(self):
        nodes = _parse(self.body)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "required_vars", _variables(nodes))


def load_template(path: str | Path) -> Template:
    path = Path(path)
    return Template(name=path.stem, body=path.read_text("utf-8"))


def _truthy(value: Any) -> bool:
    return bool(value)


def render(template: Template, bindings: Mapping[str, Any]) -> str:
    """Render with the given bindings; deterministic and side-effect free."""

    out: list[str] = []

    def emit(nodes: tuple[Node, ...]) -> None:
        for node in nodes:
            if isinstance(node, str):
                out.append(node)
            elif isinstance(node, _Var):
                if node.name not in bindings:
                    raise RenderError(node.name)
                out.append(str(bindings[node.name]))
            else:
                present = _truthy(bindings.get(node.name))
                if present != node.inverted:
                    emit(node.children)

    emit(template.nodes)
    return "".join(out)
