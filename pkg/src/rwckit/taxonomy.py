"""Name-pattern rules that partition layers into architectural-primitive groups.

Rules match layer names with unanchored regular-expression search. A layer
matched by several rules goes to the one with the lowest priority value
(first-listed wins on equal priority); layers matched by no rule fall into the
reserved group ``"other"``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .errors import InvalidPatternError, UnknownLayerError

if TYPE_CHECKING:
    from .rwc import RwcMatrix

OTHER_GROUP = "other"


@dataclass(frozen=True)
class TaxonomyRule:
    group: str
    pattern: str
    priority: int = 0

    def __post_init__(self):
        if not self.group:
            raise ValueError("rule group name must be non-empty")


def compile_rules(rules: Iterable[TaxonomyRule]) -> list[tuple[TaxonomyRule, re.Pattern]]:
    compiled = []
    for rule in rules:
        try:
            compiled.append((rule, re.compile(rule.pattern)))
        except re.error as exc:
            raise InvalidPatternError(
                f"rule {rule.group!r}: pattern {rule.pattern!r} does not compile: {exc}"
            ) from exc
    return compiled


def assign_groups(layer_names: Sequence[str],
                  rules: Sequence[TaxonomyRule]) -> dict[str, str]:
    """Map each layer name to its group per the lowest-priority matching rule."""
    compiled = compile_rules(rules)
    grouping: dict[str, str] = {}
    for name in layer_names:
        best: TaxonomyRule | None = None
        for rule, pattern in compiled:
            if pattern.search(name) and (best is None or rule.priority < best.priority):
                best = rule
        grouping[name] = best.group if best is not None else OTHER_GROUP
    return grouping


def split_matrix(matrix: "RwcMatrix",
                 grouping: Mapping[str, str]) -> dict[str, "RwcMatrix"]:
    """Partition a feature matrix by group, preserving original row order.

    Groups appear in order of first occurrence along the layer sequence. The
    sub-matrices are row-disjoint and jointly exhaustive.
    """
    from .rwc import RwcMatrix

    missing = [n for n in matrix.layer_names if n not in grouping]
    if missing:
        raise UnknownLayerError(
            f"no group assigned for layer(s): {', '.join(repr(m) for m in missing)}"
        )
    row_indices: dict[str, list[int]] = {}
    for i, name in enumerate(matrix.layer_names):
        row_indices.setdefault(grouping[name], []).append(i)
    return {
        group: RwcMatrix(
            layer_names=[matrix.layer_names[i] for i in idx],
            values=matrix.values[idx].copy(),
        )
        for group, idx in row_indices.items()
    }


# Example rule sets for common architectures. Patterns target the layer-name
# conventions of widely used model zoos; they are starting points, not ground
# truth for any particular checkpoint.
EFFICIENTNET_PRIMITIVES = (
    TaxonomyRule("squeeze_excitation", r"\.se\.|squeeze_excite", 0),
    TaxonomyRule("pointwise_linear", r"conv_pwl", 1),
    TaxonomyRule("depthwise", r"conv_dw|depthwise", 2),
    TaxonomyRule("pointwise", r"conv_pw|pointwise", 3),
)

RESNET_BLOCKS = (
    TaxonomyRule("stem", r"^(conv1|bn1)\.", 0),
    TaxonomyRule("stage1", r"^layer1\.", 1),
    TaxonomyRule("stage2", r"^layer2\.", 2),
    TaxonomyRule("stage3", r"^layer3\.", 3),
    TaxonomyRule("stage4", r"^layer4\.", 4),
    TaxonomyRule("head", r"^fc\b", 5),
)
