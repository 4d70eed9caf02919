"""Attribute ranking, per-record attribute values, decision trees and forests."""

from .attributes import AttributeTable, attribute_features
from .forest import Forest, build_forest
from .ranking import (
    AttributeRanking,
    aggregate_ratings,
    attribute_name,
    comparative_candidates,
    pair_key,
    parse_attribute,
    rank_attributes,
)
from .selection import Selection, evaluate_grid, select_attributes
from .tree import DecisionTree, best_split, build_tree, entropy

__all__ = [
    "AttributeRanking", "AttributeTable", "DecisionTree", "Forest", "Selection",
    "aggregate_ratings", "attribute_features", "attribute_name", "best_split",
    "build_forest", "build_tree", "comparative_candidates", "entropy",
    "evaluate_grid", "pair_key", "parse_attribute", "rank_attributes",
    "select_attributes",
]
