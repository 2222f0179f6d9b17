"""
Stratifier module for Symflow Project
This module orders a program's relations into strata using the predicate dependency graph.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List

import networkx as nx

from .errors import StratificationError
from .functors import FunctorRegistry
from .program import Program, Rule

logger = logging.getLogger(__name__)


@dataclass
class Stratum:
    """A set of mutually recursive IDB relations and the rules defining them."""
    index: int
    relations: FrozenSet[str]
    rules: List[Rule] = field(default_factory=list)

    @property
    def is_recursive(self) -> bool:
        return any(
            atom.relation in self.relations
            for rule in self.rules
            for atom in rule.positive_atoms()
        )


@dataclass
class StratumPlan:
    strata: List[Stratum] = field(default_factory=list)

    def stratum_of(self, relation: str) -> int:
        for stratum in self.strata:
            if relation in stratum.relations:
                return stratum.index
        return -1

    def __len__(self) -> int:
        return len(self.strata)


def dependency_graph(program: Program, functors: FunctorRegistry) -> nx.DiGraph:
    """
    Edges point from a body relation to the head relation it feeds. An edge is
    negative when any occurrence is negated or read by a non-monotonic functor.
    Heads of one rule are tied together so a multi-head rule lives in one stratum.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(program.relations)

    def add_edge(source: str, target: str, negative: bool, rule: Rule):
        if graph.has_edge(source, target):
            data = graph.edges[source, target]
            if negative and not data["negative"]:
                data["negative"] = True
                data["rule"] = rule
        else:
            graph.add_edge(source, target, negative=negative, rule=rule)

    for rule in program.rules:
        heads = [head.relation for head in rule.heads]
        for head in heads:
            for literal in rule.positive_atoms():
                add_edge(literal.relation, head, False, rule)
            for literal in rule.negative_atoms():
                add_edge(literal.relation, head, True, rule)
            for call in rule.functor_calls():
                if call.name not in functors:
                    continue
                functor = functors.get(call.name)
                for read in functor.reads:
                    if read in program.relations:
                        add_edge(read, head, not functor.monotonic, rule)
            for other in heads:
                if other != head:
                    add_edge(head, other, False, rule)
    return graph


def stratify(program: Program, functors: FunctorRegistry) -> StratumPlan:
    """
    Compute the stratum plan of a program.

    Args:
        program: parsed program
        functors: registry used to find non-monotonic functor reads

    Returns:
        StratumPlan whose strata list only IDB relations, in evaluation order

    Raises:
        StratificationError: a negative edge lies inside a strongly connected component
    """
    graph = dependency_graph(program, functors)
    condensed = nx.condensation(graph)
    members = nx.get_node_attributes(condensed, "members")

    for source, target, data in graph.edges(data=True):
        if data["negative"] and condensed.graph["mapping"][source] == condensed.graph["mapping"][target]:
            rule = data["rule"]
            raise StratificationError(
                f"{target} depends negatively on {source} inside a recursive cycle in rule: {rule}",
                rule.location,
            )

    idb = program.idb_relations
    rules_by_head: Dict[str, List[Rule]] = {}
    for rule in program.rules:
        rules_by_head.setdefault(rule.heads[0].relation, []).append(rule)

    plan = StratumPlan()
    order = nx.lexicographical_topological_sort(condensed, key=lambda node: min(members[node]))
    for node in order:
        relations = frozenset(members[node]) & idb
        if not relations:
            continue
        rules = [rule for name in sorted(relations) for rule in rules_by_head.get(name, [])]
        plan.strata.append(Stratum(len(plan.strata), relations, rules))

    logger.debug(f"Stratified {len(idb)} IDB relations into {len(plan)} strata")
    return plan
