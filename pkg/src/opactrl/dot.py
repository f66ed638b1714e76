"""Deterministic DOT rendering.

Visual convention: decision states are rounded boxes, observation states
plain boxes; unsafe states are filled red, pruned states outlined red.
Plants render as circles with secret states filled red.
"""

from __future__ import annotations

from .estimator import IssuanceMode, augment, estimator_trace
from .model import PlantModel
from .structure import ControlStructure, closed_loop_simulate, is_safe
from .supervisors import Supervisor
from .synthesis import Arena


def _quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def model_to_dot(model: PlantModel) -> str:
    lines = ["digraph plant {", "  rankdir=LR;", '  __init [shape=point, style=invis];']
    for i, name in enumerate(model.states):
        attrs = ["shape=circle"]
        if (model.secret_mask >> i) & 1:
            attrs.append("style=filled")
            attrs.append("fillcolor=red")
        lines.append(f"  {_quote(name)} [{', '.join(attrs)}];")
    lines.append(f"  __init -> {_quote(model.states[model.initial])};")
    for src, ev, dst in model.transitions():
        lines.append(f"  {_quote(src)} -> {_quote(dst)} [label={_quote(ev)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _info_label(model: PlantModel, info) -> str:
    members = ",".join(
        f"({model.states[m.plant_state]},{model.format_state_set(m.estimate)})"
        for m in info
    )
    gamma = model.format_decision(info[0].decision) if info else "{}"
    return "{" + members + "}, " + gamma


def structure_to_dot(structure: ControlStructure) -> str:
    model = structure.model
    obs_order = sorted(structure.observations)
    obs_id = {info: i for i, info in enumerate(obs_order)}

    def dkey_sort(key):
        info, sigma = key
        return (-1, -1) if info is None else (obs_id[info], sigma)

    dec_order = sorted(structure.decisions, key=dkey_sort)
    dec_id = {key: i for i, key in enumerate(dec_order)}

    lines = ["digraph structure {", "  rankdir=TB;"]
    for key in dec_order:
        info, sigma = key
        label = (
            "{m0}, -"
            if info is None
            else _info_label(model, info) + ", " + model.events[sigma]
        )
        lines.append(
            f"  d{dec_id[key]} [shape=box, style=rounded, label={_quote(label)}];"
        )
    for info in obs_order:
        attrs = ["shape=box"]
        if not is_safe(info, model.secret_mask):
            attrs.append('style=filled')
            attrs.append("fillcolor=red")
        attrs.append(f"label={_quote(_info_label(model, info))}")
        lines.append(f"  o{obs_id[info]} [{', '.join(attrs)}];")
    for key in dec_order:
        gamma, target = structure.decisions[key]
        lines.append(
            f"  d{dec_id[key]} -> o{obs_id[target]} "
            f"[label={_quote(model.format_decision(gamma))}];"
        )
    for info in obs_order:
        for sigma in structure.observations[info]:
            lines.append(
                f"  o{obs_id[info]} -> d{dec_id[(info, sigma)]} "
                f"[label={_quote(model.events[sigma])}];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def arena_to_dot(arena: Arena, pruned_states=()) -> str:
    """Render an arena; states in ``pruned_states`` get a red outline.  An
    empty arena renders as a header-only graph."""
    model = arena.model
    lines = ["digraph arena {"]
    if arena.is_empty:
        lines.append("}")
        return "\n".join(lines) + "\n"
    pruned = set(pruned_states)
    obs_order = sorted(arena.observation_events)
    obs_id = {info: i for i, info in enumerate(obs_order)}

    def dkey_sort(key):
        info, sigma = key
        return (-1, -1) if info is None else (obs_id[info], sigma)

    dec_order = sorted(arena.decision_edges, key=dkey_sort)
    dec_id = {key: i for i, key in enumerate(dec_order)}
    lines.append("  rankdir=TB;")
    for key in dec_order:
        info, sigma = key
        label = (
            "{m0}, -"
            if info is None
            else _info_label(model, info) + ", " + model.events[sigma]
        )
        attrs = ["shape=box", "style=rounded", f"label={_quote(label)}"]
        if key in pruned:
            attrs.append("color=red")
        lines.append(f"  d{dec_id[key]} [{', '.join(attrs)}];")
    for info in obs_order:
        attrs = ["shape=box"]
        if not is_safe(info, model.secret_mask):
            attrs.append("style=filled")
            attrs.append("fillcolor=red")
        if info in pruned:
            attrs.append("color=red")
        attrs.append(f"label={_quote(_info_label(model, info))}")
        lines.append(f"  o{obs_id[info]} [{', '.join(attrs)}];")
    for key in dec_order:
        for gamma, target in arena.decision_edges[key]:
            lines.append(
                f"  d{dec_id[key]} -> o{obs_id[target]} "
                f"[label={_quote(model.format_decision(gamma))}];"
            )
    for info in obs_order:
        for sigma in arena.observation_events[info]:
            key = (info, sigma)
            if key in dec_id:
                lines.append(
                    f"  o{obs_id[info]} -> d{dec_id[key]} "
                    f"[label={_quote(model.events[sigma])}];"
                )
    lines.append("}")
    return "\n".join(lines) + "\n"


def estimator_slice_to_dot(
    model: PlantModel, sup: Supervisor, mode: IssuanceMode, depth: int
) -> str:
    """Render the estimator states visited along all closed-loop strings up
    to the given length, under one supervisor."""
    nodes: dict = {}
    edges = []
    seen_edges = set()

    def node_id(m):
        if m not in nodes:
            nodes[m] = len(nodes)
        return nodes[m]

    def explore(s: tuple[int, ...]) -> None:
        result = closed_loop_simulate(model, sup, s)
        if not result.accepted:
            return
        trace = estimator_trace(model, augment(model, s, sup), mode)
        prev = "m0"
        prev_id = None
        for event, state in zip(result.trace, trace):
            sid = node_id(state)
            label = (
                "-" if event.event is None else model.events[event.event]
            ) + "," + model.format_decision(event.decision)
            edge = (prev if prev_id is None else prev_id, sid, label)
            if edge not in seen_edges:
                seen_edges.add(edge)
                edges.append(edge)
            prev_id = sid
        if len(s) < depth:
            for e in range(len(model.events)):
                explore(s + (e,))

    explore(())
    lines = ["digraph estimator {", "  rankdir=TB;", "  m0 [shape=box];"]
    for m, i in nodes.items():
        label = (
            f"{model.states[m.plant_state]},"
            f"{model.format_state_set(m.estimate)},"
            f"{model.format_decision(m.decision)}"
        )
        lines.append(f"  n{i} [shape=box, label={_quote(label)}];")
    for src, dst, label in edges:
        src_txt = src if src == "m0" else f"n{src}"
        lines.append(f"  {src_txt} -> n{dst} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
