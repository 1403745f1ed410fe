"""JSON input formats for chains, MDPs, APGs, policies and stream generators.

Chain::

    {"matrix": [[0.9, 0.1], [0.5, 0.5]]}

MDP::

    {"states": ["s0", "s1"],
     "actions": {"s0": ["stay", "go"], "s1": ["stay"]},
     "transitions": {"s0": {"stay": [["s0", 1.0]], "go": [["s1", 0.5], ["s0", 0.5]]},
                     "s1": {"stay": [["s1", 1.0]]}},
     "rewards": {"s0": {"stay": 0.0, "go": 1.0}, "s1": {"stay": 2.0}},
     "discount": 0.9}

Policy ``{"policy": {"s0": "go", "s1": "stay"}}`` and strategy
``{"strategy": {"s0": {"stay": 0.25, "go": 0.75}, "s1": {"stay": 1}}}``
(unlisted actions get weight 0).

APG ``{"nodes": ["a", "b"], "children": {"a": ["b"], "b": []}, "root": "a"}``;
node ids are compared as strings.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import markov, mdp, nwf, streams
from .errors import ParseError


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def _field(data: dict, key: str, kind, where: str):
    if key not in data:
        raise ParseError(f"{where}: missing field {key!r}")
    value = data[key]
    if not isinstance(value, kind):
        raise ParseError(f"{where}: field {key!r} has the wrong type")
    return value


def _real(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {x!r}")
    return float(x)


def chain_from_dict(data: dict, where: str = "chain") -> markov.StochasticChain:
    rows = _field(data, "matrix", list, where)
    matrix = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ParseError(f"{where}: row {i} is not a list")
        matrix.append([_real(x, f"{where} row {i}") for x in row])
    if len({len(r) for r in matrix}) > 1:
        raise ParseError(f"{where}: rows have different lengths")
    return markov.validate_chain(matrix)


def load_chain(path) -> markov.StochasticChain:
    return chain_from_dict(read_json(path), str(path))


def mdp_from_dict(data: dict, where: str = "mdp") -> mdp.Mdp:
    states = [str(s) for s in _field(data, "states", list, where)]
    if len(set(states)) != len(states):
        raise ParseError(f"{where}: duplicate state names")
    index = {s: i for i, s in enumerate(states)}
    actions = _field(data, "actions", dict, where)
    transitions = _field(data, "transitions", dict, where)
    rewards_in = _field(data, "rewards", dict, where)
    discount = _real(_field(data, "discount", (int, float), where), where)

    rewards, kernel, names = [], [], []
    for s in states:
        acts = actions.get(s)
        if not isinstance(acts, list) or not acts:
            raise ParseError(f"{where}: state {s!r} needs a nonempty action list")
        acts = [str(a) for a in acts]
        if len(set(acts)) != len(acts):
            raise ParseError(f"{where}: duplicate actions at state {s!r}")
        r_row, k_block = [], []
        for a in acts:
            try:
                r_row.append(_real(rewards_in[s][a], f"{where} reward ({s}, {a})"))
                succ = transitions[s][a]
            except (KeyError, TypeError):
                raise ParseError(f"{where}: missing reward or transitions for ({s!r}, {a!r})") from None
            row = [0.0] * len(states)
            if not isinstance(succ, list):
                raise ParseError(f"{where}: transitions for ({s!r}, {a!r}) must be a list")
            for item in succ:
                if not (isinstance(item, list) and len(item) == 2 and str(item[0]) in index):
                    raise ParseError(f"{where}: bad transition entry {item!r} at ({s!r}, {a!r})")
                row[index[str(item[0])]] += _real(item[1], f"{where} transition ({s}, {a})")
            k_block.append(row)
        rewards.append(r_row)
        kernel.append(k_block)
        names.append(tuple(acts))
    return mdp.make_mdp(rewards, kernel, discount, states, names)


def load_mdp(path) -> mdp.Mdp:
    return mdp_from_dict(read_json(path), str(path))


def _action_index(m: mdp.Mdp, x: int, name) -> int:
    try:
        return m.action_names[x].index(str(name))
    except ValueError:
        raise ParseError(f"state {m.state_names[x]!r} has no action {name!r}") from None


def policy_from_dict(m: mdp.Mdp, data: dict, where: str = "policy") -> tuple[int, ...]:
    table = _field(data, "policy", dict, where)
    out = []
    for x, s in enumerate(m.state_names):
        if s not in table:
            raise ParseError(f"{where}: no action given for state {s!r}")
        out.append(_action_index(m, x, table[s]))
    return tuple(out)


def strategy_from_dict(m: mdp.Mdp, data: dict, where: str = "strategy") -> tuple[list[float], ...]:
    table = _field(data, "strategy", dict, where)
    out = []
    for x, s in enumerate(m.state_names):
        weights = table.get(s)
        if not isinstance(weights, dict):
            raise ParseError(f"{where}: no distribution given for state {s!r}")
        row = [0.0] * m.n_actions(x)
        for a, w in weights.items():
            row[_action_index(m, x, a)] = _real(w, f"{where} ({s}, {a})")
        out.append(row)
    return tuple(out)


def apg_from_dict(data: dict, where: str = "apg") -> nwf.Apg:
    nodes = [str(v) for v in _field(data, "nodes", list, where)]
    children = _field(data, "children", dict, where)
    if "root" not in data:
        raise ParseError(f"{where}: missing field 'root'")
    kids = {}
    for v, cs in children.items():
        if not isinstance(cs, list):
            raise ParseError(f"{where}: children of {v!r} must be a list")
        kids[str(v)] = [str(c) for c in cs]
    return nwf.validate_apg(nodes, kids, str(data["root"]))


def load_apg(path) -> nwf.Apg:
    return apg_from_dict(read_json(path), str(path))


def apg_to_dict(g: nwf.Apg) -> dict:
    return {
        "nodes": [str(v) for v in g.nodes],
        "children": {str(v): [str(c) for c in sorted(g.children[v], key=g.index.__getitem__)] for v in g.nodes},
        "root": str(g.root),
    }


def parse_stream(spec: str) -> streams.Stream:
    """Stream from a generator description.

    ``"abc"`` cycles over the characters, ``"a,bb,c"`` over comma-separated
    symbols, and ``"x/ab"`` emits the prefix ``x`` once before cycling.  A path
    to a JSON file ``{"cycle": [...], "prefix": [...]}`` also works.
    """
    if spec.endswith(".json") and os.path.exists(spec):
        data = read_json(spec)
        cycle = _field(data, "cycle", list, spec)
        prefix = data.get("prefix", [])
        if not isinstance(prefix, list):
            raise ParseError(f"{spec}: 'prefix' must be a list")
        if not cycle:
            raise ParseError(f"{spec}: 'cycle' must be nonempty")
        return streams.cyclic([str(c) for c in cycle], [str(c) for c in prefix])
    pre, _, cyc = spec.rpartition("/")

    def symbols(text):
        return [t for t in text.split(",")] if "," in text else list(text)

    if not cyc:
        raise ParseError(f"stream generator {spec!r} has an empty cycle")
    return streams.cyclic(symbols(cyc), symbols(pre) if pre else ())


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
