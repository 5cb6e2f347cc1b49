"""Command-line entry point: ``netlayout {gen,communities,layout,render}``.

Exit codes: 0 on success, 2 for bad input or configuration, 3 when the
layout integration diverges.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import generators
from .community import DEFAULT_SIZE_THRESHOLD, greedy_modularity, modularity, refine_recursive
from .graph import ParseError, format_edge_list, largest_connected_component, read_edge_list
from .io import (
    format_communities,
    format_energy,
    format_layout,
    format_qtrace,
    parse_communities,
    parse_layout,
    read_text,
    write_text,
)
from .layout import DivergenceError, SimParams, pair_spacing, random_init, relax
from .mds import mds_init
from .render import PLANES, render_svg

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 2, 3


class UsageError(Exception):
    """Bad input or configuration; reported with exit code 2."""


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_text(path, text)


def _load_graph(path: str):
    try:
        g = read_edge_list(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None
    return largest_connected_component(g)


# ---- gen -------------------------------------------------------------------

def cmd_gen(args) -> int:
    try:
        if args.kind == "planted-partition":
            g, blocks = generators.planted_partition(args.blocks, args.size, args.p_in,
                                                     args.p_out, args.seed)
            if args.labels:
                write_text(args.labels, "".join(f"{lab}\t{b}\n" for lab, b in zip(g.labels, blocks)))
        elif args.kind == "ring-with-trees":
            g = generators.ring_with_trees(args.ring, args.trees, args.seed)
        else:
            g = generators.scale_free(args.n, args.m, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if g.m == 0:
        raise UsageError("generated graph has no edges")
    _emit(args.out, format_edge_list(g))
    return EXIT_OK


# ---- communities -----------------------------------------------------------

def cmd_communities(args) -> int:
    if args.threshold < 1:
        raise UsageError("--threshold must be >= 1")
    g = _load_graph(args.input)
    part, trace = greedy_modularity(g)
    tree = refine_recursive(g, part, args.threshold)
    paths = tree.paths(g.n)
    _emit(args.out, format_communities(g.labels, paths))
    qpath = args.qtrace
    if qpath is None and args.out not in (None, "-"):
        qpath = str(Path(args.out).with_suffix(".qtrace.csv"))
    if qpath is not None:
        write_text(qpath, format_qtrace(trace))
    leaves = len(set(paths))
    q = modularity(g, part)
    print(f"N={g.n} M={g.m} C={part.count} leaves={leaves} Q={q:.6f}", file=sys.stderr)
    return EXIT_OK


# ---- layout ----------------------------------------------------------------

def _params(args) -> SimParams:
    fields = ("C", "K", "ell", "gamma", "mass", "charge", "dt", "theta", "eps",
              "v_stop", "box_width", "seed")
    kw = {f: getattr(args, f) for f in fields if getattr(args, f) is not None}
    if args.steps is not None:
        kw["max_steps"] = args.steps
    if args.direct_max is not None:
        kw["direct_max"] = args.direct_max
    try:
        return SimParams(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _initial(args, g, p: SimParams) -> np.ndarray:
    mode = args.init
    if mode == "random":
        return random_init(g.n, args.dim, p.box_width, p.seed)
    if mode == "mds":
        spacing = args.spacing if args.spacing is not None else pair_spacing(p)
        return mds_init(g, args.dim, n_landmarks=args.landmarks, seed=p.seed, spacing=spacing)
    if mode.startswith("file:"):
        path = mode[5:]
        try:
            labels, x = parse_layout(read_text(path))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
        if x.shape[1] != args.dim:
            raise UsageError(f"{path} is {x.shape[1]}-d but --dim is {args.dim}")
        pos = dict(zip(labels, x))
        missing = [lab for lab in g.labels if lab not in pos]
        if missing:
            raise UsageError(f"{path} lacks {len(missing)} node(s): {', '.join(missing[:10])}")
        return np.array([pos[lab] for lab in g.labels])
    raise UsageError(f"--init must be random, mds or file:PATH, not {mode!r}")


def cmd_layout(args) -> int:
    g = _load_graph(args.input)
    p = _params(args)
    x0 = _initial(args, g, p)
    every = args.energy_every if args.energy else 0
    if args.energy and every < 1:
        raise UsageError("--energy-every must be >= 1")
    try:
        res = relax(g, x0, p, energy_every=every)
    except DivergenceError as exc:
        print(f"error: layout diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    _emit(args.out, format_layout(g.labels, res.state.x))
    if args.energy:
        write_text(args.energy, format_energy(res.energy_trace))
    print(f"N={g.n} M={g.m} steps={res.steps} converged={str(res.converged).lower()} "
          f"max_speed={res.max_speed:.3e}", file=sys.stderr)
    return EXIT_OK


# ---- render ----------------------------------------------------------------

def cmd_render(args) -> int:
    try:
        labels, x = parse_layout(read_text(args.layout))
        comms = parse_communities(read_text(args.communities)) if args.communities else None
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if comms is not None:
        have = set(labels)
        odd = [lab for lab in labels if lab not in comms] + [lab for lab in comms if lab not in have]
        if odd:
            raise UsageError(f"layout and community files disagree on {len(odd)} label(s): "
                             + ", ".join(odd[:10]))
    if args.highlight is not None and comms is None:
        raise UsageError("--highlight needs --communities")
    edges = None
    if args.edges:
        if not args.graph:
            raise UsageError("--edges needs --graph")
        try:
            g = read_edge_list(args.graph)
        except OSError as exc:
            raise UsageError(f"cannot read {args.graph}: {exc.strerror or exc}") from None
        except ParseError as exc:
            raise UsageError(f"{args.graph}: {exc}") from None
        index = {lab: i for i, lab in enumerate(labels)}
        edges = np.array([(index[g.labels[u]], index[g.labels[v]]) for u, v in g.edges
                          if g.labels[u] in index and g.labels[v] in index],
                         dtype=np.int64).reshape(-1, 2)
    try:
        svg = render_svg(labels, x, comms, args.highlight, args.plane, edges, args.dot_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(args.out, svg)
    return EXIT_OK


# ---- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netlayout",
                                 description="Community detection and N-body layout of large graphs.")
    ap.add_argument("--config", metavar="FILE",
                    help="key=value defaults for the chosen command; flags take precedence")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic edge list")
    g.add_argument("kind", choices=["planted-partition", "ring-with-trees", "scale-free"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="edge-list path (default stdout)")
    g.add_argument("--labels", help="planted-partition: write node<TAB>block here")
    g.add_argument("--blocks", type=int, default=4)
    g.add_argument("--size", type=int, default=32)
    g.add_argument("--p-in", type=float, default=0.3)
    g.add_argument("--p-out", type=float, default=0.01)
    g.add_argument("--ring", type=int, default=500)
    g.add_argument("--trees", type=int, default=1000)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--m", type=int, default=2)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("communities", help="greedy modularity with recursive refinement")
    c.add_argument("input")
    c.add_argument("--out", help="community TSV path (default stdout)")
    c.add_argument("--qtrace", help="Q trace CSV (default: next to --out)")
    c.add_argument("--threshold", type=int, default=DEFAULT_SIZE_THRESHOLD,
                   help="refine communities larger than this")
    c.set_defaults(func=cmd_communities)

    lay = sub.add_parser("layout", help="relax an N-body layout of the largest component")
    lay.add_argument("input")
    lay.add_argument("--out", help="layout TSV path (default stdout)")
    lay.add_argument("--dim", type=int, choices=[2, 3], default=3)
    lay.add_argument("--init", default="random", help="random, mds or file:PATH")
    lay.add_argument("--steps", type=int, help="maximum number of steps")
    lay.add_argument("--energy", help="energy trace CSV path")
    lay.add_argument("--energy-every", type=int, default=100)
    lay.add_argument("--landmarks", type=int, default=100)
    lay.add_argument("--spacing", type=float, help="mean edge length of the mds start")
    for name in ("theta", "dt", "C", "K", "ell", "gamma", "mass", "charge", "eps",
                 "v-stop", "box-width"):
        lay.add_argument(f"--{name}", type=float)
    lay.add_argument("--seed", type=int)
    lay.add_argument("--direct-max", type=int,
                     help="use exact Coulomb sums up to this many nodes")
    lay.set_defaults(func=cmd_layout)

    r = sub.add_parser("render", help="draw a layout as SVG")
    r.add_argument("layout")
    r.add_argument("--communities", help="community TSV")
    r.add_argument("--highlight", metavar="ID", help="community drawn in black")
    r.add_argument("--plane", choices=sorted(PLANES), default="xy")
    r.add_argument("--edges", action="store_true", help="draw edges (needs --graph)")
    r.add_argument("--graph", help="edge list used by --edges")
    r.add_argument("--dot-size", type=float, default=0.004)
    r.add_argument("--out", help="SVG path (default stdout)")
    r.set_defaults(func=cmd_render)
    return ap


def _subparser(ap: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in ap._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(sp: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    defaults = {}
    for key, raw in cfg.items():
        act = actions.get(key)
        if act is None or not act.option_strings:
            raise UsageError(f"config key {key!r} is not an option of this command")
        if isinstance(act, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} needs a boolean")
            value = raw.lower() in ("true", "1", "yes")
        else:
            try:
                value = act.type(raw) if act.type else raw
            except ValueError:
                raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
            if act.choices is not None and value not in act.choices:
                raise UsageError(f"config key {key!r}: {raw!r} not in {list(act.choices)}")
        defaults[key] = value
    sp.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.config:
            try:
                cfg = parse_config(read_text(args.config))
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
            _apply_config(_subparser(ap, args.command), cfg)
            args = ap.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        # argparse reports usage problems with status 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
