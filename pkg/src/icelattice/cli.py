"""The ``ice`` command line."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    bernoulli_null_ratio,
    check_3464_bounds,
    default_free_entropy,
    demarcation,
    entropy_bracket,
    FreeEntropyEstimate,
    flip_ratio,
    heatmap,
)
from .boundary import (
    all_one_cycles,
    alternating_edge_split,
    boundary_cycle,
    fig4a,
    fig4b,
    fig4c,
    fig4d,
    from_signature,
    parse_signature,
    quadrant_cross,
)
from .config import (
    IllegalConfiguration,
    InfeasibleBoundary,
    height,
    lipschitz_fill,
    parse_header,
    read_boundary,
    read_config,
    validate,
    write_config,
)
from .dynamics import KAGOME_DOUBLE_HEX, FlipStats, parse_schedule, run
from .exact import TruncatedEnumeration, enumerate_fillins, entropy_of, flip_graph
from .lattice import CapacityError, DomainError, FlipFamily, LatticeKind, build_domain, export_domain

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_ILLEGAL = 3
EXIT_INFEASIBLE = 4
EXIT_CAPACITY = 5
EXIT_BOUND = 6
EXIT_IO = 7


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- helpers

def _domain(args):
    if args.config:
        _, kind, n = parse_header(Path(args.config).read_text())
        return build_domain(kind, n)
    if args.boundary and args.boundary.startswith("file:"):
        _, kind, n = parse_header(Path(args.boundary[5:]).read_text())
        return build_domain(kind, n)
    if args.lattice is None or args.n is None:
        raise UsageError("need --lattice and --n (or an input file)")
    return build_domain(args.lattice, args.n)


SEEDS = {"fig4a": fig4a, "fig4b": fig4b, "fig4c": fig4c, "fig4d": fig4d, "allcycles": all_one_cycles}


def seed_config(domain, recipe: str):
    if recipe.startswith("quadrant:"):
        return quadrant_cross(domain, float(recipe.split(":", 1)[1])).config
    try:
        return SEEDS[recipe](domain)
    except KeyError:
        raise UsageError(f"unknown start recipe {recipe!r}") from None


def boundary_spec(domain, text: str):
    if text.startswith("sig:"):
        return from_signature(domain, parse_signature(text[4:]))
    if text == "split":
        return alternating_edge_split(domain)
    if text == "cycle":
        return boundary_cycle(domain)
    if text.startswith("file:"):
        return read_boundary(Path(text[5:]).read_text(), domain)
    raise UsageError(f"unknown boundary recipe {text!r}")


def _spec_and_start(args, domain):
    """Boundary and initial configuration from --config, --start or --boundary."""
    if args.config:
        cfg = read_config(Path(args.config).read_text(), domain)
        return cfg.boundary(), cfg
    if getattr(args, "start", None):
        cfg = seed_config(domain, args.start)
        return cfg.boundary(), cfg
    if not args.boundary:
        raise UsageError("need --boundary, --start or --config")
    spec = boundary_spec(domain, args.boundary)
    return spec, lipschitz_fill(domain, spec, "max")


def _recipe(args):
    for key, tag in (("config", "config:"), ("start", "start:"), ("boundary", ""), ("stats", "stats:")):
        val = getattr(args, key, None)
        if val:
            return tag + val
    return ""


def _opt(args, key):
    val = getattr(args, key, None)
    return "" if val is None else val


def _manifest(args, domain, outputs, **extra) -> str:
    keys = {
        "tool": "ice",
        "version": __version__,
        "command": args.cmd,
        "lattice": domain.kind.value if domain else "",
        "N": domain.n if domain else "",
        "boundary": _recipe(args),
        "schedule": _opt(args, "schedule"),
        "seed": _opt(args, "seed"),
        "burnin": _opt(args, "burnin"),
        "window": _opt(args, "window"),
        "outputs": ",".join(str(p) for p in outputs),
    }
    keys.update(extra)
    return "".join(f"{k}={v}\n" for k, v in keys.items())


class Outputs:
    """Collects written files so one manifest can be placed beside each."""

    def __init__(self):
        self.paths: list[Path] = []
        self.blobs: dict[Path, bytes] = {}

    def add(self, path, data):
        p = Path(path)
        self.blobs[p] = data.encode() if isinstance(data, str) else data
        self.paths.append(p)

    def flush(self, args, domain, **extra):
        for p, data in self.blobs.items():
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_bytes(data)
        man = _manifest(args, domain, [p.name for p in self.paths], **extra)
        targets = [Path(str(p) + ".manifest") for p in self.paths]
        if getattr(args, "manifest", None):
            targets.append(Path(args.manifest))
        for t in targets:
            t.write_text(man)


def _emit(kv: dict):
    for k, v in kv.items():
        print(f"{k} {v}")


def _stats_text(stats: FlipStats, domain) -> str:
    head = f"# ICESTATS {domain.kind.value} {domain.n}\n"
    return head + stats.export(domain)


def _read_stats(text: str):
    lines = text.splitlines()
    parts = lines[0].split()
    if parts[:2] != ["#", "ICESTATS"]:
        raise UsageError("not a flip statistics file")
    domain = build_domain(parts[2], int(parts[3]))
    w = lines[1].split()
    start, end, seed = int(w[2]), int(w[3]), int(w[5])
    counts = np.zeros(len(domain.faces), dtype=np.int64)
    for ln in lines[3:]:
        f = ln.split()
        counts[int(f[0])] = int(f[4])
    return domain, FlipStats(counts, start, end, end, seed)


# ---------------------------------------------------------------- commands

def cmd_build(args):
    d = _domain(args)
    out = Outputs()
    text = export_domain(d)
    if args.out:
        out.add(args.out, text)
    else:
        sys.stdout.write(text)
    _emit({"vertices": d.n_vertices, "edges": d.n_edges, "faces": len(d.faces),
           "boundary_arrows": int(d.edge_boundary.sum())})
    out.flush(args, d)
    return EXIT_OK


def cmd_validate(args):
    d = _domain(args)
    cfg = read_config(Path(args.config).read_text(), d)
    bad = validate(d, cfg)
    if bad:
        print(f"ILLEGAL {len(bad)} vertices: {' '.join(map(str, bad[:20]))}")
        return EXIT_ILLEGAL
    print("OK")
    return EXIT_OK


def cmd_height(args):
    d = _domain(args)
    _, cfg = _spec_and_start(args, d)
    h = height(d, cfg)
    lines = [f"{k} {d.dual.pos[k][0]:.6f} {d.dual.pos[k][1]:.6f} {int(v)}" for k, v in enumerate(h)]
    text = "# dual x y height\n" + "\n".join(lines) + "\n"
    out = Outputs()
    if args.out:
        out.add(args.out, text)
    else:
        sys.stdout.write(text)
    out.flush(args, d)
    return EXIT_OK


def cmd_sample(args):
    d = _domain(args)
    spec, start = _spec_and_start(args, d)
    sched = parse_schedule(args.schedule, d.kind, args.p)
    cfg, stats = run(d, spec, start, sched, args.burnin, args.window, args.seed, args.threads)
    out = Outputs()
    if args.out:
        out.add(args.out, write_config(cfg))
    if args.stats:
        out.add(args.stats, _stats_text(stats, d))
    if args.heatmap:
        out.add(args.heatmap, heatmap(stats, d, args.ppu).to_pgm(not args.ascii))
    if args.plot:
        from .plotting import plot_activity

        Path(args.plot).parent.mkdir(parents=True, exist_ok=True)
        plot_activity(d, stats.counts, args.plot)
        out.paths.append(Path(args.plot))
    total = int(stats.counts.sum())
    kv = {"sweeps": stats.total_sweeps, "window_flips": total}
    if stats.window > 0:
        rep = demarcation(stats, d)
        kv.update(rep.summary())
    _emit(kv)
    out.flush(args, d, schedule=str(sched))
    return EXIT_OK


def cmd_enumerate(args):
    d = _domain(args)
    spec, _ = _spec_and_start(args, d) if (args.config or args.start) else \
        (boundary_spec(d, args.boundary), None)
    res = enumerate_fillins(d, spec, cap=args.cap)
    print(f"count {res.count}")
    if res.truncated:
        print(f"truncated stored {len(res.configs)}", file=sys.stderr)
    out = Outputs()
    if args.out:
        body = [str(res.count)] + [c.to_bitstring() for c in res.configs]
        out.add(args.out, "\n".join(body) + "\n")
    out.flush(args, d)
    return EXIT_OK


def _families(text, kind):
    if not text:
        return kind.families
    return tuple(FlipFamily.parse(t.strip()) for t in text.split(",") if t.strip())


def cmd_flipgraph(args):
    d = _domain(args)
    spec, _ = _spec_and_start(args, d)
    res = enumerate_fillins(d, spec, cap=args.cap)
    g = flip_graph(res, d, _families(args.families, d.kind))
    ncomp, _ = g.components()
    _emit({"nodes": g.n_nodes, "edges": len(g.edges), "components": ncomp,
           "connected": "yes" if ncomp <= 1 else "no"})
    Outputs().flush(args, d)
    return EXIT_OK


def cmd_entropy(args):
    d = _domain(args)
    hbar = FreeEntropyEstimate(args.hbar, "configured") if args.hbar else default_free_entropy(d.kind)
    if args.quadrant is not None:
        q = quadrant_cross(d, args.quadrant)
        b = entropy_bracket(d, args.quadrant, hbar, seed=q)
        res = enumerate_fillins(d, q.config.boundary(), cap=0)
        h = entropy_of(res.count, d.n_edges)
        _emit({"count": res.count, "arrows": d.n_edges, "entropy": f"{h:.9f}",
               "lower": f"{b.lower:.9f}", "upper": f"{b.upper:.9f}",
               "inside": "yes" if b.contains(h) else "no"})
    else:
        spec, _ = _spec_and_start(args, d)
        res = enumerate_fillins(d, spec, cap=0)
        _emit({"count": res.count, "arrows": d.n_edges,
               "entropy": f"{entropy_of(res.count, d.n_edges):.9f}",
               "hbar": f"{hbar.value:.9f}"})
    Outputs().flush(args, d)
    return EXIT_OK


def cmd_heatmap(args):
    d, stats = _read_stats(Path(args.stats).read_text())
    out = Outputs()
    out.add(args.out, heatmap(stats, d, args.ppu).to_pgm(not args.ascii))
    if args.plot:
        from .plotting import plot_activity

        plot_activity(d, stats.counts, args.plot)
        out.paths.append(Path(args.plot))
    _emit(demarcation(stats, d).summary())
    out.flush(args, d)
    return EXIT_OK


def cmd_bounds(args):
    d = _domain(args)
    if d.kind is not LatticeKind.T3464:
        raise UsageError("bounds apply to the 3464 lattice only")
    if args.config or args.start:
        _, cfg = _spec_and_start(args, d)
        rep = check_3464_bounds(d, cfg)
    elif args.boundary:
        # checked as given: a violating boundary would not survive a fill
        rep = check_3464_bounds(d, boundary_spec(d, args.boundary))
    else:
        raise UsageError("need --boundary, --start or --config")
    kv = {"blocks": rep.blocks_checked, "period8_blocks": rep.periodic_blocks,
          "violations": len(rep.violations), "max_tilt": f"{rep.max_ratio:.6f}",
          "tilt_ceiling": f"{rep.tilt_ceiling:.6f}"}
    if rep.density is not None:
        kv["density"] = f"{rep.density:.6f}"
        kv["density_floor"] = f"{1 / 7:.6f}"
    _emit(kv)
    for v in rep.violations[:20]:
        print("violation side {} start {} n {} dh {} {}".format(*v))
    Outputs().flush(args, d)
    return EXIT_OK if rep.ok else EXIT_BOUND


def cmd_ratio(args):
    if args.stats:
        d, stats = _read_stats(Path(args.stats).read_text())
        sched = None
    else:
        d = _domain(args)
        spec, start = _spec_and_start(args, d)
        sched = parse_schedule(args.schedule or KAGOME_DOUBLE_HEX, d.kind, args.p)
        _, stats = run(d, spec, start, sched, args.burnin, args.window, args.seed, args.threads)
    r = flip_ratio(stats, d, args.radius)
    checks = str(sched).split(",").count("fh") if sched else 1
    _emit({"ratio": f"{r:.6f}", "null_ratio": f"{bernoulli_null_ratio(checks):.6f}"})
    out = Outputs()
    if getattr(args, "out", None):
        out.add(args.out, _stats_text(stats, d))
    out.flush(args, d, schedule=str(sched) if sched else "")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p, sampling=False):
    p.add_argument("--lattice", choices=[k.value for k in LatticeKind] + ["triangular", "kagome"])
    p.add_argument("--n", type=int)
    p.add_argument("--boundary", help="sig:a,b,c,d,e,f | split | cycle | file:PATH")
    p.add_argument("--start", help="fig4a|fig4b|fig4c|fig4d|quadrant:X|allcycles")
    p.add_argument("--config", help="ICECFG file")
    p.add_argument("--manifest", help="extra manifest path")
    if sampling:
        p.add_argument("--schedule")
        p.add_argument("--p", type=float, default=0.5, help="flip probability")
        p.add_argument("--burnin", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ice", description="Ice-model configurations on hexagonal domains")
    ap.add_argument("--version", action="version", version=f"ice {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", help="construct a domain and print its size")
    _common(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("validate", help="check the ice rule on a configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--lattice")
    p.add_argument("--n", type=int)
    p.add_argument("--boundary")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("height", help="height function of a configuration")
    _common(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_height)

    p = sub.add_parser("sample", help="run the flip sampler")
    _common(p, sampling=True)
    p.add_argument("--out", help="final configuration (ICECFG)")
    p.add_argument("--stats", help="per-face flip counts")
    p.add_argument("--heatmap", help="PGM image")
    p.add_argument("--ascii", action="store_true", help="write P2 instead of P5")
    p.add_argument("--ppu", type=float, default=1.0, help="pixels per lattice unit")
    p.add_argument("--plot", help="PNG rendering of the activity")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("enumerate", help="count all fill-ins of a boundary")
    _common(p)
    p.add_argument("--cap", type=int, default=10**7)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("flipgraph", help="connectivity of the flip graph")
    _common(p)
    p.add_argument("--families", help="comma list of allowed move families")
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_flipgraph)

    p = sub.add_parser("entropy", help="exact entropy, or the quadrant-cross bracket")
    _common(p)
    p.add_argument("--quadrant", type=float, help="cross point in [-1, 1]")
    p.add_argument("--hbar", type=float, help="free entropy per arrow")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("heatmap", help="render a statistics file")
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ascii", action="store_true")
    p.add_argument("--ppu", type=float, default=1.0)
    p.add_argument("--plot")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("bounds", help="3.4.6.4 tilt and density bounds")
    _common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ratio", help="Kagome triangle/hexagon flip ratio")
    _common(p, sampling=True)
    p.add_argument("--stats", help="use an existing statistics file")
    p.add_argument("--radius", type=float, help="centre disc radius (default N/6)")
    p.add_argument("--out", help="write the statistics used")
    p.set_defaults(func=cmd_ratio)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"ice: usage: {e}", file=sys.stderr)
        return EXIT_USAGE
    except IllegalConfiguration as e:
        print(f"ice: illegal configuration: {e}", file=sys.stderr)
        return EXIT_ILLEGAL
    except InfeasibleBoundary as e:
        print(f"ice: infeasible boundary: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CapacityError, TruncatedEnumeration) as e:
        print(f"ice: capacity: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except DomainError as e:
        print(f"ice: domain: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"ice: io: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ZeroDivisionError) as e:
        print(f"ice: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
