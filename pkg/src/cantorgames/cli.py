"""Scenario runner.

A scenario is an INI-style file of ``key = value`` sections::

    [scenario]
    name = golden

    [game]
    kind = cantor
    eps = 1
    R = 2

    [alice]
    strategy = cantor_from_construction
    construction = golden_mean

    [bob]
    strategy = exhaustive

    [run]
    depth = 10

Every subcommand writes its artifacts into ``--out`` and a ``summary.txt``.
Exit status is 0 when every checked invariant held, 1 otherwise, and 2 on
usage or parse errors.
"""
from __future__ import annotations

import argparse
import configparser
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from . import cantor as cantor_mod
from .cantor import CantorConstruction, dump, load, validate_budgets
from .engine import GameConfig, Transcript, exhaustive_bob, outcome, play
from .errors import DepthNotBuilt, GameError, ParseError, UnknownStrategy
from .fractal import (IntervalSet, ScaleProfile, box_dimension, diffuse_to_regular,
                      ifs_similarity_dim)
from .space import REAL_LINE, SHIFT, Ball, as_fraction, parse_ball, working_precision
from . import strategies as st

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# scenario files


class Scenario:
    """Parsed scenario: a name plus string-valued sections."""

    def __init__(self, name: str, sections: dict):
        self.name = name
        self.sections = sections

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str) -> str:
        value = self.get(section, key)
        if value is None:
            raise ParseError(f"missing [{section}] {key}")
        return value


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0]) from exc
    sections = {s: dict(cp.items(s)) for s in cp.sections()}
    name = sections.get("scenario", {}).get("name", "scenario")
    return Scenario(name, sections)


def read_scenario(path: Optional[str]) -> Scenario:
    if path is None:
        return Scenario("scenario", {})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_scenario(text)


def _frac(value: str, what: str) -> Fraction:
    try:
        return as_fraction(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{what}: {value!r} is not a rational number") from exc


def _int(value: str, what: str) -> int:
    try:
        return int(value.strip())
    except ValueError as exc:
        raise ParseError(f"{what}: {value!r} is not an integer") from exc


def _fracs(sec: dict, *keys) -> dict:
    return {k: _frac(sec[k], k) for k in keys if k in sec}


# ---------------------------------------------------------------------------
# registries


def make_construction(sec: dict, depth: int, base: Path = Path(".")):
    """Construction named by ``sec['construction']`` (or loaded from ``sec['dump']``)."""
    if "dump" in sec:
        path = base / sec["dump"]
        try:
            return load(path.read_text())
        except OSError as exc:
            raise ParseError(f"cannot read dump {path}") from exc
        except ValueError as exc:
            raise ParseError(f"bad dump {path}: {exc}") from exc
    name = sec.get("construction")
    if name == "golden_mean":
        return cantor_mod.golden_mean(depth)
    if name == "middle_thirds":
        return cantor_mod.middle_thirds(depth)
    if name == "avoiding":
        words = [w.strip() for w in sec.get("words", "11").split(",")]
        lazy = sec.get("lazy", "false").lower() == "true"
        return cantor_mod.avoiding_words(words, None if lazy else depth)
    if name == "full_split":
        R = _int(sec.get("R", "2"), "R")
        return cantor_mod.full_split(Ball.cylinder(""), R, depth)
    if name == "half_winning":
        R = _int(sec.get("R", "16"), "R")
        F = st.PositionalStrategy(lambda B: Ball.interval(B.center, B.radius / 2), "half_center")
        return st.cantor_from_half_winning(F, Ball.from_endpoints(0, 1), R, depth)
    raise UnknownStrategy(f"unknown construction {name!r}")


def make_config(sec: dict) -> GameConfig:
    kind = sec.get("kind")
    try:
        if kind == "schmidt":
            f = _fracs(sec, "alpha", "beta")
            return GameConfig.schmidt(f["alpha"], f["beta"], sec.get("variant", "classic"))
        if kind == "absolute":
            return GameConfig.absolute(_frac(sec["beta"], "beta"))
        if kind == "potential":
            return GameConfig.potential(_frac(sec["c"], "c"), _frac(sec["beta"], "beta"))
        if kind == "cantor":
            space = sec.get("space", "shift")
            structure = REAL_LINE if space == "real" else SHIFT
            return GameConfig.cantor(_frac(sec["eps"], "eps"), _int(sec["R"], "R"), structure)
    except KeyError as exc:
        raise ParseError(f"[game] is missing {exc.args[0]}") from exc
    except ValueError as exc:
        raise ParseError(f"[game]: {exc}") from exc
    raise ParseError(f"unknown game kind {kind!r}")


def _center_alice(cfg: GameConfig):
    a = cfg.alpha
    return st.PositionalStrategy(lambda B: Ball.interval(B.center, a * B.radius), "center", alpha=a)


def make_alice(sec: dict, cfg: GameConfig, depth: int, base: Path):
    name = sec.get("strategy")
    if name == "center":
        return _center_alice(cfg)
    if name == "cantor_from_construction":
        c = make_construction(sec, depth, base)
        p = st.cantor_game_params(_frac(sec.get("eps0", str(cfg.eps)), "eps0"), cfg.R,
                                        _frac(sec.get("delta", "1"), "delta"))
        return st.cantor_game_alice_from_construction(c, p, sec.get("pad", "false") == "true")
    if name == "potential_from_cantor":
        c = make_construction(sec, depth, base)
        return st.potential_alice_from_cantor(c, cfg.c, _frac(sec.get("beta", str(cfg.beta)), "beta"))
    if name == "intersection":
        words = [w.strip() for w in sec.get("words", "11;00").split(";")]
        sub_beta = cfg.beta ** 2
        subs = [st.potential_alice_from_cantor(cantor_mod.avoiding_words(w.split(",")), cfg.c, sub_beta)
                for w in words]
        return st.intersect_potential_strategies(subs[0], subs[1], cfg.beta)
    if name == "dolgopyat":
        cover = [parse_ball(b) for b in sec.get("cover", "S:1111").split()]
        return st.dolgopyat_alice(cover, cfg.c, cfg.beta)
    if name == "digit_control":
        targets = [tuple(int(x) for x in tok.split(":")) for tok in sec.get("targets", "").split()]
        return st.digit_control_alice(cfg.alpha, cfg.beta, targets, _frac(sec.get("rho0", "1/2"), "rho0"))
    if name == "lifted_center":
        a, b = st.lifted_parameters(cfg.alpha, cfg.beta)
        inner = st.PositionalStrategy(lambda B: Ball.interval(B.center, a * B.radius), "center")
        return st.lift_schmidt_strategy(inner, cfg.alpha, cfg.beta)
    raise UnknownStrategy(f"unknown Alice strategy {name!r}")


def _random_bob(cfg: GameConfig, rng: random.Random, b0: Ball, grain: int = 16):
    """Uniform choice over a finite grid of legal replies (shift or line)."""

    def respond(t: Transcript):
        if not t.moves:
            return b0
        if not b0.is_real:
            from .engine import shift_bob_candidates
            return rng.choice(shift_bob_candidates(t))
        A = t.moves[-1].ball if cfg.kind.value == "schmidt" else t.current_ball
        r = cfg.beta * A.radius
        return Ball.interval(A.lo + r + (A.diameter - 2 * r) * Fraction(rng.randrange(grain + 1), grain), r)

    return st.Strategy(respond, "random")


def make_bob(sec: dict, cfg: GameConfig, seed: int):
    name = sec.get("strategy", "exhaustive")
    b0 = parse_ball(sec["b0"]) if "b0" in sec else None
    if name == "exhaustive":
        return None
    if name == "random":
        default = Ball.cylinder("") if cfg.kind.value == "cantor" and cfg.structure is SHIFT \
            else Ball.from_endpoints(0, 1)
        return _random_bob(cfg, random.Random(seed), b0 or default)
    if name == "avoiding":
        return st.avoiding_bob(cfg.beta, b0)
    if name == "ifs":
        f = _fracs(sec, "lam", "gam")
        return st.ifs_bob(cfg.alpha, f["lam"], f["gam"], b0)
    raise UnknownStrategy(f"unknown Bob strategy {name!r}")


# ---------------------------------------------------------------------------
# subcommands


class Report:
    def __init__(self, name: str):
        self.lines = [f"scenario {name}"]
        self.ok = True

    def check(self, label: str, passed: bool, detail: str = ""):
        self.ok &= bool(passed)
        self.lines.append(f"{'PASS' if passed else 'FAIL'} {label}" + (f": {detail}" if detail else ""))

    def note(self, text: str):
        self.lines.append(text)

    def write(self, out: Path):
        (out / "summary.txt").write_text("\n".join(self.lines) + "\n")
        print("\n".join(self.lines))


def _depth(sc: Scenario, args, default: int) -> int:
    if args.depth is not None:
        return args.depth
    return _int(sc.get("run", "depth", str(default)), "depth")


def cmd_play(sc: Scenario, args, out: Path, rep: Report, force_sweep=False):
    cfg = make_config(sc.section("game"))
    depth = _depth(sc, args, 10)
    base = Path(args.spec).parent if args.spec else Path(".")
    alice = make_alice(sc.section("alice"), cfg, depth, base)
    bob = None if force_sweep else make_bob(sc.section("bob"), cfg, args.seed)
    construction = None
    if "construction" in sc.section("alice") or "dump" in sc.section("alice"):
        construction = make_construction(sc.section("alice"), depth, base)
    if bob is None:
        enum = None
        if sc.get("bob", "moves") == "children":
            R = cfg.R or 2
            enum = lambda t: SHIFT.split(t.current_ball, R if cfg.kind.value == "cantor" else 2)
        b0 = parse_ball(sc.get("bob", "b0")) if sc.get("bob", "b0") else None
        ts = exhaustive_bob(cfg, alice, depth, enum, b0)
    else:
        ts = [play(cfg, alice, bob, depth) for _ in range(_int(sc.get("run", "plays", "1"), "plays"))]
    with (out / "transcripts.jsonl").open("w") as fh:
        for t in ts:
            fh.write(t.export())
    illegal = [t for t in ts if t.final is not None and t.final.kind.value == "illegal"]
    rep.check("no illegal verdicts", not illegal, f"{len(illegal)}/{len(ts)} illegal")
    if construction is not None and cfg.kind.value == "cantor":
        inside = [t for t in ts if t.final is None and construction.is_survivor(outcome(t), t.rounds)]
        rep.check("outcomes in survivors", len(inside) == len(ts),
                  f"{len(inside)}/{len(ts)} outcomes in survivors")
    else:
        rep.note(f"{len(ts)} transcripts")


def cmd_build(sc: Scenario, args, out: Path, rep: Report):
    sec = sc.section("construction")
    depth = _depth(sc, args, 6)
    base = Path(args.spec).parent if args.spec else Path(".")
    c = make_construction(sec, depth, base)
    if not isinstance(c, CantorConstruction):
        c = c.materialise(depth)
    (out / "construction.txt").write_text(dump(c))
    rep.note("levels " + " ".join(str(len(lv)) for lv in c.levels))
    if "eps" in sec:
        report = validate_budgets(c, _frac(sec["eps"], "eps"), c.R)
        rep.check("budgets within eps bound", report.passed, "; ".join(report.lines()[:3]))
    if "expect_counts" in sec:
        want = [int(x) for x in sec["expect_counts"].split()]
        got = [len(lv) for lv in c.levels][:len(want)]
        rep.check("level counts", got == want, f"{got}")


def cmd_verify(sc: Scenario, args, out: Path, rep: Report):
    sec = sc.section("verify")
    check = sec.get("check")
    rounds = _int(sec.get("rounds", "20"), "rounds")
    if check == "lift_grid":
        values = [_frac(v, "grid") for v in sec.get("grid", "1/4 1/3 1/2").split()]
        for a0 in values:
            for b0 in values:
                a, b = st.lifted_parameters(a0, b0)
                cfg = GameConfig.schmidt(a0, b0)
                inner = st.PositionalStrategy(lambda B, a=a: Ball.interval(B.center, a * B.radius), "center")
                t = play(cfg, st.lift_schmidt_strategy(inner, a0, b0),
                         _random_bob(cfg, random.Random(args.seed), Ball.from_endpoints(0, 1)), rounds)
                rep.check(f"alpha0={a0} beta0={b0}", a * b == (a0 * b0) ** 2 and t.final is None,
                          f"alpha={a} beta={b} rounds={t.rounds}")
    elif check == "cantor_game_params":
        p = st.cantor_game_params(_frac(sec["eps0"], "eps0"), _int(sec["R"], "R"),
                                        _frac(sec.get("delta", "1"), "delta"))
        rep.note(f"eta={p.eta} eps1={p.eps1} eps2={p.eps2} ell={p.ell}")
        for k, v in p.verify().items():
            rep.check(k, v)
    elif check == "rich_reindex":
        R, ell = _int(sec["R"], "R"), _int(sec["ell"], "ell")
        depth = _int(sec.get("depth", "6"), "depth")
        c = _real_sample(R ** ell, depth)
        c2, table = cantor_mod.reindex_to_rich(c, ell, R, _frac(sec.get("eps", "1/2"), "eps"))
        agree = all(set(c2.levels[ell * k]) == set(c.levels[k]) for k in range(depth + 1))
        rep.check("survivors agree at multiples of ell", agree)
        res = cantor_mod.rich_budget_check(table, R, _frac(sec.get("y", "1/4"), "y"), ell * depth - 1)
        rep.check("rich budget", res.passed, "; ".join(res.lines()[-2:]))
    elif check == "ifs_dimension":
        lo, hi = ifs_similarity_dim(_frac(sec["lam"], "lam"), _frac(sec["gam"], "gam"))
        rep.check("similarity dimension below 1/2", hi < Fraction(1, 2), f"[{float(lo):.10f}, {float(hi):.10f}]")
    else:
        raise ParseError(f"unknown verify check {check!r}")


def _real_sample(R: int, depth: int):
    """Real-line construction removing the first child of every survivor."""

    def remover(c):
        n = c.depth
        return {(n, b): [c.structure.split(b, R)[0]] for b in c.levels[n]}

    return cantor_mod.build(Ball.from_endpoints(0, 1), R, cantor_mod.BudgetTable.diagonal(1), depth, remover)


def cmd_dim(sc: Scenario, args, out: Path, rep: Report):
    sec = sc.section("dim")
    base = Path(args.spec).parent if args.spec else Path(".")
    if "profile" in sec:
        prof = ScaleProfile.from_csv((base / sec["profile"]).read_text())
    elif sec.get("source") == "diffuse":
        depth = _depth(sc, args, 8)
        tree = diffuse_to_regular(IntervalSet(((0, 1),)), _frac(sec["beta"], "beta"), depth)
        prof = tree.profile(range(1, depth + 1))
    else:
        depth = _depth(sc, args, 10)
        c = make_construction(sec, depth, base)
        first = _int(sec.get("from", "1"), "from")
        prof = ScaleProfile.from_construction(c, range(first, depth + 1))
    (out / "profile.csv").write_text(prof.to_csv())
    est, resid = box_dimension(prof)
    rep.note(f"estimate {est:.6f} residual {resid:.3g}")
    if "expect" in sec:
        want = float(sec["expect"]) if "/" not in sec["expect"] else float(Fraction(sec["expect"]))
        tol = float(Fraction(sec.get("tol", "1/20")))
        rep.check("dimension", abs(est - want) <= tol, f"|{est:.6f} - {want:.6f}| <= {tol}")


def render_svg(c: CantorConstruction, depth: int, width: int = 800, row: int = 24) -> str:
    """Nested levels as rows of rectangles; removed balls drawn in red."""
    if depth > c.depth:
        raise DepthNotBuilt(f"depth {depth} requested, construction has {c.depth}")

    def span(b: Ball):
        if b.is_real:
            lo, hi = (b.lo - c.b0.lo) / c.b0.diameter, (b.hi - c.b0.lo) / c.b0.diameter
        else:
            w = b.word[len(c.b0.word):]
            scale = Fraction(1, 2 ** len(w))
            lo = Fraction(int(w, 2) if w else 0) * scale
            hi = lo + scale
        return float(lo * width), float((hi - lo) * width)

    removed = {}
    for (m, n, _p), balls in c.removals.items():
        if n + 1 <= depth:
            removed.setdefault(n + 1, []).extend(balls)
    height = (depth + 1) * row + 10
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 20}" height="{height}">']
    for n in range(depth + 1):
        y = 5 + n * row
        for b in removed.get(n, []):
            x, w = span(b)
            out.append(f'<rect class="removed" x="{x + 10:.6f}" y="{y}" width="{w:.6f}" '
                       f'height="{row - 8}" fill="#d62728"/>')
        for b in c.levels[n]:
            x, w = span(b)
            out.append(f'<rect class="survivor" x="{x + 10:.6f}" y="{y}" width="{w:.6f}" '
                       f'height="{row - 8}" fill="#1f1f1f"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(sc: Scenario, args, out: Path, rep: Report):
    sec = sc.section("render")
    depth = _depth(sc, args, 5)
    base = Path(args.spec).parent if args.spec else Path(".")
    c = make_construction(sec, depth, base)
    if not isinstance(c, CantorConstruction):
        c = c.materialise(depth)
    svg = render_svg(c, depth)
    (out / "levels.svg").write_text(svg)
    rep.note(f"bottom row segments {len(c.levels[depth])}")
    if "expect_bottom" in sec:
        want = _int(sec["expect_bottom"], "expect_bottom")
        rep.check("bottom row", len(c.levels[depth]) == want, f"{len(c.levels[depth])} segments")


COMMANDS: dict[str, Callable] = {
    "play": cmd_play,
    "sweep": lambda sc, a, o, r: cmd_play(sc, a, o, r, force_sweep=True),
    "build-cantor": cmd_build,
    "verify": cmd_verify,
    "dim": cmd_dim,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorgames", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--spec", help="scenario file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--depth", type=int, help="override [run] depth")
    ap.add_argument("--precision", type=int, default=128, help="enclosure precision in bits")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized players")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        sc = read_scenario(args.spec)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rep = Report(sc.name)
        with working_precision(args.precision):
            COMMANDS[args.command](sc, args, out, rep)
    except (ParseError, UnknownStrategy) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GameError as exc:
        print(f"invariant failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rep.write(out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
