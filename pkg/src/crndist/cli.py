"""Command-line front end: ``crndist {synth,analyze,simulate,verify,bound}``.

Exit status is 0 on success, 1 on invalid input and 2 on numerical failure
(cap, box or threshold exceeded); failures print one ``ERROR <code>: ...``
line to standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import synth as S
from .analysis import (
    bound_mixing_birth,
    bound_mixing_decay,
    db_stationary,
    oracle_stationary,
    solve_detailed_balance,
)
from .dist import FiniteDistribution, Mixture, PointMass, ProductPoisson, UniformBox, spec_loads, truncate
from .errors import CRNError, ValidationError
from .network import ReactionNetwork
from .sim import (
    Perturbation,
    SimConfig,
    estimate_limit,
    occupancy_tsv,
    simulate,
    trajectory_tsv,
    verify,
)

METHODS = ("full", "bimol", "spantree", "pointmass", "pmmix", "unif", "poisson", "mix", "auto")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from exc


def _perturbation(text: str) -> Perturbation:
    t, sep, dv = text.partition(":")
    if not sep:
        raise ValidationError(f"perturbation must look like 'time:d1,d2,...', got {text!r}")
    try:
        at = float(t)
    except ValueError as exc:
        raise ValidationError(f"bad perturbation time {t!r}") from exc
    return Perturbation(at, _ints(dv))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str, text: str, inputs=()):
    target = os.path.abspath(path)
    if any(p and os.path.abspath(p) == target for p in inputs):
        raise ValidationError("output path must differ from input paths")
    Path(path).write_text(text)


def _load_net(path: str) -> ReactionNetwork:
    return ReactionNetwork.loads(_read(path))


def _summary(net: ReactionNetwork) -> str:
    return (f"reactions={net.n_reactions} species={net.n_species} "
            f"max_molecularity={net.max_molecularity}")


def _need(value, flag, verb):
    if value is None:
        raise ValidationError(f"{verb}: {flag} is required")
    return value


def _finite(q, eps, method):
    if isinstance(q, FiniteDistribution):
        return q
    if eps is None:
        raise ValidationError(f"method {method} needs a finite table (or --eps to truncate)")
    return truncate(q, eps)


def cmd_synth(a) -> str:
    q = spec_loads(_read(a.dist))
    m = a.method
    if m == "full":
        res = S.synth_full(_finite(q, a.eps, m))
    elif m == "bimol":
        res = S.synth_bimolecular(_finite(q, a.eps, m))
    elif m == "spantree":
        res = S.synth_spanning_tree(_finite(q, a.eps, m))
    elif m == "pointmass":
        if isinstance(q, FiniteDistribution) and len(q) == 1:
            q = PointMass(q.support[0])
        if not isinstance(q, PointMass):
            raise ValidationError("pointmass needs a point_mass distribution")
        res = S.synth_point_mass(q.x, _need(a.eps, "--eps", "synth"))
    elif m == "pmmix":
        res = S.synth_point_mass_mix(_finite(q, a.eps, m), _need(a.delta, "--delta", "synth"))
    elif m == "unif":
        if not isinstance(q, UniformBox):
            raise ValidationError("unif needs a uniform_box distribution")
        res = S.synth_multidim_unif(q.a, q.b, _need(a.delta, "--delta", "synth"))
    elif m == "poisson":
        if not isinstance(q, ProductPoisson):
            raise ValidationError("poisson needs a product_poisson distribution")
        res = S.synth_prod_pois(q.c)
    elif m == "mix":
        if not isinstance(q, Mixture):
            raise ValidationError("mix needs a mixture distribution")
        res = S.synth_mixture_spec(q, _need(a.delta, "--delta", "synth"))
    else:
        route = "detailed_balanced" if a.route == "db" else "robust"
        res = S.compile_auto(q, _need(a.eps, "--eps", "synth"), route, a.delta)
    _write(a.out, res.dumps() + "\n", [a.dist])
    return f"synth method={res.method} {_summary(res.net)} -> {a.out}"


def cmd_analyze(a) -> str:
    net = _load_net(a.net)
    if not (a.check_db or a.stationary or a.oracle):
        raise ValidationError("analyze: choose at least one of --check-db, --stationary, --oracle")
    doc = {}
    parts = []
    x0 = _ints(a.x0) if a.x0 is not None else net.init
    if a.check_db or a.stationary:
        cert = solve_detailed_balance(net)
        if a.check_db:
            doc["detailed_balance"] = None if cert is None else cert.to_dict()
            parts.append(f"detailed_balanced={'yes' if cert is not None else 'no'}")
        if a.stationary:
            if cert is None:
                raise ValidationError("--stationary needs a detailed-balanced network")
            if x0 is None:
                raise ValidationError("--stationary needs --x0 (network has no init state)")
            table = db_stationary(net, cert, x0, a.cap)
            doc["stationary"] = table.to_dict()
            parts.append(f"class_states={len(table.dist)} M={table.normalization!r}")
    if a.oracle:
        box = _ints(_need(a.box, "--box", "analyze"))
        table = oracle_stationary(net, box, _ints(a.x0) if a.x0 is not None else None)
        doc["oracle"] = table.to_dict()
        parts.append(f"box_states={table.diagnostics['n_states']} "
                     f"boundary_outflow={table.boundary_outflow!r}")
    _write(a.out, json.dumps(doc, indent=2) + "\n", [a.net])
    return f"analyze {_summary(net)} " + " ".join(parts) + f" -> {a.out}"


def _sim_config(a) -> SimConfig:
    return SimConfig(float(_need(a.t, "--t", a.verb)), int(a.seed), float(a.burn_in),
                     int(a.max_events), a.backend)


def cmd_simulate(a) -> str:
    net = _load_net(a.net)
    x0 = _ints(a.x0) if a.x0 is not None else net.init
    if x0 is None:
        raise ValidationError("simulate: --x0 is required (network has no init state)")
    cfg = _sim_config(a)
    perts = [_perturbation(p) for p in a.perturb or []]
    visible = net.visible
    est = estimate_limit(net, x0, cfg, visible, a.replicates, perts)
    names = [net.species[i] for i in visible]
    _write(a.out, occupancy_tsv(est.dist, names), [a.net])
    msg = (f"simulate {_summary(net)} replicates={est.replicates} events={est.events} "
           f"spread={est.spread!r}")
    if est.truncated_by_cap:
        msg += " truncated_by_cap=yes"
    if a.trajectory:
        res = simulate(net, x0, cfg, perts, record_trajectory=True)
        _write(a.trajectory, trajectory_tsv(res, net.species), [a.net, a.out])
        msg += f" trajectory={a.trajectory}"
    return msg + f" -> {a.out}"


def cmd_verify(a) -> str:
    net = _load_net(a.net)
    target = spec_loads(_read(a.dist))
    params = {}
    if a.x0 is not None:
        params["x0"] = _ints(a.x0)
    if a.mode == "exact":
        params["cap"] = a.cap
    elif a.mode == "oracle":
        params["box"] = _ints(_need(a.box, "--box", "verify"))
    else:
        params["cfg"] = _sim_config(a)
        params["replicates"] = a.replicates
    report = verify(net, target, None, a.mode, **params)
    _write(a.out, json.dumps(report.to_dict(), indent=2) + "\n", [a.net, a.dist])
    return f"verify mode={a.mode} {_summary(net)} distance={report.distance!r} -> {a.out}"


def cmd_bound(a) -> str:
    if a.kind == "decay":
        b = bound_mixing_decay(a.k1, a.k2, a.eps)
    else:
        b = bound_mixing_birth(_need(a.x, "--x", "bound"), a.k1, a.k2, a.eps)
    if a.out:
        _write(a.out, json.dumps(b.to_dict(), indent=2) + "\n")
    line = f"bound kind={b.kind} level={b.level!r} bound={b.bound:.6f}"
    if b.threshold is not None:
        line += f" threshold={b.threshold!r}"
    return line


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crndist", description="Compile distributions into reaction networks and verify them.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="build a network for a target distribution")
    s.add_argument("--dist", required=True, help="target distribution JSON")
    s.add_argument("--method", required=True, choices=METHODS, help="construction to apply")
    s.add_argument("--eps", type=float, help="accuracy (pointmass, auto, truncation)")
    s.add_argument("--delta", type=float, help="rate scale (pmmix, unif, mix, auto)")
    s.add_argument("--route", choices=("db", "robust"), default="robust", help="route for --method auto")
    s.add_argument("--out", required=True, help="network JSON to write")

    an = sub.add_parser("analyze", help="certificates and stationary laws")
    an.add_argument("--net", required=True, help="network JSON")
    an.add_argument("--check-db", action="store_true", help="search for a detailed-balance certificate")
    an.add_argument("--stationary", action="store_true", help="product-form law over the class of --x0")
    an.add_argument("--x0", help="initial state c1,c2,... (default: network init)")
    an.add_argument("--cap", type=int, default=100_000, help="reachability cap")
    an.add_argument("--oracle", action="store_true", help="truncated-generator solve")
    an.add_argument("--box", help="per-species upper bounds b1,b2,...")
    an.add_argument("--out", required=True, help="analysis JSON to write")

    def sim_flags(q, need_t):
        q.add_argument("--x0", help="initial state (default: network init)")
        q.add_argument("--t", type=float, required=need_t, help="simulated time horizon")
        q.add_argument("--seed", type=int, default=0, help="base seed; replicate k uses seed+k")
        q.add_argument("--burn-in", type=float, default=0.1, help="discarded fraction of the horizon")
        q.add_argument("--replicates", type=int, default=1, help="independent runs pooled")
        q.add_argument("--max-events", type=int, default=10**9, help="event cap per run")
        q.add_argument("--backend", choices=("numba", "python"), help="SSA kernel (same output)")

    sm = sub.add_parser("simulate", help="exact stochastic simulation")
    sm.add_argument("--net", required=True, help="network JSON")
    sim_flags(sm, True)
    sm.add_argument("--perturb", action="append", metavar="T:DV",
                    help="add deltas DV (comma-separated) at time T; repeatable")
    sm.add_argument("--trajectory", help="also write the first replicate's path as TSV")
    sm.add_argument("--out", required=True, help="occupancy TSV to write")

    v = sub.add_parser("verify", help="distance of the visible limit law to a target")
    v.add_argument("--net", required=True, help="network JSON")
    v.add_argument("--dist", required=True, help="target distribution JSON")
    v.add_argument("--mode", required=True, choices=("exact", "oracle", "sim"), help="computation route")
    v.add_argument("--cap", type=int, default=100_000, help="exact: reachability cap")
    v.add_argument("--box", help="oracle: per-species upper bounds")
    sim_flags(v, False)
    v.add_argument("--out", required=True, help="report JSON to write")

    b = sub.add_parser("bound", help="mixing-time bounds")
    b.add_argument("--kind", required=True, choices=("decay", "birth"), help="network family")
    b.add_argument("--k1", type=float, required=True, help="first rate constant")
    b.add_argument("--k2", type=float, required=True, help="second rate constant")
    b.add_argument("--x", type=int, help="birth: target count")
    b.add_argument("--eps", type=float, required=True, help="accuracy level")
    b.add_argument("--out", help="optional JSON to write")
    return p


COMMANDS = {"synth": cmd_synth, "analyze": cmd_analyze, "simulate": cmd_simulate,
            "verify": cmd_verify, "bound": cmd_bound}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            line = COMMANDS[args.verb](args)
        for w in caught:
            print(f"WARNING: {w.message}", file=sys.stderr)
    except CRNError as exc:
        print(f"ERROR {exc.exit_code}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(line)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
