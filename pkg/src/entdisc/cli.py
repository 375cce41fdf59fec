"""Command-line entry point.

Subcommands::

    state make|validate     channel classify     detect
    construct               verify               simulate
    report                  pipeline

Exit status is 0 on success, 1 on a domain error (a JSON object
``{"error": code, "detail": ...}`` goes to stderr) and 2 on usage errors.
The output directory defaults to ``$ENTDISC_OUTDIR`` when set.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import chanrep as cr
from . import construct as co
from . import detect as de
from . import discriminate as di
from . import matcore as mc
from . import states as st
from .errors import DimensionMismatch, EntdiscError, InconsistentProvenance, MalformedInput, NotDetected

OUTDIR_ENV = "ENTDISC_OUTDIR"


class FileError(EntdiscError):
    pass


# -- I/O helpers -----------------------------------------------------------


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc.strerror}") from exc


def _parse_json(data: bytes, path):
    try:
        return json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write_json(path, obj):
    Path(path).write_text(_dump(obj))


def _fmt(x) -> str:
    return f"{x:.12g}"


class Run:
    """Collects provenance for one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.command = " ".join(["entdisc", *argv])
        self.inputs = {}
        self.seeds = {}
        self.started = None if args.no_timestamp else _now()

    def read_input(self, path):
        """Parse a JSON input file, recording the hash of the exact bytes read."""
        data = _read_bytes(path)
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return _parse_json(data, path)

    def provenance(self, **extra) -> dict:
        prov = {
            "toolVersion": __version__,
            "command": self.command,
            "seeds": self.seeds,
            "rngAlgorithm": di.RNG_ALGORITHM,
            "tolerances": mc.DEFAULT_TOL.to_dict(),
            "inputHashes": self.inputs,
        }
        if self.started is not None:
            prov["timestamps"] = {"started": self.started, "finished": _now()}
        prov.update(extra)
        return prov


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _load_state(run: Run, path) -> st.DensityMatrix:
    return st.state_from_json(run.read_input(path))


def _load_channel(run: Run, path) -> cr.Superoperator:
    return cr.channel_from_json(run.read_input(path))


def _outdir(arg) -> Path:
    out = Path(arg or os.environ.get(OUTDIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- state / channel -------------------------------------------------------


def _make_state(args) -> st.DensityMatrix:
    kind = args.kind
    if kind == "bell":
        return st.bell_state(args.d)
    if kind == "isotropic":
        return st.isotropic_state(args.d, args.visibility)
    dims = tuple(args.dims) if args.dims else (args.d, args.d)
    if kind == "random-pure":
        return st.pure_state(st.random_pure_vector(int(np.prod(dims)), args.seed), dims)
    if kind == "random":
        return st.sample_random_state(dims, args.seed)
    if kind == "separable":
        return st.sample_separable(dims, args.terms, args.seed)[1]
    if kind == "maximally-mixed":
        return st.maximally_mixed(dims)
    raise MalformedInput(f"unknown state kind {kind!r}")


def cmd_state_make(run, args):
    state = _make_state(args)
    run.seeds["state"] = args.seed
    out = st.state_to_json(state)
    out["provenance"] = run.provenance(kind=args.kind)
    text = _dump(out)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_state_validate(run, args):
    state = _load_state(run, args.file)
    w = mc.eigvalsh(state.mat)
    _emit({"valid": True, "dims": list(state.dims), "minEigenvalue": float(w[-1]), "purity": mc.purity(state.mat)})


def cmd_channel_classify(run, args):
    s = _load_channel(run, args.file)
    rep = cr.classify(s)
    out = {
        "hermiticityPreserving": rep.hermiticity_preserving,
        "tracePreserving": rep.trace_preserving,
        "traceAnnihilating": rep.trace_annihilating,
        "completelyPositive": rep.completely_positive,
        "isChannel": rep.is_channel,
        "maxViolation": rep.max_violation,
    }
    _emit(out)


def _emit(obj):
    sys.stdout.write(_dump(obj))


# -- detect / construct ----------------------------------------------------


def _maps_for(state, name):
    return [de.get_map(name, state.dims[0])] if name else None


def cmd_detect(run, args):
    state = _load_state(run, args.state)
    det = de.detect_entanglement(state, _maps_for(state, args.map))
    _emit(det.to_dict())


def _build(state, args):
    """Returns (pair, provenance fields, negativity result)."""
    if args.closed_form_transpose:
        dx = state.dims[0]
        pair = co.transpose_channels_closed_form(dx)
        neg = de.negativity(cr.transpose_map(dx), state)
        info = {"map": "transpose", "route": "closed-form", "lambda": 1.0}
    else:
        con = co.state_to_channels(state, args.map, args.xi)
        pair, neg = con.pair, con.negativity
        info = {"map": con.map.name, "route": "pipeline", "lambda": con.normalization.lam}
    info.update(
        c=pair.c,
        xiMode=pair.xi_mode,
        dIn=pair.psi0.d_in,
        dOut=pair.psi0.d_out,
        appendedCoordinate="last basis vector of the output space",
        jordanCutoff=mc.DEFAULT_TOL.eigen_zero,
        discardedMass=pair.discarded_mass,
        detectionThreshold=de.DETECTION_THRESHOLD,
        negativity=neg.value,
        phiTPDigest=pair.phi_tp_digest,
    )
    return pair, info, neg


def _eb(pair, spec):
    if spec is None:
        return None
    if spec == "auto":
        return co.eb_mix(pair)
    try:
        p = float(spec)
    except ValueError as exc:
        raise MalformedInput(f"--eb takes a number in (0, 1] or 'auto', got {spec!r}") from exc
    return co.eb_mix(pair, p)


def cmd_construct(run, args):
    state = _load_state(run, args.state)
    pair, info, _ = _build(state, args)
    out = _outdir(args.output)
    eb = _eb(pair, args.eb)
    prov = run.provenance(construction=info)
    if eb is not None:
        prov["eb"] = {"p": eb.p, "ballCertified": eb.ball_certified, "requested": args.eb}
    for name, s in (("psi0", pair.psi0), ("psi1", pair.psi1)):
        _write_json(out / f"{name}.json", {**cr.channel_to_json(s), "provenance": prov})
    if eb is not None:
        for name, s in (("eb0", eb.xi0), ("eb1", eb.xi1)):
            _write_json(out / f"{name}.json", {**cr.channel_to_json(s), "provenance": prov})
    _write_json(out / "provenance.json", prov)
    _emit({"outdir": str(out), **info})


# -- verify / simulate -----------------------------------------------------


def _pair_from_provenance(psi0, psi1, prov) -> co.ChannelPair:
    info = prov.get("construction", {})
    if "c" not in info or "map" not in info:
        raise InconsistentProvenance("provenance lacks construction.c / construction.map")
    d = psi0.d_in
    if info.get("route") == "closed-form":
        phi_tp = cr.transpose_map(d)
    else:
        phi_tp = co.normalize_to_tp(de.get_map(info["map"], d)).phi_tp
    ta = co.ta_from_tp(phi_tp)
    c = float(info["c"])
    if (ta.d_in, ta.d_out) != (psi0.d_in, psi0.d_out) or mc.max_abs_diff(psi0.choi - psi1.choi, c * ta.choi) > 1e-9:
        raise InconsistentProvenance("channels do not match c times the recorded trace-annihilating map")
    return co.ChannelPair(psi0, psi1, c, None, None, ta, phi_tp.digest(), info.get("xiMode", "unknown"))


def _provenance_for(run, args):
    if args.provenance:
        return run.read_input(args.provenance)
    guess = Path(args.psi0).parent / "provenance.json"
    return run.read_input(guess) if guess.exists() else None


def _check_dims(state, psi0, psi1):
    if (psi0.d_in, psi0.d_out) != (psi1.d_in, psi1.d_out):
        raise DimensionMismatch(f"channels {psi0.d_in}->{psi0.d_out} and {psi1.d_in}->{psi1.d_out} differ")
    if not state.is_bipartite or state.dims[0] != psi0.d_in:
        raise DimensionMismatch(f"state dims {list(state.dims)} do not match channel input {psi0.d_in}")


def verify_report(state, psi0, psi1, prov, restarts, seed) -> dict:
    _check_dims(state, psi0, psi1)
    if prov is None:
        rep = di.channel_report(psi0, psi1, state, restarts, seed)
    else:
        pair = _pair_from_provenance(psi0, psi1, prov)
        neg = de.negativity(_phi_tp_for(pair, prov), state)
        rep = di.advantage_report(pair, state, neg, restarts, seed)
    return rep.to_dict()


def _phi_tp_for(pair, prov):
    info = prov["construction"]
    d = pair.psi0.d_in
    if info.get("route") == "closed-form":
        return cr.transpose_map(d)
    return co.normalize_to_tp(de.get_map(info["map"], d))


def cmd_verify(run, args):
    state = _load_state(run, args.state)
    psi0, psi1 = _load_channel(run, args.psi0), _load_channel(run, args.psi1)
    prov = _provenance_for(run, args)
    run.seeds["seesaw"] = args.seed
    report = verify_report(state, psi0, psi1, prov, args.restarts, args.seed)
    report["provenance"] = run.provenance()
    text = _dump(report)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


def simulate_block(state, psi0, psi1, shots, seed, restarts) -> dict:
    _check_dims(state, psi0, psi1)
    out = {}
    probe_out = di.output_states(psi0, psi1, state)
    h = di.helstrom(*probe_out)
    sim = di.simulate_experiment(*probe_out, (h.m0, h.m1), shots, seed)
    out["probe"] = {**sim.to_dict(), "pErrorMin": h.p_error_min, "traceDistance": h.trace_distance}
    best = di.channel_distance_no_ancilla(psi0, psi1, restarts, seed).best_input
    prod_out = di.output_states(psi0, psi1, st.DensityMatrix(mc.projector(best), (psi0.d_in,)))
    h2 = di.helstrom(*prod_out)
    sim2 = di.simulate_experiment(*prod_out, (h2.m0, h2.m1), shots, seed + 1)
    out["bestProduct"] = {**sim2.to_dict(), "pErrorMin": h2.p_error_min, "traceDistance": h2.trace_distance}
    out["separatedBeyondCI95"] = bool(
        abs(sim.success_rate - sim2.success_rate) > sim.ci95 + sim2.ci95
    )
    return out


def cmd_simulate(run, args):
    state = _load_state(run, args.state)
    psi0, psi1 = _load_channel(run, args.psi0), _load_channel(run, args.psi1)
    run.seeds["simulate"] = args.seed
    out = simulate_block(state, psi0, psi1, args.shots, args.seed, args.restarts)
    out["provenance"] = run.provenance()
    text = _dump(out)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


# -- report / pipeline -----------------------------------------------------

SWEEP_COLUMNS = ["visibility", "negativity", "probeDistance", "separableBound", "advantage"]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def cmd_report(run, args):
    if args.sweep != "isotropic":
        raise MalformedInput(f"unknown sweep {args.sweep!r}")
    rows = di.isotropic_sweep(args.d, args.steps, restarts=args.restarts, seed=args.seed)
    text = sweep_csv(rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


SUMMARY_COLUMNS = [
    "route", "map", "p", "c", "negativity", "separableBound", "closedFormBound",
    "probeDistance", "advantage", "predictedAdvantage", "simulatedProbe", "simulatedBestProduct",
]


def _summary_row(route, map_name, p, rep, sim):
    return {
        "route": route,
        "map": map_name,
        "p": p,
        "c": rep["c"],
        "negativity": rep["negativity"],
        "separableBound": rep["separable_bound"],
        "closedFormBound": rep["closed_form_bound"],
        "probeDistance": rep["probe_distance"],
        "advantage": rep["advantage"],
        "predictedAdvantage": rep["predicted_advantage"],
        "simulatedProbe": sim["probe"]["success_rate"],
        "simulatedBestProduct": sim["bestProduct"]["success_rate"],
    }


def _write_summary(out: Path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[k]) if isinstance(r[k], float) else r[k] for k in SUMMARY_COLUMNS])
    (out / "summary.csv").write_text(buf.getvalue())
    lines = []
    for r in rows:
        lines.append(
            f"{r['route']:<10} map={r['map']:<10} p={_fmt(r['p'])} c={_fmt(r['c'])} "
            f"N={_fmt(r['negativity'])} sep={_fmt(r['separableBound'])} "
            f"probe={_fmt(r['probeDistance'])} advantage={_fmt(r['advantage'])}"
        )
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def cmd_pipeline(run, args):
    out = _outdir(args.output)
    (out / "FAILED").unlink(missing_ok=True)
    stage = "load"
    try:
        state = _load_state(run, args.state)
        run.seeds.update(seesaw=args.seed, simulate=args.seed)
        stage = "detect"
        det = de.detect_entanglement(state, _maps_for(state, args.map))
        _write_json(out / "detect.json", {**det.to_dict(), "provenance": run.provenance()})
        if not det.detected:
            raise NotDetected("no registry map detects the state")
        stage = "construct"
        pair, info, neg = _build(state, args)
        prov = run.provenance(construction=info)
        for name, s in (("psi0", pair.psi0), ("psi1", pair.psi1)):
            _write_json(out / f"{name}.json", {**cr.channel_to_json(s), "provenance": prov})
        _write_json(out / "provenance.json", prov)
        stage = "verify"
        rep = di.advantage_report(pair, state, neg, args.restarts, args.seed).to_dict()
        _write_json(out / "report.json", {**rep, "provenance": run.provenance()})
        stage = "simulate"
        sim = simulate_block(state, pair.psi0, pair.psi1, args.shots, args.seed, args.restarts)
        _write_json(out / "simulate.json", {**sim, "provenance": run.provenance()})
        rows = [_summary_row(info["route"], info["map"], 1.0, rep, sim)]
        if args.eb is not None:
            stage = "eb"
            eb = _eb(pair, args.eb)
            eb_rep = di.channel_report(eb.xi0, eb.xi1, state, args.restarts, args.seed, closed_form=eb.p * 2 * pair.c)
            eb_rep.c = eb.p * pair.c
            eb_rep.negativity = neg.value
            eb_rep.predicted_advantage = 2 * eb.p * pair.c * neg.value
            eb_dict = eb_rep.to_dict()
            eb_dict.update(p=eb.p, ballCertified=eb.ball_certified)
            _write_json(out / "eb_report.json", {**eb_dict, "provenance": run.provenance()})
            for name, s in (("eb0", eb.xi0), ("eb1", eb.xi1)):
                _write_json(out / f"{name}.json", {**cr.channel_to_json(s), "provenance": prov})
            eb_sim = simulate_block(state, eb.xi0, eb.xi1, args.shots, args.seed, args.restarts)
            rows.append(_summary_row("eb", info["map"], eb.p, eb_dict, eb_sim))
        stage = "summary"
        _write_summary(out, rows)
    except EntdiscError as exc:
        (out / "FAILED").write_text(_dump({"stage": stage, **exc.to_dict()}))
        raise
    _emit({"outdir": str(out), "rows": rows})


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entdisc", description="Entanglement-assisted channel discrimination toolkit")
    p.add_argument("--version", action="version", version=f"entdisc {__version__}")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps so outputs are byte-reproducible")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("state", help="create or validate state files")
    ssub = sp.add_subparsers(dest="action", required=True)
    mk = ssub.add_parser("make")
    mk.add_argument("--kind", required=True,
                    choices=["bell", "isotropic", "random-pure", "random", "separable", "maximally-mixed"])
    mk.add_argument("--d", type=int, default=2)
    mk.add_argument("--dims", type=int, nargs=2, metavar=("DX", "DZ"))
    mk.add_argument("--visibility", type=float, default=1.0)
    mk.add_argument("--terms", type=int, default=4)
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("-o", "--output")
    mk.set_defaults(func=cmd_state_make)
    va = ssub.add_parser("validate")
    va.add_argument("file")
    va.set_defaults(func=cmd_state_validate)

    cp = sub.add_parser("channel", help="inspect channel files")
    csub = cp.add_subparsers(dest="action", required=True)
    cl = csub.add_parser("classify")
    cl.add_argument("file")
    cl.set_defaults(func=cmd_channel_classify)

    dp = sub.add_parser("detect", help="look for a positive map detecting the state")
    dp.add_argument("state")
    dp.add_argument("--map")
    dp.set_defaults(func=cmd_detect)

    def construct_flags(q):
        q.add_argument("--map")
        q.add_argument("--closed-form-transpose", action="store_true")
        q.add_argument("--eb", metavar="p|auto")
        q.add_argument("--xi", choices=[co.XI_BLOCK, co.XI_PURIFICATION], default=co.XI_BLOCK)

    def search_flags(q):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--restarts", type=int, default=di.SEESAW_RESTARTS)

    cn = sub.add_parser("construct", help="build the channel pair for a detected state")
    cn.add_argument("state")
    construct_flags(cn)
    cn.add_argument("-o", "--output")
    cn.set_defaults(func=cmd_construct)

    vf = sub.add_parser("verify", help="certify discrimination quantities for a state and channel pair")
    vf.add_argument("state")
    vf.add_argument("psi0")
    vf.add_argument("psi1")
    vf.add_argument("--provenance", help="construction provenance (default: provenance.json beside psi0)")
    search_flags(vf)
    vf.add_argument("-o", "--output")
    vf.set_defaults(func=cmd_verify)

    sm = sub.add_parser("simulate", help="Monte-Carlo of the measurement experiment")
    sm.add_argument("state")
    sm.add_argument("psi0")
    sm.add_argument("psi1")
    sm.add_argument("--shots", type=int, default=100_000)
    search_flags(sm)
    sm.add_argument("-o", "--output")
    sm.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("report", help="parameter sweeps as CSV")
    rp.add_argument("--sweep", required=True, choices=["isotropic"])
    rp.add_argument("--d", type=int, default=2)
    rp.add_argument("--steps", type=int, default=11)
    search_flags(rp)
    rp.add_argument("-o", "--output")
    rp.set_defaults(func=cmd_report)

    pl = sub.add_parser("pipeline", help="detect -> construct -> verify -> simulate into one directory")
    pl.add_argument("state")
    construct_flags(pl)
    search_flags(pl)
    pl.add_argument("--shots", type=int, default=100_000)
    pl.add_argument("-o", "--output")
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(Run(args, argv), args)
    except EntdiscError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
