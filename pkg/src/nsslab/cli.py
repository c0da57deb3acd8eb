"""Command-line front end.

One process, one run: every subcommand computes its full report in memory
first and only then writes, so a refusal (size cap, bad input) never leaves
a partial output file.  All randomness flows from a single seed through
counter-based splittable streams, making reports byte-identical across
reruns and across worker counts.

Exit codes: 0 success, 2 validation failure, 3 convergence failure,
4 resource-limit refusal.
"""

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_RESOURCE = 4


def _limit_threads() -> None:
    """Respect NSSLAB_THREADS for BLAS pools too, before numpy loads."""
    want = os.environ.get("NSSLAB_THREADS")
    if not want:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, want)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nsslab",
        description="Sector decomposition, toric codes, error-correction "
                    "checks, and anyon trajectories.")
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp):
        sp.add_argument("--config", metavar="PATH",
                        help="JSON file supplying any flag value and tolerance "
                             "overrides; explicit flags win")
        sp.add_argument("--seed", type=int, default=None,
                        help="64-bit seed for every random draw "
                             "(default 0x5EEDC0DE)")
        sp.add_argument("--output", metavar="PATH", default=None,
                        help="write the report here instead of stdout")

    sp = sub.add_parser("decompose",
                        help="irreducible sector structure of an error algebra")
    sp.add_argument("--input", metavar="PATH", default=None,
                    help="error-set JSON (matrices as [re, im] pair arrays)")
    sp.add_argument("--matrices", action="store_true",
                    help="embed projectors and isometries in the report")
    common(sp)

    sp = sub.add_parser("toric", help="build a torus lattice; emit its "
                                      "serialization or a spectral report")
    sp.add_argument("--l1", type=int, default=None)
    sp.add_argument("--l2", type=int, default=None)
    sp.add_argument("--report", action="store_true",
                    help="emit code dimension and low spectrum instead of "
                         "the lattice serialization")
    sp.add_argument("--h", type=float, default=None,
                    help="perturbation strength for --report (default 0)")
    sp.add_argument("--perturbation", default=None,
                    help="perturbation kind for --report (default z_field)")
    common(sp)

    sp = sub.add_parser("kl-check",
                        help="exact correctability verdicts for local Paulis")
    sp.add_argument("--l1", type=int, default=None)
    sp.add_argument("--l2", type=int, default=None)
    sp.add_argument("--max-weight", type=int, default=None,
                    help="check all Paulis up to this weight (default 2)")
    common(sp)

    sp = sub.add_parser("scaling",
                        help="splitting vs lattice size as CSV")
    sp.add_argument("--sizes", default=None,
                    help="comma list like 2x2,2x3,2x4")
    sp.add_argument("--h", type=float, default=None,
                    help="perturbation strength (default 0.1)")
    sp.add_argument("--perturbation", default=None,
                    help="one of the perturbation kinds (default z_field)")
    sp.add_argument("--format", dest="fmt", choices=("csv", "json"),
                    default=None, help="csv (default) or full json report")
    common(sp)

    sp = sub.add_parser("braid",
                        help="replay an anyon trajectory script")
    sp.add_argument("--l1", type=int, default=None)
    sp.add_argument("--l2", type=int, default=None)
    sp.add_argument("--script", metavar="PATH", default=None,
                    help="JSON list of operations {op, ...args}")
    sp.add_argument("--sector", default=None,
                    help="initial Z-loop sector, e.g. 1,1 (default 1,1)")
    common(sp)
    return p


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _merge(args, keys):
    """Resolved option dict: explicit flag > config file > None."""
    doc = _load_config_file(args.config) if args.config else {}
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        # store_true flags read False when absent; let the config file speak.
        # Identity checks, not equality: 0 and 0.0 are real values, not "unset"
        unset = flag is None or flag is False
        out[key] = doc.get(key) if unset else flag
    out["tolerances"] = doc.get("tolerances", {})
    if not isinstance(out["tolerances"], dict):
        raise ValueError("config 'tolerances' must be an object")
    return out


def _engine_config(opts):
    from .config import DEFAULT_CONFIG

    overrides = dict(opts.get("tolerances") or {})
    if opts.get("seed") is not None:
        overrides["seed"] = int(opts["seed"])
    try:
        return DEFAULT_CONFIG.override(**overrides)
    except KeyError as exc:
        raise ValueError(f"bad tolerance override: {exc}") from exc


def _json_report(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _require(opts, *keys):
    for k in keys:
        if opts.get(k) is None:
            raise ValueError(f"missing required option --{k.replace('_', '-')}")


# ------------------------------------------------------------- subcommands

def _cmd_decompose(opts) -> str:
    from .algebra import close_algebra, decompose, decomposition_to_json, \
        error_set_from_json

    _require(opts, "input")
    cfg = _engine_config(opts)
    try:
        with open(opts["input"], "r", encoding="utf-8") as fh:
            errs = error_set_from_json(fh.read())
    except OSError as exc:
        raise ValueError(f"cannot read input: {exc}") from exc
    alg = close_algebra(errs, cfg)
    dec = decompose(alg, cfg)
    return decomposition_to_json(dec, include_matrices=bool(opts.get("matrices")))


def _cmd_toric(opts) -> str:
    from .lattice import build_torus, check_rank, code_dimension, \
        lattice_to_json
    from .verify import perturbation_terms, spectrum

    _require(opts, "l1", "l2")
    cfg = _engine_config(opts)
    lat = build_torus(int(opts["l1"]), int(opts["l2"]))
    if not opts.get("report"):
        return lattice_to_json(lat)
    h = float(opts.get("h") or 0.0)
    kind = opts.get("perturbation") or "z_field"
    pert = perturbation_terms(lat, kind) if h else None
    rep = spectrum(lat, pert, h, cfg)
    return _json_report({
        "l1": lat.L1,
        "l2": lat.L2,
        "n_qubits": lat.n_qubits,
        "check_rank": check_rank(lat),
        "code_dimension": code_dimension(lat),
        "h": h,
        "perturbation": kind if h else None,
        "energies": list(rep.energies),
        "ground_energy": rep.energies[0],
        "ground_degeneracy": rep.ground_degeneracy,
        "gap": rep.gap_delta,
        "splitting": rep.splitting,
    })


def _cmd_kl_check(opts) -> str:
    from .lattice import build_torus, homology_basis
    from .pauli import format_pauli, weight
    from .verify import kl_check_stabilizer, local_error_generators

    _require(opts, "l1", "l2")
    _engine_config(opts)  # validates tolerance overrides even if unused here
    lat = build_torus(int(opts["l1"]), int(opts["l2"]))
    max_w = int(opts.get("max_weight") or 2)
    if max_w < 0:
        raise ValueError("--max-weight must be >= 0")
    errors = local_error_generators(lat, max_w, loop_commuting=False)
    rep = kl_check_stabilizer(lat, errors)
    logicals = [lab for lab, dev in rep.per_error if dev > 0.5]
    loops = homology_basis(lat)
    loop_rep = kl_check_stabilizer(lat, [lo.op for lo in loops],
                                   labels=[lo.homology_class for lo in loops])
    return _json_report({
        "l1": lat.L1,
        "l2": lat.L2,
        "max_weight": max_w,
        "errors_checked": len(errors),
        "max_deviation": rep.max_deviation,
        "logical_count": len(logicals),
        "logical_examples": logicals[:8],
        "weights": sorted({weight(e) for e in errors}),
        "loop_deviations": {lab: dev for lab, dev in loop_rep.per_error},
        "first_error": format_pauli(errors[0]) if errors else None,
    })


def _cmd_scaling(opts) -> str:
    from .verify import scaling_study, scaling_to_csv

    _require(opts, "sizes")
    cfg = _engine_config(opts)
    sizes = []
    raw = opts["sizes"]
    parts = raw.split(",") if isinstance(raw, str) else list(raw)
    for part in parts:
        if isinstance(part, str):
            bits = part.lower().split("x")
            if len(bits) != 2:
                raise ValueError(f"bad size {part!r}; want L1xL2")
            part = bits
        try:
            sizes.append((int(part[0]), int(part[1])))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad size entry {part!r}") from exc
    h = float(opts.get("h") if opts.get("h") is not None else 0.1)
    kind = opts.get("perturbation") or "z_field"
    result = scaling_study(sizes, h, kind, cfg)
    if (opts.get("fmt") or "csv") == "csv":
        return scaling_to_csv(result)
    return _json_report({
        "points": [list(p) for p in result.points],
        "rows": [[r.L1, r.L2, r.h, r.splitting, r.gap, r.coupling_k,
                  r.deviation_max] for r in result.rows],
        "fit_alpha": result.fit_alpha,
        "fit_n": result.fit_n,
        "fit_residual": result.fit_residual,
        "fits": {str(n): list(v) for n, v in result.fits.items()},
        "degenerate": result.degenerate,
        "notes": list(result.notes),
    })


def _cmd_braid(opts) -> str:
    from .anyon import run_trajectory
    from .lattice import build_torus

    _require(opts, "l1", "l2", "script")
    _engine_config(opts)
    try:
        with open(opts["script"], "r", encoding="utf-8") as fh:
            script = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read script: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"script is not valid JSON: {exc}") from exc
    if not isinstance(script, list):
        raise ValueError("script must be a JSON list of operations")
    sector = opts.get("sector") or "1,1"
    if isinstance(sector, str):
        sector = [int(x) for x in sector.split(",")]
    sector = tuple(int(x) for x in sector)
    lat = build_torus(int(opts["l1"]), int(opts["l2"]))
    report = run_trajectory(lat, script, sector)
    return _json_report(report)


_COMMANDS = {
    "decompose": (_cmd_decompose,
                  ("input", "matrices", "seed", "output")),
    "toric": (_cmd_toric,
              ("l1", "l2", "report", "h", "perturbation", "seed", "output")),
    "kl-check": (_cmd_kl_check,
                 ("l1", "l2", "max_weight", "seed", "output")),
    "scaling": (_cmd_scaling,
                ("sizes", "h", "perturbation", "fmt", "seed", "output")),
    "braid": (_cmd_braid,
              ("l1", "l2", "script", "sector", "seed", "output")),
}


def main(argv=None) -> int:
    _limit_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION

    from .config import ConvergenceError, DegenerateSpectrumError, \
        ResourceLimitError

    handler, keys = _COMMANDS[args.command]
    try:
        opts = _merge(args, keys)
        text = handler(opts)
    except ResourceLimitError as exc:
        print(f"nsslab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConvergenceError, DegenerateSpectrumError) as exc:
        print(f"nsslab: convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, KeyError) as exc:
        print(f"nsslab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out = opts.get("output")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
