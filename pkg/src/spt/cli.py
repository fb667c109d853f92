"""Command-line front end: ``spt {reduce,table,group,scaling,simulate}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

from spt.encode import EncodingError, EncodingSpec
from spt.fermion import FermionOperator
from spt.group import group_strings
from spt.pauli import DimensionError, PauliString, PauliSum
from spt.reduce import TargetNotInSpanError, count_table, reduce_measurements
from spt.symproj import UnsupportedSymmetryError, parse_symmetries

log = logging.getLogger("spt")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    mapping: str = "jw"
    mappings: list[str] = field(default_factory=lambda: ["jw"])
    symmetries: str = "n,sz"
    symmetry_sets: list[tuple[str, ...]] = field(default_factory=list)
    layout: str = "blocked"
    qubits: list[int] = field(default_factory=list)
    krdm: int = 2
    fit: bool = False
    seed: int | None = None
    shots: int | None = 8192
    input: str | None = None
    out: str | None = None
    csv: str | None = None
    fmt: str = "json"


# -- parsing helpers ----------------------------------------------------------------


def parse_range(text: str) -> list[int]:
    """``a:b[:step]`` inclusive of ``b``, or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(2)
            a, b, step = parts
            if step <= 0 or a > b:
                raise ValueError
            return list(range(a, b + 1, step))
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise UsageError(f"bad qubit range {text!r}; expected start:stop[:step]") from None


def parse_symmetry_sets(text: str) -> list[tuple[str, ...]]:
    """Comma-separated sets, each ``+``-joined: ``none,n,n+sz``."""
    enc = EncodingSpec("jw", 2)
    out = []
    for chunk in text.split(","):
        try:
            out.append(tuple(s.name for s in parse_symmetries(chunk.replace("+", ","), enc)))
        except UnsupportedSymmetryError as exc:
            raise UsageError(str(exc)) from None
    return out


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from None


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _apply_thread_cap() -> None:
    cap = os.environ.get("SPT_THREADS")
    if not cap:
        return
    try:
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))
    except (ValueError, ImportError):
        log.warning("ignoring SPT_THREADS=%r", cap)


# -- subcommands -------------------------------------------------------------------------


def _encoding(cfg: RunConfig, n_modes: int, spins: str | None) -> EncodingSpec:
    mode_spins = None
    if spins:
        mode_spins = tuple({"a": "a", "α": "a", "b": "b", "β": "b"}[c] for c in spins)
    return EncodingSpec.make(cfg.mapping, n_modes, cfg.layout, mode_spins)


def _load_targets(data) -> tuple[int, dict]:
    if "targets" in data:
        ops = {str(k): FermionOperator.from_json(v) for k, v in data["targets"].items()}
        sizes = {op.n_modes for op in ops.values()}
        if len(sizes) != 1:
            raise DataError("all targets must share one mode count")
        return sizes.pop(), ops
    op = FermionOperator.from_json(data)
    return op.n_modes, {"0": op}


def cmd_reduce(cfg: RunConfig, args) -> int:
    data = _read_json(cfg.input)
    try:
        n_modes, targets = _load_targets(data)
        enc = _encoding(cfg, n_modes, args.spins)
        syms = parse_symmetries(cfg.symmetries, enc)
        basis = reduce_measurements(targets, enc, syms)
    except (KeyError, TypeError, IndexError) as exc:
        raise DataError(f"malformed operator file: {exc}") from None
    if cfg.fmt == "text":
        lines = [p.label for p in basis.selected]
        for t in basis.targets:
            terms = " + ".join(f"({c:.6g}) {basis.selected[i].label}" for i, c in zip(t.indices, t.coeffs))
            lines.append(f"{t.id}: {terms or '0'}")
        _write("\n".join(lines) + "\n", cfg.out)
    else:
        _write(_dump(basis.to_json()), cfg.out)
    return EXIT_OK


def format_table(rows) -> str:
    lines = []
    for r in rows:
        q = "-" if r.zero_class else str(r.q_sites)
        naive = "-" if r.zero_class else str(r.naive)
        lines.append(f"{r.k} {r.spin_class} {q} {naive} {r.reduced}")
    return "\n".join(lines) + "\n"


def cmd_table(cfg: RunConfig, args) -> int:
    syms = [s.name for s in parse_symmetries(cfg.symmetries, EncodingSpec("jw", 2))]
    rows = count_table(cfg.krdm, cfg.mapping, syms, cfg.layout)
    if cfg.fmt == "json":
        _write(_dump([r.to_json() for r in rows]), cfg.out)
    else:
        _write(format_table(rows), cfg.out)
    return EXIT_OK


def _load_strings(data) -> list[PauliString]:
    if isinstance(data, list):
        labels = data
    elif "terms" in data:
        return [p.unit() for p in PauliSum.from_json(data).strings()]
    elif "strings" in data:
        labels = data["strings"]
    elif "measurements" in data:
        labels = [m["string"] for m in data["measurements"]]
    else:
        raise DataError("expected a list of Pauli labels or an object with 'terms' or 'strings'")
    strings = [PauliString.from_label(s) for s in labels]
    if len({p.n_qubits for p in strings}) > 1:
        raise DataError("Pauli strings have different lengths")
    return strings


def cmd_group(cfg: RunConfig, args) -> int:
    strings = _load_strings(_read_json(cfg.input))
    unique = list({p.key: p for p in strings}.values())
    grouping = group_strings(unique)
    grouping.check()
    if cfg.fmt == "text":
        bases = grouping.bases()
        lines = [f"{grouping.circuit_count} groups"]
        lines += [f"{b.label}: {' '.join(unique[i].label for i in g)}" for b, g in zip(bases, grouping.groups)]
        _write("\n".join(lines) + "\n", cfg.out)
    else:
        _write(_dump(grouping.to_json()), cfg.out)
    return EXIT_OK


FIG1_COLUMNS = ("mapping", "symmetries", "r", "naive_terms", "naive_circuits", "reduced_terms",
                "reduced_circuits", "ratio", "fitted_n")


def emit_fig1_csv(cfg: RunConfig) -> str:
    """Rows of the terms-versus-circuits sweep as CSV text (also written to ``cfg.csv``)."""
    from spt.study import sweep

    if cfg.fit and len(cfg.qubits) < 3:
        raise UsageError("a scaling fit needs at least 3 qubit counts")
    rows = sweep(cfg.qubits, cfg.mappings, cfg.symmetry_sets, k=cfg.krdm, layout=cfg.layout, fit=cfg.fit)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIG1_COLUMNS)
    for r in rows:
        w.writerow([
            r.mapping, r.symmetries, r.r, r.naive_terms, r.naive_circuits, r.reduced_terms,
            r.reduced_circuits, repr(r.ratio), "" if r.fitted_n is None else repr(r.fitted_n),
        ])
    text = buf.getvalue()
    if cfg.csv:
        _write(text, cfg.csv)
    return text


def cmd_scaling(cfg: RunConfig, args) -> int:
    text = emit_fig1_csv(cfg)
    if not cfg.csv:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    from spt.noisesim import DeviceParameters, ParameterError, run_experiment

    if cfg.mapping not in ("jw", "jordan_wigner"):
        log.warning("simulate always uses the Jordan-Wigner encoding; ignoring --mapping %s", cfg.mapping)
    if cfg.seed is None:
        if os.environ.get("CI"):
            raise UsageError("--seed is required when CI is set")
        cfg.seed = 42
    levels = []
    for tok in args.levels.split(","):
        tok = tok.strip().lower()
        try:
            levels.append(math.inf if tok in ("inf", "∞") else float(tok))
        except ValueError:
            raise UsageError(f"bad noise level {tok!r}") from None
    device = DeviceParameters()
    if args.params:
        try:
            device = DeviceParameters.from_json(_read_json(args.params))
        except (TypeError, ValueError, ParameterError) as exc:
            raise DataError(f"bad device parameters: {exc}") from None
    report = run_experiment(levels, args.states, cfg.shots, cfg.seed, device, args.basis)
    if cfg.fmt == "text":
        _write(report.format_text() + "\n", cfg.out)
    else:
        _write(_dump(report.to_json()), cfg.out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spt", description="Symmetry-projected RDM tomography toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, mapping_list=False, symmetry_default="n,sz"):
        sp.add_argument("--mapping", default="jw", help="jw, parity or bk" + (" (comma list)" if mapping_list else ""))
        sp.add_argument("--symmetries", default=symmetry_default)
        sp.add_argument("--mode-order", choices=("blocked", "interleaved"), default="blocked")
        sp.add_argument("--format", choices=("json", "text"), default=None)
        sp.add_argument("--out")

    sp = sub.add_parser("reduce", help="reduced measurement basis for fermionic targets")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--spins", help="spin of every mode, e.g. 'aa' or 'abab'")

    sp = sub.add_parser("table", help="naive and reduced string counts per spin class")
    common(sp)
    sp.add_argument("--krdm", type=int, choices=(1, 2, 3), default=2)

    sp = sub.add_parser("group", help="qubit-wise commuting groups of Pauli strings")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "text"), default=None)

    sp = sub.add_parser("scaling", help="terms versus circuits sweep as CSV")
    common(sp, mapping_list=True, symmetry_default="none,n,n+sz")
    sp.add_argument("--krdm", type=int, choices=(1, 2, 3), default=2)
    sp.add_argument("--qubits", default="4:12:2")
    sp.add_argument("--csv")
    sp.add_argument("--fit", action="store_true", help="fit the reduced-circuit exponent per series")

    sp = sub.add_parser("simulate", help="noisy H2 tomography experiment")
    sp.add_argument("--mapping", default="jw")
    sp.add_argument("--levels", default="0,1,2,3,4,inf")
    sp.add_argument("--states", type=int, default=25)
    sp.add_argument("--shots", type=int, default=8192)
    sp.add_argument("--exact", action="store_true", help="exact outcome distributions instead of sampling")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--basis", choices=("naive", "reduced", "both"), default="both")
    sp.add_argument("--params")
    sp.add_argument("--format", choices=("json", "text"), default=None)
    sp.add_argument("--out")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig(args.command)
    mapping = getattr(args, "mapping", "jw")
    try:
        if args.command == "scaling":
            cfg.mappings = [EncodingSpec(m.strip(), 2).short_name for m in mapping.split(",")]
            cfg.symmetry_sets = parse_symmetry_sets(args.symmetries)
            cfg.qubits = parse_range(args.qubits)
            if any(r < 2 or r % 2 for r in cfg.qubits):
                raise UsageError("qubit counts must be even and at least 2")
        else:
            cfg.mapping = EncodingSpec(mapping, 2).short_name
    except EncodingError as exc:
        raise UsageError(str(exc)) from None
    if hasattr(args, "symmetries") and args.command != "scaling":
        cfg.symmetries = args.symmetries
        try:
            parse_symmetries(cfg.symmetries, EncodingSpec("jw", 2))
        except UnsupportedSymmetryError as exc:
            raise UsageError(str(exc)) from None
    cfg.layout = getattr(args, "mode_order", "blocked")
    cfg.krdm = getattr(args, "krdm", 2)
    cfg.fit = getattr(args, "fit", False)
    cfg.input = getattr(args, "input", None)
    cfg.out = getattr(args, "out", None)
    cfg.csv = getattr(args, "csv", None)
    cfg.seed = getattr(args, "seed", None)
    if args.command == "simulate":
        if args.states < 1 or (args.shots < 1 and not args.exact):
            raise UsageError("--states and --shots must be positive")
        cfg.shots = None if args.exact else args.shots
    default_fmt = "text" if args.command == "table" and cfg.out is None else "json"
    cfg.fmt = args.format or default_fmt
    return cfg


_COMMANDS = {
    "reduce": cmd_reduce,
    "table": cmd_table,
    "group": cmd_group,
    "scaling": cmd_scaling,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("spt: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
        _apply_thread_cap()
        cfg = _config(args)
        return _COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DimensionError, TargetNotInSpanError, EncodingError, UnsupportedSymmetryError,
            ValueError, KeyError) as exc:
        print(f"spt: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
