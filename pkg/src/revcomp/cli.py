"""Command-line experiment runner.

Exit codes: 0 success, 1 verification failure, 2 invalid or infeasible input,
3 search failure (a stage exhausted its budget).

Seed precedence: ``--seed`` flag, then ``REVCOMP_SEED``, then the config file,
then 0. A master seed determines every byte of every artifact.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from . import codec
from .compressor import CompressionPlan, CompressionResult, compress, result_row, summary_row, verify
from .core import Circuit, SparseState, TrainingSet, apply_circuit, format_ket
from .errors import ArtifactError, InfeasibleTargetError, InvalidSpecError, RevcompError
from .evolution import EAParams
from .families import FAMILY_KINDS, CompressionTarget, FamilySpec, default_target

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_SEARCH = 3

CONFIG_SCHEMA = 1
SEED_ENV = "REVCOMP_SEED"

log = logging.getLogger("revcomp")

# CLI flag -> EAParams field
EA_FLAGS = {
    "pop": "population_size",
    "parents": "parent_count",
    "children": "children_per_generation",
    "max_gen": "max_generations",
    "restarts": "restarts",
    "penalty": "length_penalty",
    "max_length": "max_length",
}
EA_CONFIG_KEYS = {f.name for f in fields(EAParams)} - {"seed", "snapshots"}
FAMILY_CONFIG_KEYS = {"kind", "n", "m", "support_size", "seed"}
CONFIG_KEYS = {
    "schema", "family", "families", "trash", "trash_qubits", "ea", "out",
    "seed", "repetitions", "verbosity", "order",
}


@dataclass
class RunConfig:
    families: list[FamilySpec] = field(default_factory=list)
    trash: Optional[int] = None
    trash_qubits: Optional[tuple[int, ...]] = None
    ea: dict[str, Any] = field(default_factory=dict)
    out: Path = Path("out")
    seed: int = 0
    repetitions: int = 1
    verbosity: int = 0
    order: str = "fixed"

    def ea_params(self, seed: int, **extra) -> EAParams:
        return EAParams(**{**self.ea, **extra, "seed": seed})

    def validate(self) -> "RunConfig":
        for spec in self.families:
            spec.validate()
        self.ea_params(self.seed)
        if self.repetitions < 1:
            raise InvalidSpecError("repetitions must be positive")
        if self.order not in ("fixed", "greedy"):
            raise InvalidSpecError(f"order must be fixed or greedy, got {self.order!r}")
        return self


def _family_from_mapping(data: Any) -> FamilySpec:
    if not isinstance(data, dict):
        raise InvalidSpecError(f"family entry must be a mapping, got {data!r}")
    unknown = set(data) - FAMILY_CONFIG_KEYS
    if unknown:
        raise InvalidSpecError(f"unknown family keys: {', '.join(sorted(unknown))}")
    if "kind" not in data or "n" not in data:
        raise InvalidSpecError("family entry needs 'kind' and 'n'")
    return FamilySpec(data["kind"], data["n"], data.get("m"), data.get("support_size"), data.get("seed", 0))


def load_config(path: str | os.PathLike) -> RunConfig:
    """Read a YAML run configuration; unknown keys and other schema versions are rejected."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise InvalidSpecError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidSpecError("config must be a key-value mapping")
    if data.get("schema") != CONFIG_SCHEMA:
        raise InvalidSpecError(f"config schema must be {CONFIG_SCHEMA}, got {data.get('schema')!r}")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise InvalidSpecError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig()
    if "family" in data and "families" in data:
        raise InvalidSpecError("give either 'family' or 'families', not both")
    if "family" in data:
        cfg.families = [_family_from_mapping(data["family"])]
    if "families" in data:
        cfg.families = [_family_from_mapping(f) for f in data["families"]]
    ea = data.get("ea") or {}
    if not isinstance(ea, dict):
        raise InvalidSpecError("'ea' must be a mapping")
    bad = set(ea) - EA_CONFIG_KEYS
    if bad:
        raise InvalidSpecError(f"unknown ea keys: {', '.join(sorted(bad))}")
    cfg.ea = dict(ea)
    if "mutation_weights" in cfg.ea:
        cfg.ea["mutation_weights"] = tuple(cfg.ea["mutation_weights"])
    cfg.trash = data.get("trash")
    if data.get("trash_qubits") is not None:
        cfg.trash_qubits = tuple(int(q) for q in data["trash_qubits"])
    cfg.out = Path(data.get("out", cfg.out))
    cfg.seed = int(data.get("seed", 0))
    cfg.repetitions = int(data.get("repetitions", 1))
    cfg.verbosity = int(data.get("verbosity", 0))
    cfg.order = data.get("order", "fixed")
    return cfg


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file, environment and flags (flags win)."""
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if os.environ.get(SEED_ENV):
        try:
            cfg.seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise InvalidSpecError(f"{SEED_ENV} must be an integer") from exc
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "family", None):
        cfg.families = [_family_from_args(args, cfg.seed)]
    for flag, name in EA_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.ea[name] = value
    if getattr(args, "trash", None) is not None:
        cfg.trash = args.trash
    if getattr(args, "trash_qubits", None):
        cfg.trash_qubits = _parse_qubits(args.trash_qubits)
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    if getattr(args, "order", None):
        cfg.order = args.order
    if getattr(args, "repetitions", None) is not None:
        cfg.repetitions = args.repetitions
    cfg.verbosity = max(cfg.verbosity, getattr(args, "verbose", 0))
    log.setLevel(logging.WARNING - 10 * min(cfg.verbosity, 2))
    return cfg.validate()


def _parse_qubits(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(q) for q in text.split(",") if q.strip())
    except ValueError as exc:
        raise InvalidSpecError(f"--trash-qubits expects comma-separated integers, got {text!r}") from exc


def _family_from_args(args: argparse.Namespace, seed: int) -> FamilySpec:
    if args.n is None:
        raise InvalidSpecError("--n is required with --family")
    support_size = args.support_size
    if args.family == "random_support" and support_size is None:
        support_size = args.n
    return FamilySpec(args.family, args.n, args.m, support_size, seed if args.family == "random_support" else 0)


def artifact_stem(spec: FamilySpec) -> str:
    parts = [spec.kind, f"n{spec.n_qubits}"]
    if spec.m is not None:
        parts.append(f"m{spec.m}")
    if spec.kind == "random_support":
        parts += [f"s{spec.support_size if spec.support_size is not None else spec.n_qubits}", f"seed{spec.seed}"]
    return "-".join(parts)


def _format_support(state: SparseState) -> list[str]:
    return [f"|{format_ket(b, state.n_qubits)}>  {b:>6d}  p={p:.6f}" for b, p in state.probabilities().items()]


# ---------------------------------------------------------------- commands


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    if not cfg.families:
        raise InvalidSpecError("gen needs --family/--n or a config with a family")
    for spec in cfg.families:
        training = spec.generate()
        path = cfg.out / f"{artifact_stem(spec)}.training.json"
        codec.write_artifact("training-set", path, training)
        union = training.union_support()
        print(f"{spec.label} n={spec.n_qubits}: {len(training)} training state(s), union support {len(union)}")
        for state, w in zip(training.states, training.weights):
            print(f"  weight {w:.6f}: " + ", ".join(f"|{k}> ({int(k, 2)})" for k in state.kets()))
        print(f"wrote {path}")
    return EXIT_OK


def _load_training(args, cfg: RunConfig) -> tuple[TrainingSet, Optional[FamilySpec]]:
    if getattr(args, "training", None):
        return codec.read_artifact("training-set", args.training), None
    if len(cfg.families) != 1:
        raise InvalidSpecError("give exactly one family (--family/--n) or --training FILE")
    spec = cfg.families[0]
    return spec.generate(), spec


def _target_for(training: TrainingSet, cfg: RunConfig) -> CompressionTarget:
    return default_target(training, cfg.trash, cfg.trash_qubits)


def run_compression(
    training: TrainingSet,
    target: CompressionTarget,
    params: EAParams,
    order: str = "fixed",
) -> CompressionResult:
    return compress(CompressionPlan(training, target, params, order))


def _write_run(out: Path, stem: str, result: CompressionResult) -> None:
    codec.write_artifact("circuit", out / f"{stem}.rvc", result.full_circuit)
    codec.write_artifact("trace", out / f"{stem}.trace.jsonl", result.trace)


def _report_result(result: CompressionResult, target: CompressionTarget) -> None:
    c = result.gate_histogram
    status = "success" if result.success else f"FAILED at qubit {result.failed_qubit}"
    print(
        f"{status}: trash {list(target.trash_qubits)}, {len(result.full_circuit)} gates "
        f"(X={c['X']} CX={c['CX']} CCX={c['CCX']}), {result.total_steps} generations"
    )
    print(f"circuit: {codec.serialize_circuit(result.full_circuit)}")


def cmd_compress(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    training, spec = _load_training(args, cfg)
    target = _target_for(training, cfg)
    if spec is not None:
        stem, label = artifact_stem(spec), spec.label
    else:
        stem = label = Path(args.training).name.split(".")[0]
    rows = []
    ok = True
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        result = run_compression(training, target, cfg.ea_params(seed), cfg.order)
        _write_run(cfg.out, stem if cfg.repetitions == 1 else f"{stem}-rep{rep}", result)
        _report_result(result, target)
        rows.append(result_row(label, training.n_qubits, result, target.trash_count, seed))
        ok &= result.success
    codec.write_artifact("summary", cfg.out / f"{stem}.summary.csv", rows)
    print(f"artifacts in {cfg.out}/")
    return EXIT_OK if ok else EXIT_SEARCH


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    circuit = codec.read_artifact("circuit", args.circuit)
    training, _ = _load_training(args, cfg)
    if circuit.n_qubits != training.n_qubits:
        raise InvalidSpecError(f"{circuit.n_qubits}-qubit circuit, {training.n_qubits}-qubit training set")
    target = _target_for(training, cfg)
    report = verify(circuit, training, target, oracle=args.oracle)
    if report.mapping is not None:
        for src, dst in report.mapping:
            print(f"|{src}> -> |{dst}>")
    cleared = sum(report.trash_cleared)
    print(f"trash {list(target.trash_qubits)} cleared on {cleared}/{len(report.trash_cleared)} states")
    print(f"injective on support: {report.injective}")
    if report.oracle_equivalent is not None:
        print(f"oracle equivalence: {report.oracle_equivalent}")
    print("PASS" if report.ok else "FAIL")
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    circuit = codec.read_artifact("circuit", args.circuit)
    if args.state or args.kets:
        kets = [args.state] if args.state else [k.strip() for k in args.kets.split(",") if k.strip()]
        if any(len(k) != circuit.n_qubits for k in kets):
            raise InvalidSpecError(f"kets must have {circuit.n_qubits} characters")
        training = TrainingSet((SparseState.uniform(circuit.n_qubits, kets),))
    else:
        training, _ = _load_training(args, cfg)
    if training.n_qubits != circuit.n_qubits:
        raise InvalidSpecError(f"{circuit.n_qubits}-qubit circuit, {training.n_qubits}-qubit state")
    for i, state in enumerate(training.states):
        out = apply_circuit(state, circuit)
        print(f"state {i}:")
        for line in _format_support(out):
            print("  " + line)
    return EXIT_OK


FIG7_CELLS = (
    ("unary", None, range(4, 9)),
    ("ghz", None, range(4, 9)),
    ("random_support", None, range(4, 9)),
    ("prime", None, range(4, 7)),
    ("m_particle", 2, range(4, 7)),
    ("m_particle", 3, range(4, 7)),
)


def fig7_specs(max_size: int, master_seed: int) -> list[FamilySpec]:
    specs = []
    for kind, m, sizes in FIG7_CELLS:
        for n in sizes:
            if n > max_size:
                continue
            seed = master_seed + n if kind == "random_support" else 0
            specs.append(FamilySpec(kind, n, m, n if kind == "random_support" else None, seed))
    return specs


def cmd_reproduce(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = cfg.out / args.figure
    if args.figure == "fig5":
        spec = FamilySpec("unary", 6)
        training = spec.generate()
        target = default_target(training)
        result = run_compression(training, target, cfg.ea_params(cfg.seed, snapshots=True), cfg.order)
        _write_run(out, "fig5-unary-n6", result)
        codec.write_artifact("summary", out / "fig5.summary.csv", [summary_row(spec, result, 3, cfg.seed)])
        _report_result(result, target)
        print(f"artifacts in {out}/")
        return EXIT_OK if result.success else EXIT_SEARCH

    rows = []
    all_ok = True
    for index, spec in enumerate(fig7_specs(args.max_size, cfg.seed)):
        if not spec.applicable:
            rows.append(summary_row(spec, None, 0, cfg.seed))
            print(f"{spec.label:>16} n={spec.n_qubits}: -")
            continue
        training = spec.generate()
        target = default_target(training)
        seed = cfg.seed + 7919 * index
        result = run_compression(training, target, cfg.ea_params(seed), cfg.order)
        _write_run(out / "cells", artifact_stem(spec), result)
        rows.append(summary_row(spec, result, target.trash_count, seed))
        all_ok &= result.success
        c = result.gate_histogram
        print(
            f"{spec.label:>16} n={spec.n_qubits}: {'ok' if result.success else 'FAILED'} "
            f"trash={target.trash_count} gens={result.total_steps} X={c['X']} CX={c['CX']} CCX={c['CCX']}",
            flush=True,
        )
    codec.write_artifact("summary", out / "fig7.summary.csv", rows)
    print(f"artifacts in {out}/")
    return EXIT_OK if all_ok else EXIT_SEARCH


# ------------------------------------------------------------------ parser


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILY_KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--support-size", type=int)
    p.add_argument("--training", help="training-set .json instead of --family")


def _add_target_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trash", type=int, help="number of leading trash qubits")
    p.add_argument("--trash-qubits", help="comma-separated trash qubit indices")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _add_ea_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pop", type=int)
    p.add_argument("--parents", type=int)
    p.add_argument("--children", type=int)
    p.add_argument("--max-gen", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--penalty", type=float)
    p.add_argument("--max-length", type=int)
    p.add_argument("--order", choices=("fixed", "greedy"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revcomp", description="Evolutionary compression of quantum states with X/CX/CCX circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark training set")
    _add_family_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("compress", help="search for a compression circuit")
    _add_family_flags(p)
    _add_target_flags(p)
    _add_ea_flags(p)
    _add_run_flags(p)
    p.add_argument("--repetitions", type=int)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("verify", help="check a circuit against a training set")
    p.add_argument("circuit")
    _add_family_flags(p)
    _add_target_flags(p)
    _add_run_flags(p)
    p.add_argument("--oracle", action="store_true", help="cross-check against the dense permutation table")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="apply a circuit to states and print the result")
    p.add_argument("circuit")
    _add_family_flags(p)
    _add_run_flags(p)
    p.add_argument("--state", help="single basis ket, e.g. 11000")
    p.add_argument("--kets", help="comma-separated kets for a uniform superposition")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="regenerate the figure data bundles")
    p.add_argument("figure", choices=("fig5", "fig7"))
    p.add_argument("--max-size", type=int, default=6, help="largest register in the fig7 matrix (up to 8)")
    _add_ea_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleTargetError as exc:
        print(f"infeasible target: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidSpecError, ArtifactError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RevcompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
