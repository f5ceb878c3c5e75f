#!/usr/bin/env python
"""
Linha de comando do laboratório de set query

Subcomandos: gen, sketch, recover, experiment, report.
Códigos de saída: 0 sucesso, 1 limiar não atingido (ou recuperação abortada), 2 erro de uso.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from config.settings import settings
from config.logger import setup_logger
from harness.generators import gen_block_sparse, gen_geometric, gen_zipfian, make_rng, random_support, head_signal
from harness.models import ExperimentConfig, ExperimentKind, NoiseKind
from harness.reports import load_records, report_plot_data
from harness.runner import run_experiment
from sketches import codec
from sketches.errors import InvalidArgumentError, SketchError
from sketches.set_query import RecoveryError, SupportSet, recover
from sketches.sketch_core import Norm, Signal, Sketch, SketchMatrix, apply, build_matrix, derive_params

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2


def _emit(payload: Dict[str, Any], as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def _write_signal(signal: Signal, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"n": signal.n, "pairs": signal.pairs()}), encoding="utf-8")


def _read_signal(path: str) -> Signal:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return Signal.from_pairs(int(data["n"]), [(int(i), float(v)) for i, v in data["pairs"]])
    except (OSError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, SketchError):
            raise
        raise SketchError(f"Arquivo de sinal inválido {path}: {e}") from e


def _parse_support(text: str) -> List[int]:
    """Lista separada por vírgulas ou caminho de arquivo JSON com a lista."""
    path = Path(text)
    try:
        if path.exists():
            return [int(i) for i in json.loads(path.read_text(encoding="utf-8"))]
        return [int(i) for i in text.split(",") if i.strip()]
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"Suporte inválido {text!r}: {e}") from e


# --- Subcomandos ---

def cmd_gen(args) -> int:
    if args.k is None and args.family in ("block", "random"):
        raise SketchError(f"--k é obrigatório para a família {args.family}")
    if args.family == "zipfian":
        signal = gen_zipfian(args.n, args.k, args.alpha, args.scale, args.seed)
    elif args.family == "geometric":
        signal = gen_geometric(args.n, args.k, args.ratio, args.scale, args.seed)
    elif args.family == "block":
        signal = gen_block_sparse(args.n, args.b, args.k, args.scale, args.sigma, args.seed)
    else:
        rng = make_rng(args.seed)
        support = random_support(args.n, args.k, rng)
        signal = Signal.from_dense(head_signal(args.n, support, args.scale, rng, args.sigma))

    if args.out:
        _write_signal(signal, Path(args.out))
    _emit({"n": signal.n, "nonzeros": len(signal.indices), "out": args.out}, args.json)
    return EXIT_OK


def cmd_sketch(args) -> int:
    if not args.out:
        raise SketchError("--out (diretório de saída) é obrigatório para sketch")
    signal = _read_signal(args.signal)
    params = derive_params(signal.n, args.k, args.eps, norm=args.norm, d=args.d, seed=args.seed)
    matrix = build_matrix(params)
    sketch = apply(matrix, signal)

    out = Path(args.out)
    codec.save(matrix, out / "matrix.sqs")
    codec.save(sketch, out / "sketch.sqs")
    _emit({
        "w": params.w,
        "matrix": str(out / "matrix.sqs"),
        "sketch": str(out / "sketch.sqs"),
        "sha256": codec.content_hash(matrix),
    }, args.json)
    return EXIT_OK


def cmd_recover(args) -> int:
    matrix = codec.load(args.matrix)
    sketch = codec.load(args.sketch)
    if not isinstance(matrix, SketchMatrix) or not isinstance(sketch, Sketch):
        raise SketchError("Esperado um arquivo de matriz e um de sketch")

    support = SupportSet.of(_parse_support(args.support), n=matrix.n)
    outcome = recover(matrix, sketch, support, rng=args.seed)
    aborted = isinstance(outcome, RecoveryError)
    estimate = outcome.partial if aborted else outcome.estimate
    if args.out:
        _write_signal(estimate, Path(args.out))
    _emit({
        "aborted": aborted,
        "peeled": len(outcome.peel_log),
        "estimate": estimate.pairs(),
    }, args.json)
    return EXIT_THRESHOLD if aborted else EXIT_OK


_CONFIG_FLAGS = (
    "kind", "n", "k", "eps", "d", "w", "repetitions", "head_scale", "tail_sigma",
    "alpha", "family", "sq_eps", "b", "block_norm", "k_values", "trials", "seed",
    "max_workers", "min_success_rate", "include_timing", "name",
)


def build_config(args) -> ExperimentConfig:
    """Arquivo chave=valor (--config) primeiro; flags explícitas sobrescrevem."""
    values: Dict[str, Any] = {}
    if args.config:
        if not Path(args.config).exists():
            raise SketchError(f"Arquivo de configuração não encontrado: {args.config}")
        values.update({k.lower(): v for k, v in dotenv_values(args.config).items() if v is not None})

    noise = {"kind": values.pop("noise", NoiseKind.NONE.value), "sigma": values.pop("noise_sigma", 0.0)}
    for flag in _CONFIG_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            values[flag] = value
    if args.noise is not None:
        noise["kind"] = args.noise
    if args.noise_sigma is not None:
        noise["sigma"] = args.noise_sigma
    if args.out is not None:
        values["output_dir"] = args.out
    if args.trials_flag is not None:
        values["trials"] = args.trials_flag

    values["noise"] = noise
    return ExperimentConfig.model_validate(values)


def cmd_experiment(args) -> int:
    config = build_config(args)
    report = run_experiment(config)
    payload = json.loads(report.summary.model_dump_json())
    payload["jsonl"] = report.jsonl_path
    payload["summary_csv"] = report.summary_path
    _emit(payload, args.json)
    return EXIT_OK if report.summary.passed else EXIT_THRESHOLD


def cmd_report(args) -> int:
    records = load_records(args.input)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".plot.csv")
    table = report_plot_data(records, out)
    payload = {"records": len(records), "rows": len(table), "out": str(out)}
    if records:
        payload["success_rate"] = sum(r.success for r in records) / len(records)
    _emit(payload, args.json)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Semente mestre")
    common.add_argument("--out", default=None, help="Arquivo ou diretório de saída")
    common.add_argument("--json", action="store_true", help="Saída legível por máquina em stdout")
    common.add_argument("--trials", dest="trials_flag", type=int, default=None, help="Número de tentativas")

    parser = argparse.ArgumentParser(prog="cli.py", description="Laboratório de set query e sparse recovery")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Gera um sinal esparso")
    gen.add_argument("--family", choices=["zipfian", "geometric", "block", "random"], default="zipfian")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, default=None)
    gen.add_argument("--alpha", type=float, default=1.0)
    gen.add_argument("--ratio", type=float, default=0.9)
    gen.add_argument("--scale", type=float, default=1.0)
    gen.add_argument("--sigma", type=float, default=0.0, help="Desvio da cauda gaussiana")
    gen.add_argument("--b", type=int, default=64)
    gen.set_defaults(func=cmd_gen)

    sketch = sub.add_parser("sketch", parents=[common], help="Constrói a matriz e o sketch de um sinal")
    sketch.add_argument("--signal", required=True)
    sketch.add_argument("--k", type=int, required=True)
    sketch.add_argument("--eps", type=float, default=0.5)
    sketch.add_argument("--d", type=int, default=None)
    sketch.add_argument("--norm", choices=[n.value for n in Norm], default=Norm.L2.value)
    sketch.set_defaults(func=cmd_sketch)

    rec = sub.add_parser("recover", parents=[common], help="Set query a partir de arquivos SQS1")
    rec.add_argument("--matrix", required=True)
    rec.add_argument("--sketch", required=True)
    rec.add_argument("--support", required=True, help="Índices separados por vírgula ou arquivo JSON")
    rec.set_defaults(func=cmd_recover)

    exp = sub.add_parser("experiment", parents=[common], help="Roda um experimento semeado")
    exp.add_argument("--config", default=None, help="Arquivo chave=valor")
    exp.add_argument("--kind", choices=[k.value for k in ExperimentKind], default=None)
    exp.add_argument("--name", default=None)
    exp.add_argument("--n", type=int, default=None)
    exp.add_argument("--k", type=int, default=None)
    exp.add_argument("--eps", type=float, default=None)
    exp.add_argument("--d", type=int, default=None)
    exp.add_argument("--w", type=int, default=None)
    exp.add_argument("--repetitions", type=int, default=None)
    exp.add_argument("--head-scale", dest="head_scale", type=float, default=None)
    exp.add_argument("--tail-sigma", dest="tail_sigma", type=float, default=None)
    exp.add_argument("--noise", choices=[k.value for k in NoiseKind], default=None)
    exp.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    exp.add_argument("--alpha", type=float, default=None)
    exp.add_argument("--family", choices=["zipfian", "geometric"], default=None)
    exp.add_argument("--sq-eps", dest="sq_eps", type=float, default=None)
    exp.add_argument("--b", type=int, default=None)
    exp.add_argument("--block-norm", dest="block_norm", type=float, default=None)
    exp.add_argument("--k-values", dest="k_values", default=None, help="Lista separada por vírgulas")
    exp.add_argument("--workers", dest="max_workers", type=int, default=None)
    exp.add_argument("--min-success-rate", dest="min_success_rate", type=float, default=None)
    exp.add_argument("--include-timing", dest="include_timing", action="store_const", const=True, default=None)
    exp.set_defaults(func=cmd_experiment)

    rep = sub.add_parser("report", parents=[common], help="Tabelas de quantis a partir de um JSON lines")
    rep.add_argument("--input", required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command != "experiment":
        args.seed = settings.default_seed
    try:
        return args.func(args)
    except (SketchError, ValidationError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        if args.json:
            print(json.dumps({"status": "error", "message": str(e)}))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
