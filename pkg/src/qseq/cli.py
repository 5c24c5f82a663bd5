"""Command-line pipelines over the library: data generation, window counting,
training, evaluation, gradient checking, landscape scans, and benchmark sweeps.

Every command is a pure function of its inputs, flags, and seed: reruns are
byte-identical (benchmark timing columns excepted unless --no-timing). Floats
in CSV outputs carry 9 significant digits. Exit codes: 0 success, 2 argument
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
import zlib

import numpy as np

from . import ansatz, gradtrain, metrics, stochproc

MODEL_KINDS = ("recurrent1", "recurrent2", "born")


class ArgumentProblem(ValueError):
    """Bad command arguments or inputs; maps to exit code 2."""


def _fmt(x: float) -> str:
    if x != x:  # nan
        return "nan"
    return format(x, ".9g")


def build_model(kind: str, past_steps: int, future_steps: int):
    if kind == "recurrent1":
        return ansatz.build_universal_1q_memory(past_steps, future_steps)
    if kind == "recurrent2":
        return ansatz.build_recurrent_hea(2, 3, past_steps, future_steps)
    if kind == "born":
        return ansatz.build_born_machine(qubits=past_steps + future_steps, layers=4)
    raise ArgumentProblem(f"unknown model kind {kind!r} (use one of {MODEL_KINDS})")


def build_process(kind: str, order: int) -> stochproc.HiddenMarkovModel:
    if kind != "renewal":
        raise ArgumentProblem(f"unknown process kind {kind!r} (only 'renewal')")
    if order < 1:
        raise ArgumentProblem("process order must be >= 1")
    return stochproc.uniform_renewal(order)


def read_config_file(path: str) -> dict[str, str]:
    """key=value lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ArgumentProblem(f"{path}:{line_no}: expected key=value")
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise ArgumentProblem(f"cannot read config file: {exc}") from exc
    return out


def train_config_from(args, defaults: dict[str, str]) -> gradtrain.TrainConfig:
    def pick(flag_value, key, cast, fallback):
        if flag_value is not None:
            return flag_value
        if key in defaults:
            return cast(defaults[key])
        return fallback

    return gradtrain.TrainConfig(
        learning_rate=pick(args.learning_rate, "learning_rate", float, 0.05),
        beta1=pick(getattr(args, "beta1", None), "beta1", float, 0.9),
        beta2=pick(getattr(args, "beta2", None), "beta2", float, 0.999),
        eps_adam=pick(getattr(args, "eps_adam", None), "eps_adam", float, 1e-8),
        max_epochs=pick(args.max_epochs, "max_epochs", int, 2000),
        eps_stop=pick(args.eps_stop, "eps_stop", float, 1e-6),
        gradient_mode=pick(args.gradient_mode, "gradient_mode", str, "exact"),
        samples=pick(args.samples, "samples", int, 10_000),
        seed=args.seed,
    )


# --- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    hmm = build_process(args.process, args.order)
    traj = stochproc.sample_trajectory(hmm, args.length, args.seed)
    stochproc.save_trajectory(args.out, traj)
    return 0


def cmd_counts(args) -> int:
    traj = stochproc.load_trajectory(args.traj)
    if len(traj) < args.past + args.future:
        raise ArgumentProblem("trajectory shorter than the requested window")
    table = stochproc.count_windows(traj, args.past, args.future)
    stochproc.save_table(args.out, table)
    return 0


def _history_to_csv(path: str, result) -> None:
    # the saved model is the best-seen epoch; restate its row last so the
    # final CSV row always describes the written model
    rows = list(result.history)
    if rows[result.best_epoch].epoch != rows[-1].epoch:
        rows.append(rows[result.best_epoch])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,cost_nats,kl_true_nats,kl_emp_nats,grad_norm\n")
        for row in rows:
            fh.write(
                f"{row.epoch},{_fmt(row.cost)},{_fmt(row.kl_true)},"
                f"{_fmt(row.kl_empirical)},{_fmt(row.grad_norm)}\n"
            )


def cmd_train(args) -> int:
    defaults = read_config_file(args.config) if args.config else {}
    counts = stochproc.load_table(args.counts)
    model = build_model(args.model, counts.past_steps, counts.future_steps)
    config = train_config_from(args, defaults)
    true_reference = None
    if args.process is not None:
        hmm = build_process(args.process, args.order)
        true_reference = stochproc.true_conditional(
            hmm, counts.past_steps, counts.future_steps
        )
    result = gradtrain.train(model, counts, config, true_reference=true_reference)
    ansatz.save_model(args.out, model, result.theta, args.model)
    if args.history:
        _history_to_csv(args.history, result)
    return 0


def _load_reference(args) -> stochproc.ConditionalTable:
    if args.against is not None:
        return stochproc.load_table(args.against)
    if args.process is None:
        raise ArgumentProblem("eval needs --against or --process/--order")
    hmm = build_process(args.process, args.order)
    return stochproc.true_conditional(hmm, args.past, args.future)


def cmd_eval(args) -> int:
    reference = _load_reference(args)
    model, theta = ansatz.load_model(
        args.model, reference.past_steps, reference.future_steps
    )
    view = ansatz.ConditionalView(model, theta, reference.future_steps)
    report = metrics.metric_report(reference, view, args.metric)
    payload = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    model = build_model(args.model, args.past, args.future)
    nslots = model.num_slots
    steps = args.past + args.future
    theta = rng.uniform(0.0, 2.0 * np.pi, nslots)
    cost = gradtrain.CostWeights(steps, rng.random(1 << steps))

    exact = gradtrain.exact_gradient(model, theta, cost)
    fd = gradtrain.finite_difference(
        lambda t: gradtrain.expected_cost(model, t, cost), theta, args.delta
    )
    fd_err = float(np.max(np.abs(exact - fd)))

    slot = int(rng.integers(nslots))
    est = gradtrain.stochastic_shift_gradient(model, theta, cost, slot, args.samples, rng)
    sigma = max(est.std_error, 1e-12)
    stoch_dev = abs(est.value - exact[slot]) / sigma

    passed = bool(fd_err <= args.tol and stoch_dev <= 4.0)
    report = {
        "model": args.model,
        "slots": nslots,
        "fd_max_error": fd_err,
        "fd_tolerance": args.tol,
        "stochastic_slot": slot,
        "stochastic_deviation_sigmas": float(stoch_dev),
        "samples": args.samples,
        "pass": passed,
    }
    payload = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0 if passed else 3


def cmd_gradscan(args) -> int:
    hmm = build_process(args.process, args.order)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    rows = []
    for kind in kinds:
        model = build_model(kind, args.past, args.future)
        mags = gradtrain.gradient_landscape_scan(
            model, hmm, args.inits, seed=args.seed ^ zlib.crc32(kind.encode()),
            past_steps=args.past, future_steps=args.future,
        )
        rows.extend((kind, i, m) for i, m in enumerate(mags))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("model,init,magnitude\n")
        for kind, i, m in rows:
            fh.write(f"{kind},{i},{_fmt(m)}\n")
    return 0


def _cell_seed(base: int, order: int, size: int, kind: str, replica: int) -> int:
    tag = f"{order}|{size}|{kind}|{replica}".encode()
    return (base ^ zlib.crc32(tag)) & 0x7FFFFFFF


def _benchmark_cell(payload) -> dict:
    order, size, kind, replica, base_seed, past, future, config_args = payload
    seed = _cell_seed(base_seed, order, size, kind, replica)
    started = time.perf_counter()
    try:
        hmm = stochproc.uniform_renewal(order)
        traj = stochproc.sample_trajectory(hmm, size, seed=seed)
        counts = stochproc.count_windows(traj, past, future)
        true_tab = stochproc.true_conditional(hmm, past, future)
        model = build_model(kind, past, future)
        config = gradtrain.TrainConfig(seed=seed, **config_args)
        result = gradtrain.train(model, counts, config, true_reference=true_tab)
        view = ansatz.ConditionalView(model, result.theta, future)
        kl_emp = metrics.kl_rate(counts, view)
        kl_true = metrics.kl_rate(true_tab, view)
        coem = metrics.co_emission(true_tab, view)
        return {
            "order": order, "T": size, "model": kind,
            "params": model.num_slots, "seed": seed,
            "kl_empirical_nats": kl_emp, "kl_true_nats": kl_true,
            "coemission_nats": coem, "epochs": result.epochs,
            "wall_seconds": time.perf_counter() - started, "status": "ok",
        }
    except Exception as exc:  # per-cell failures recorded, sweep continues
        return {
            "order": order, "T": size, "model": kind, "params": 0, "seed": seed,
            "kl_empirical_nats": float("nan"), "kl_true_nats": float("nan"),
            "coemission_nats": float("nan"), "epochs": 0,
            "wall_seconds": time.perf_counter() - started,
            "status": f"failed: {type(exc).__name__}",
        }


BENCH_COLUMNS = (
    "order", "T", "model", "params", "seed", "kl_empirical_nats",
    "kl_true_nats", "coemission_nats", "epochs", "wall_seconds", "status",
)


def cmd_benchmark(args) -> int:
    defaults = read_config_file(args.config) if args.config else {}
    orders = [int(x) for x in args.orders.split(",")]
    sizes = [int(x) for x in args.sizes.split(",")]
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise ArgumentProblem(f"unknown model kind {kind!r}")
    config_args = {
        "learning_rate": args.learning_rate if args.learning_rate is not None
        else float(defaults.get("learning_rate", 0.05)),
        "max_epochs": args.max_epochs if args.max_epochs is not None
        else int(defaults.get("max_epochs", 2000)),
        "eps_stop": args.eps_stop if args.eps_stop is not None
        else float(defaults.get("eps_stop", 1e-6)),
    }
    cells = [
        (order, size, kind, replica, args.seed, args.past, args.future, config_args)
        for order in orders for size in sizes for kind in kinds
        for replica in range(args.replicas)
    ]
    workers = int(os.environ.get("QSEQ_THREADS", "1"))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_benchmark_cell, cells))
    else:
        results = [_benchmark_cell(cell) for cell in cells]

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in results:
            out = []
            for col in BENCH_COLUMNS:
                val = row[col]
                if col == "wall_seconds":
                    val = 0.0 if args.no_timing else val
                    out.append(_fmt(float(val)))
                elif isinstance(val, float):
                    out.append(_fmt(val))
                else:
                    out.append(str(val))
            fh.write(",".join(out) + "\n")
    meta = {
        "orders": orders, "sizes": sizes, "models": kinds,
        "replicas": args.replicas, "base_seed": args.seed,
        "past": args.past, "future": args.future, "train": config_args,
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


# --- parser -----------------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--eps-adam", dest="eps_adam", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--eps-stop", dest="eps_stop", type=float)
    p.add_argument("--gradient-mode", dest="gradient_mode", choices=("exact", "stochastic"))
    p.add_argument("--samples", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qseq",
        description="recurrent quantum-circuit samplers of binary stochastic processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a trajectory from a target process")
    p.add_argument("--process", default="renewal")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("counts", help="empirical conditional table from a trajectory")
    p.add_argument("--traj", required=True)
    p.add_argument("--past", type=int, required=True)
    p.add_argument("--future", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("train", help="fit a model to a counts table")
    p.add_argument("--counts", required=True)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="training history CSV path")
    p.add_argument("--process", help="optional true process for history kl_true")
    p.add_argument("--order", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model against counts or a process")
    p.add_argument("--model", required=True)
    p.add_argument("--against", help="counts table JSON")
    p.add_argument("--process")
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--past", type=int, default=8)
    p.add_argument("--future", type=int, default=1)
    p.add_argument("--metric", choices=("kl", "coemission"), default="kl")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="exact vs finite-difference vs sampled gradients")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--past", type=int, default=8)
    p.add_argument("--future", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("gradscan", help="gradient-magnitude landscape scan")
    p.add_argument("--models", required=True, help="comma-separated model kinds")
    p.add_argument("--process", default="renewal")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--inits", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--past", type=int, default=8)
    p.add_argument("--future", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gradscan)

    p = sub.add_parser("benchmark", help="full (order x size x model x replica) sweep")
    p.add_argument("--orders", required=True, help="comma-separated process orders")
    p.add_argument("--sizes", required=True, help="comma-separated training sizes")
    p.add_argument("--models", required=True, help="comma-separated model kinds")
    p.add_argument("--replicas", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--past", type=int, default=8)
    p.add_argument("--future", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--no-timing", action="store_true",
                   help="write wall_seconds as 0 for byte-identical reruns")
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--eps-stop", dest="eps_stop", type=float)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ArgumentProblem, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except stochproc.NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
