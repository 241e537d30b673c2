"""Command-line front door.

Subcommands: gen-data, pretrain-grid, fit-dist, train, eval-static,
eval-dynamic, scenario, serve. Each accepts --config (TOML or JSON) whose
keys fill in unset flags (explicit flags always win), honors PREFNET_SEED as
the seed default, writes a manifest into its output directory, and prints a
one-line JSON summary to stdout.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import prefnet
from prefnet import datagen, evaluate
from prefnet.neural.checkpoint import load_agent, save_agent
from prefnet.prefdist import (GRID_QUANTILES, PreferenceDistribution,
                              collect_effects, fit_exponential)
from prefnet.rl.ppo import PpoConfig
from prefnet.rl.train import train, train_static
from prefnet.neural.model import PolicyValueNet
from prefnet.sim.env import NetworkEnv
from prefnet.sim.topology import load_topology


class UsageError(Exception):
    """Bad flags or config: reported with the offending field, exit 2."""


# ---- argument plumbing ----

def _add_common(p):
    p.add_argument("--config", help="TOML or JSON file whose keys fill unset flags")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $PREFNET_SEED, else 0)")
    p.add_argument("--out", default=None, help="output directory")


def _add_ppo_flags(p):
    p.add_argument("--iters", type=int, default=None, help="total environment steps")
    p.add_argument("--i-update", type=int, default=None)
    p.add_argument("--episode-len", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--minibatch", type=int, default=None)
    p.add_argument("--entropy-coef", type=float, default=None)
    p.add_argument("--clip-eps", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gae-lambda", type=float, default=None)
    p.add_argument("--hidden", type=int, default=None, help="node state width d")
    p.add_argument("--msg-steps", type=int, default=None,
                   help="message-passing rounds T")
    p.add_argument("--ff-layers", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prefnet",
        description="network-management simulator and dynamic-preference RL toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a simulation dataset")
    _add_common(p)
    p.add_argument("--topology", default=None,
                   help="fixture name (internet2, mec) or topology JSON path")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--mean-flows", type=float, default=None)
    p.add_argument("--min-flows", type=int, default=None)
    p.add_argument("--bw-low", type=float, default=None)
    p.add_argument("--bw-high", type=float, default=None)
    p.add_argument("--perturb-frac", type=float, default=None)

    p = sub.add_parser("pretrain-grid", help="train fixed-preference baselines")
    _add_common(p)
    _add_ppo_flags(p)
    p.add_argument("--data", default=None, help="dataset directory")
    p.add_argument("--task", choices=("as", "pm"), default=None)
    p.add_argument("--alphas", default=None, help="CSV of alpha grid values")
    p.add_argument("--betas", default=None, help="CSV of beta grid values (pm)")
    p.add_argument("--alpha", type=float, default=None,
                   help="fixed alpha for a beta grid (pm)")

    p = sub.add_parser("fit-dist", help="fit the preference distribution "
                                        "from grid checkpoints")
    _add_common(p)
    p.add_argument("--checkpoints", default=None,
                   help="directory or glob of grid checkpoints")
    p.add_argument("--data", default=None)
    p.add_argument("--effect", choices=("vnf_count", "power"), default=None)
    p.add_argument("--episode-len", type=int, default=None)
    p.add_argument("--fixed-alpha", type=float, default=None,
                   help="alpha used when evaluating a beta grid (pm)")

    p = sub.add_parser("train", help="dynamic-preference training")
    _add_common(p)
    _add_ppo_flags(p)
    p.add_argument("--data", default=None)
    p.add_argument("--task", choices=("as", "pm"), default=None)
    p.add_argument("--dist", default=None, help="alpha distribution spec")
    p.add_argument("--beta-dist", default=None, help="beta distribution spec (pm)")

    p = sub.add_parser("eval-static", help="fixed-preference evaluation")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--split", choices=("train", "val", "test"), default=None)
    p.add_argument("--episode-len", type=int, default=None)
    p.add_argument("--max-episodes", type=int, default=None)

    p = sub.add_parser("eval-dynamic", help="sampled-preference evaluation")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--dist", default=None)
    p.add_argument("--beta-dist", default=None)
    p.add_argument("--split", choices=("train", "val", "test"), default=None)
    p.add_argument("--episode-len", type=int, default=None)
    p.add_argument("--max-episodes", type=int, default=None)

    p = sub.add_parser("scenario", help="timed-event rollout")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--scenario", default=None, help="scenario JSON file")
    p.add_argument("--alpha0", type=float, default=None)
    p.add_argument("--beta0", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--split", choices=("train", "val", "test"), default=None)

    p = sub.add_parser("serve", help="run the interactive steering service")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--tick-ms", type=float, default=None)

    return parser


def _load_config(path):
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc


def _merge_config(args):
    """Config fills only flags left unset; unknown keys are usage errors."""
    if not args.config:
        return args
    cfg = _load_config(args.config)
    known = vars(args)
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config"):
            raise UsageError(f"config may not set '{key}'")
        if dest not in known:
            raise UsageError(f"unknown config field '{key}'")
        if known[dest] is None:
            setattr(args, dest, value)
    return args


def _require(args, *fields):
    for f in fields:
        if getattr(args, f) is None:
            raise UsageError(f"missing required option --{f.replace('_', '-')}")


def _seed(args):
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("PREFNET_SEED")
    return int(env) if env else 0


def _floats_csv(value, field):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(v) for v in str(value).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"--{field} must be a comma-separated list of numbers") from exc


def _ppo_config(args, seed):
    overrides = {"seed": seed}
    for flag, field in (("iters", "i_end"), ("i_update", "i_update"),
                        ("episode_len", "episode_len"), ("lr", "lr"),
                        ("epochs", "epochs"), ("minibatch", "minibatch_size"),
                        ("entropy_coef", "entropy_coef"),
                        ("clip_eps", "clip_eps"), ("gamma", "gamma"),
                        ("gae_lambda", "gae_lambda")):
        v = getattr(args, flag)
        if v is not None:
            overrides[field] = v
    try:
        return PpoConfig(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _model_kwargs(args):
    kw = {}
    if args.hidden is not None:
        kw["hidden"] = args.hidden
    if args.msg_steps is not None:
        kw["steps"] = args.msg_steps
    if args.ff_layers is not None:
        kw["ff_layers"] = args.ff_layers
    return kw


def _parse_dist(spec, field):
    try:
        return PreferenceDistribution.parse(spec)
    except ValueError as exc:
        raise UsageError(f"--{field}: {exc}") from exc


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _manifest(out_dir, args, seed, extra=None):
    payload = {
        "command": args.command,
        "version": prefnet.__version__,
        "seed": seed,
        "options": {k: v for k, v in vars(args).items()
                    if k not in ("command", "config") and v is not None},
    }
    if extra:
        payload.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _summary(payload):
    print(json.dumps(payload, sort_keys=True, default=str))


def _train_env(dataset, split="train"):
    return NetworkEnv(dataset.topology, dataset.slice(split),
                      dataset.meta.sla_ms)


def _spawn_seeds(seed, n):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


# ---- subcommands ----

def _cmd_gen_data(args):
    _require(args, "out")
    seed = _seed(args)
    topology = load_topology(args.topology or "internet2")
    kwargs = {}
    for field in ("horizon", "mean_flows", "min_flows", "bw_low", "bw_high",
                  "perturb_frac"):
        v = getattr(args, field)
        if v is not None:
            kwargs[field] = v
    try:
        config = datagen.DatagenConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dataset = datagen.generate_dataset(topology, seed, config)
    out = _out_dir(args)
    datagen.save_dataset(dataset, out)
    _manifest(out, args, seed, {"topology": topology.name})
    _summary({"command": "gen-data", "status": "ok", "out": out,
              "records": len(dataset.records), "counts": dataset.meta.counts,
              "sla_ms": dataset.meta.sla_ms, "seed": seed})
    return 0


def _grid_values(args):
    task = args.task or "as"
    if task == "as":
        if args.alphas is None:
            raise UsageError("missing required option --alphas")
        return task, _floats_csv(args.alphas, "alphas"), None
    if args.betas is None:
        raise UsageError("a pm grid needs --betas")
    # Role of alpha during beta pre-experiments is a free choice; default to
    # the mean of the shipped alpha distribution.
    alpha = args.alpha if args.alpha is not None else 1.0 / 145.45
    return task, _floats_csv(args.betas, "betas"), alpha


def _cmd_pretrain_grid(args):
    _require(args, "data", "out")
    seed = _seed(args)
    task, grid, fixed_alpha = _grid_values(args)
    dataset = datagen.load_dataset(args.data)
    out = _out_dir(args)
    seeds = _spawn_seeds(seed, len(grid))
    checkpoints = []
    for value, child_seed in zip(grid, seeds):
        config = _ppo_config(args, child_seed)
        model = PolicyValueNet(pref_dims=0, seed=child_seed, **_model_kwargs(args))
        env = _train_env(dataset)
        label = f"{'beta' if task == 'pm' else 'alpha'}_{value:g}"
        log_path = os.path.join(out, f"{label}.log.ndjson")
        if task == "pm":
            result = train_static(env, fixed_alpha, config, task="pm",
                                  beta=value, model=model, log_path=log_path)
        else:
            result = train_static(env, value, config, task="as", model=model,
                                  log_path=log_path)
        path = os.path.join(out, f"{label}.ckpt")
        save_agent(path, result.agent)
        checkpoints.append({"preference": value, "path": path,
                            "mean_reward": result.log_rows[-1]["mean_reward"]
                            if result.log_rows else None})
    _manifest(out, args, seed, {"grid": grid, "task": task,
                                "fixed_alpha": fixed_alpha})
    _summary({"command": "pretrain-grid", "status": "ok", "out": out,
              "task": task, "checkpoints": checkpoints, "seed": seed})
    return 0


def _checkpoint_paths(spec):
    if os.path.isdir(spec):
        paths = sorted(glob.glob(os.path.join(spec, "*.ckpt")))
    else:
        paths = sorted(glob.glob(spec))
    if not paths:
        raise UsageError(f"no checkpoints match {spec!r}")
    return paths


def _grid_preference(agent, effect):
    """Grid value a baseline checkpoint was trained at."""
    spec = agent.meta.beta_dist if effect == "power" else agent.meta.alpha_dist
    if spec is None:
        raise UsageError("checkpoint does not record its training preference")
    dist = PreferenceDistribution.parse(spec)
    if dist.kind != "point":
        raise UsageError("fit-dist needs fixed-preference (point) checkpoints")
    return dist.value


def _cmd_fit_dist(args):
    _require(args, "checkpoints", "data", "out")
    seed = _seed(args)
    effect = args.effect or "vnf_count"
    dataset = datagen.load_dataset(args.data)
    pairs = []
    for path in _checkpoint_paths(args.checkpoints):
        agent = load_agent(path)
        pairs.append((_grid_preference(agent, effect), agent))
    pairs.sort(key=lambda pa: pa[0])
    samples = collect_effects(pairs, dataset, effect_kind=effect,
                              episode_len=args.episode_len or 32,
                              fixed_alpha=args.fixed_alpha)
    fit = fit_exponential(samples)
    dist = PreferenceDistribution.exponential(fit.lam)
    out = _out_dir(args)
    spec = dist.spec()
    with open(os.path.join(out, "dist.spec"), "w") as fh:
        fh.write(spec + "\n")
    with open(os.path.join(out, "fit.json"), "w") as fh:
        json.dump({"spec": spec, "effect": effect, **fit.to_json(),
                   "samples": [{"preference": s.preference, "effect": s.effect}
                               for s in samples]},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    quantiles = {str(q): round(dist.quantile(q), 4) for q in GRID_QUANTILES}
    with open(os.path.join(out, "quantiles.json"), "w") as fh:
        json.dump(quantiles, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _manifest(out, args, seed, {"effect": effect})
    _summary({"command": "fit-dist", "status": "ok", "out": out, "spec": spec,
              "lam": fit.lam, "v_max": fit.v_max, "rss": fit.rss,
              "iterations": fit.iterations, "quantiles": quantiles})
    return 0


def _cmd_train(args):
    _require(args, "data", "dist", "out")
    seed = _seed(args)
    task = args.task or "as"
    dist = _parse_dist(args.dist, "dist")
    beta_dist = None
    if task == "pm":
        if args.beta_dist is None:
            raise UsageError("--task pm requires --beta-dist")
        beta_dist = _parse_dist(args.beta_dist, "beta-dist")
    dataset = datagen.load_dataset(args.data)
    config = _ppo_config(args, seed)
    model = PolicyValueNet(pref_dims=2 if task == "pm" else 1, seed=seed,
                           **_model_kwargs(args))
    env = _train_env(dataset)
    out = _out_dir(args)
    log_path = os.path.join(out, "train_log.ndjson")
    result = train(env, dist, config, task=task, beta_dist=beta_dist,
                   model=model, log_path=log_path)
    ckpt = os.path.join(out, "agent.ckpt")
    save_agent(ckpt, result.agent)
    _manifest(out, args, seed, {"task": task, "dist": dist.spec(),
                                "beta_dist": beta_dist.spec() if beta_dist else None})
    last = result.log_rows[-1] if result.log_rows else {}
    _summary({"command": "train", "status": "ok", "out": out,
              "checkpoint": ckpt, "log": log_path, "seed": seed,
              "updates": len(result.log_rows),
              "final_mean_reward": last.get("mean_reward")})
    return 0


def _eval_preference(agent, args):
    if agent.meta.task == "pm":
        if args.beta is None:
            raise UsageError("--beta is required for power-management checkpoints")
        return (args.alpha, args.beta)
    if args.beta is not None:
        raise UsageError("--beta only applies to power-management checkpoints")
    return args.alpha


def _cmd_eval_static(args):
    _require(args, "checkpoint", "data", "alpha", "out")
    seed = _seed(args)
    agent = load_agent(args.checkpoint)
    dataset = datagen.load_dataset(args.data)
    preference = _eval_preference(agent, args)
    report = evaluate.eval_static(agent, dataset, preference,
                                  split=args.split or "test",
                                  episode_len=args.episode_len or 32,
                                  max_episodes=args.max_episodes)
    out = _out_dir(args)
    path = os.path.join(out, "report.json")
    evaluate.save_report(report, path, context={
        "checkpoint": args.checkpoint, "setting": {"kind": "static",
                                                   "alpha": args.alpha,
                                                   "beta": args.beta}})
    _manifest(out, args, seed)
    _summary({"command": "eval-static", "status": "ok", "out": out,
              "report": path, "mean_reward": report.mean_reward,
              "slav": report.slav, "mean_vnf": report.mean_vnf,
              "mean_power": report.mean_power})
    return 0


def _cmd_eval_dynamic(args):
    _require(args, "checkpoint", "data", "dist", "out")
    seed = _seed(args)
    agent = load_agent(args.checkpoint)
    dataset = datagen.load_dataset(args.data)
    dist = _parse_dist(args.dist, "dist")
    beta_dist = None
    if agent.meta.task == "pm":
        if args.beta_dist is None:
            raise UsageError("power-management checkpoints need --beta-dist")
        beta_dist = _parse_dist(args.beta_dist, "beta-dist")
    report = evaluate.eval_dynamic(agent, dataset, dist, seed,
                                   split=args.split or "test",
                                   episode_len=args.episode_len or 32,
                                   beta_dist=beta_dist,
                                   max_episodes=args.max_episodes)
    out = _out_dir(args)
    path = os.path.join(out, "report.json")
    evaluate.save_report(report, path, context={
        "checkpoint": args.checkpoint,
        "setting": {"kind": "dynamic", "dist": dist.spec(),
                    "beta_dist": beta_dist.spec() if beta_dist else None,
                    "seed": seed}})
    _manifest(out, args, seed)
    _summary({"command": "eval-dynamic", "status": "ok", "out": out,
              "report": path, "mean_reward": report.mean_reward,
              "slav": report.slav, "mean_vnf": report.mean_vnf,
              "mean_power": report.mean_power, "seed": seed})
    return 0


def _cmd_scenario(args):
    _require(args, "checkpoint", "data", "scenario", "alpha0", "out")
    seed = _seed(args)
    agent = load_agent(args.checkpoint)
    dataset = datagen.load_dataset(args.data)
    if not os.path.exists(args.scenario):
        raise UsageError(f"scenario file not found: {args.scenario}")
    scenario = evaluate.Scenario.load(args.scenario)
    rows = evaluate.run_scenario(agent, dataset, scenario,
                                 alpha0=args.alpha0, beta0=args.beta0,
                                 split=args.split or "test", steps=args.steps)
    out = _out_dir(args)
    path = os.path.join(out, "trajectory.ndjson")
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    _manifest(out, args, seed)
    _summary({"command": "scenario", "status": "ok", "out": out,
              "trajectory": path, "steps": len(rows),
              "mean_vnf": float(np.mean([r["vnf_total"] for r in rows])),
              "mean_slav": float(np.mean([r["slav"] for r in rows]))})
    return 0


def _cmd_serve(args):
    _require(args, "checkpoint", "data")
    import uvicorn

    from prefnet.service import create_app

    agent = load_agent(args.checkpoint)
    dataset = datagen.load_dataset(args.data)
    host = args.host or "127.0.0.1"
    port = args.port or 8000
    app = create_app(agent, dataset, default_tick_ms=args.tick_ms or 500)
    if args.out:
        out = _out_dir(args)
        _manifest(out, args, _seed(args))
    _summary({"command": "serve", "status": "ok",
              "url": f"http://{host}:{port}", "checkpoint": args.checkpoint})
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


_DISPATCH = {
    "gen-data": _cmd_gen_data,
    "pretrain-grid": _cmd_pretrain_grid,
    "fit-dist": _cmd_fit_dist,
    "train": _cmd_train,
    "eval-static": _cmd_eval_static,
    "eval-dynamic": _cmd_eval_dynamic,
    "scenario": _cmd_scenario,
    "serve": _cmd_serve,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        args = _merge_config(args)
        return _DISPATCH[args.command](args)
    except UsageError as exc:
        print(json.dumps({"status": "usage-error", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure contract: diagnostic, exit 1
        print(json.dumps({"status": "error", "error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
