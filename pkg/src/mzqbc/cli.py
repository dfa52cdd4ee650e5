"""Batch experiment runner.

Subcommands: run (one session), sweep (parameter grids to CSV),
strategies (detection-probability table), nogo (operator-model report),
counterfactual (probe attack report / grid), verify (invariant suite).

Exit codes: 0 success, 2 config or parameter error, 3 size-guard
violation, and 1 from `verify` when an invariant fails.  All randomness
flows from one master seed (per-trial blocks are split deterministically),
and every CSV/JSON emission carries the config hash and seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import codes as codes_mod
from . import config as config_mod
from . import counterfactual, kernels, operator_model, protocol, strategies
from . import optics
from .config import ConfigError
from .util import GuardError


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return args.func(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzqbc",
        description="Interferometric bit-commitment simulator and analysis runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "strategies": cmd_strategies,
        "nogo": cmd_nogo,
        "counterfactual": cmd_counterfactual,
        "verify": cmd_verify,
    }
    for name, func in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--trials", type=int, help="trial count (overrides config)")
        p.add_argument("--threads", type=int, help="worker threads (overrides config)")
        p.set_defaults(func=func)
    return parser


def _merge_config(args) -> dict[str, str]:
    cfg = config_mod.load_config(args.config) if args.config else {}
    for key in ("seed", "out", "format", "trials", "threads"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = str(val)
    return cfg


# --- shared pieces ------------------------------------------------------------

def _load_code(cfg) -> codes_mod.LinearCode:
    path = config_mod.get_str(cfg, "code_file", None)
    if path is not None:
        return codes_mod.read_generator_file(path)
    name = config_mod.get_str(cfg, "builtin_code", "extended_hamming")
    return codes_mod.builtin_code(name)


def _load_params(cfg, code=None) -> protocol.ProtocolParams:
    code = code or _load_code(cfg)
    r_raw = config_mod.get_str(cfg, "r", None)
    seed = config_mod.get_int(cfg, "seed", 0)
    if r_raw is None:
        r = _default_r(code, seed)
    else:
        r = codes_mod.bits_from_string(r_raw)
    R = config_mod.get_float(cfg, "R", 0.3)
    eps = config_mod.get_float(cfg, "epsilon", None)
    return protocol.ProtocolParams(
        code=code,
        r=r,
        R=R,
        f=config_mod.get_float(cfg, "f", 0.25),
        epsilon=eps,
        seed=seed,
        symmetric_ok=abs(R - 0.5) < 1e-12,
    )


def _default_r(code, seed) -> np.ndarray:
    """A deterministic nonzero mask with both committed subsets nonempty."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA11CE)))
    for _ in range(1000):
        r = rng.integers(0, 2, size=code.n, dtype=np.uint8)
        if not r.any():
            continue
        c0, c1 = codes_mod.coset_split(code, r)
        if len(c0) and len(c1):
            return r
    raise ValueError("could not find a usable r; supply one explicitly")


def _alice_policy(cfg) -> protocol.AlicePolicy:
    name = config_mod.get_str(cfg, "alice", "honest")
    if name == "honest":
        return protocol.HonestAlice(bit=config_mod.get_int(cfg, "commit_bit", 0))
    if name == "midpoint_cheat":
        return protocol.MidpointCheatAlice()
    if name == "fbs_probe":
        return protocol.FbsProbeAlice(bit=config_mod.get_int(cfg, "commit_bit", None))
    raise ConfigError(f"unknown alice policy {name!r}")


def _bob_policy(cfg) -> protocol.BobPolicy:
    name = config_mod.get_str(cfg, "bob", "honest")
    if name == "honest":
        return protocol.HonestBob(f=config_mod.get_float(cfg, "f", 0.25))
    if name == "full_intercept":
        return protocol.FullInterceptBob()
    if name == "partial_intercept":
        return protocol.PartialInterceptBob(m=config_mod.get_int(cfg, "m"))
    raise ConfigError(f"unknown bob policy {name!r}")


# presentation-only keys: they never affect computed results, so they stay
# out of the provenance hash (threads is excluded because trial blocks are
# seed-split independently of the worker count)
_NON_SEMANTIC_KEYS = frozenset({"out", "format", "threads"})


def _provenance(cfg) -> dict:
    semantic = {k: v for k, v in cfg.items() if k not in _NON_SEMANTIC_KEYS}
    return {
        "config_hash": config_mod.config_hash(semantic),
        "seed": config_mod.get_int(cfg, "seed", 0),
        "backend": kernels.BACKEND,
    }


def _emit_json(cfg, obj) -> None:
    payload = {**_provenance(cfg), **obj}
    text = json.dumps(payload, indent=2, sort_keys=True)
    out = config_mod.get_str(cfg, "out", None)
    if out is None:
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _emit_csv(cfg, rows: list[dict], fields: list[str]) -> None:
    prov = _provenance(cfg)
    fields = fields + ["config_hash", "seed"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, "config_hash": prov["config_hash"], "seed": prov["seed"]})
    out = config_mod.get_str(cfg, "out", None)
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(out, "w", newline="") as fh:
            fh.write(buf.getvalue())


# --- subcommands --------------------------------------------------------------

def cmd_run(cfg) -> int:
    params = _load_params(cfg)
    rng = np.random.default_rng(params.seed)
    alice = _alice_policy(cfg)
    bob = _bob_policy(cfg)
    transcript = protocol.run_commit(alice, bob, params, rng)
    if isinstance(alice, protocol.MidpointCheatAlice):
        announcement = protocol.Announcement(
            b=codes_mod.parity(transcript.cheat_target, params.r),
            c=transcript.cheat_target,
        )
    else:
        announcement = protocol.honest_announcement(transcript)
    unveil = protocol.run_unveil(transcript, announcement)
    doc = protocol.transcript_to_dict(transcript)
    doc["announcement"] = {
        "b": announcement.b,
        "c": codes_mod.string_from_bits(announcement.c),
    }
    doc["unveil"] = unveil
    _emit_json(cfg, doc)
    _print_summary(transcript, unveil)
    return 0


def _print_summary(transcript, unveil) -> None:
    p = transcript.params
    lines = [
        ("code", f"({p.code.n},{p.code.k},{p.code.d})"),
        ("r", codes_mod.string_from_bits(p.r)),
        ("R / f / epsilon", f"{p.R} / {p.f} / {p.epsilon}"),
        ("codeword sent", codes_mod.string_from_bits(transcript.codeword)),
        ("intercepted", str(sum(m == protocol.INTERCEPT for m in transcript.modes))),
        ("mismatches n'", str(transcript.n_mismatch)),
        ("f estimate", f"{transcript.f_estimate:.4f} (abort at {p.threshold:.4f})"),
        ("alice verdict", transcript.alice_verdict),
        ("unveil", unveil),
    ]
    width = max(len(k) for k, _ in lines)
    for key, val in lines:
        print(f"{key.ljust(width)}  {val}", file=sys.stderr)


SWEEP_FIELDS = [
    "code", "n", "k", "d", "R", "f", "epsilon", "trials",
    "abort_frequency", "proceed_trials", "cheat_accept_rate",
    "predicted_escape", "mean_posterior_true_bit", "mean_max_posterior",
    "photons_current", "photons_prior", "photon_ratio",
    "duration_current", "duration_prior", "duration_ratio",
]


def cmd_sweep(cfg) -> int:
    f_grid = config_mod.get_float_list(cfg, "f_grid", [0.0, 0.25, 0.5])
    r_grid = config_mod.get_float_list(cfg, "R_grid", [config_mod.get_float(cfg, "R", 0.3)])
    code_names = config_mod.get_str_list(cfg, "codes", ["extended_hamming"])
    trials = config_mod.get_int(cfg, "trials", 10000)
    threads = config_mod.get_int(cfg, "threads", 1)
    s_over_n = config_mod.get_float(cfg, "s_over_n", 10.0)
    if not f_grid or not r_grid or not code_names:
        raise ConfigError("empty sweep grid")
    rows = []
    for name in code_names:
        code = codes_mod.builtin_code(name)
        for R in r_grid:
            for f in f_grid:
                sub = dict(cfg)
                sub.update({"builtin_code": name, "R": repr(R), "f": repr(f)})
                params = _load_params(sub, code=code)
                binding = protocol.run_binding_experiment(params, trials, threads=threads)
                m = int(round(f * code.n))
                concealing = protocol.run_concealing_experiment(
                    params, m, trials, threads=threads
                )
                eff = protocol.efficiency_metrics(params, s_over_n=s_over_n)
                rows.append(
                    {
                        "code": name,
                        "n": code.n,
                        "k": code.k,
                        "d": code.d,
                        "R": R,
                        "f": f,
                        "epsilon": params.epsilon,
                        "trials": trials,
                        "abort_frequency": concealing["abort_frequency"],
                        "proceed_trials": binding["proceed_trials"],
                        "cheat_accept_rate": binding["accept_rate_among_proceed"],
                        "predicted_escape": binding["predicted_escape"],
                        "mean_posterior_true_bit": concealing["mean_posterior_true_bit"],
                        "mean_max_posterior": concealing["mean_max_posterior"],
                        "photons_current": eff["photons_current"],
                        "photons_prior": eff["photons_prior"],
                        "photon_ratio": eff["photon_ratio"],
                        "duration_current": eff["duration_current"],
                        "duration_prior": eff["duration_prior"],
                        "duration_ratio": eff["duration_ratio"],
                    }
                )
    _emit_csv(cfg, rows, SWEEP_FIELDS)
    return 0


def cmd_strategies(cfg) -> int:
    r_grid = config_mod.get_float_list(
        cfg, "R_grid", [round(0.1 * i, 1) for i in range(1, 10)]
    )
    rows = strategies.strategy_table_rows(r_grid)
    search_trials = config_mod.get_int(cfg, "search_trials", 0)
    if search_trials > 0:
        rng = np.random.default_rng(config_mod.get_int(cfg, "seed", 0))
        dim = config_mod.get_int(cfg, "ancilla_dim", 2)
        for R in r_grid:
            bs = optics.BeamSplitterParams(R=R, symmetric_ok=True)
            best, _ = strategies.search_epsilon(dim, search_trials, rng, bs)
            for bit in (0, 1):
                rows.append(
                    {
                        "strategy": "search_best",
                        "R": R,
                        "bit": bit,
                        "detection_prob": strategies.detection_prob(best, bit, bs),
                    }
                )
    if config_mod.get_str(cfg, "format", "csv") == "json":
        _emit_json(cfg, {"table": rows})
    else:
        _emit_csv(cfg, rows, ["strategy", "R", "bit", "detection_prob"])
    return 0


def cmd_nogo(cfg) -> int:
    code = _load_code_small(cfg)
    r_raw = config_mod.get_str(cfg, "r", "1" * code.n)
    r = codes_mod.bits_from_string(r_raw)
    modes = config_mod.get_str_list(cfg, "modes", ["intercept"] + ["bypass"] * (code.n - 1))
    trials = config_mod.get_int(cfg, "trials", 100)
    rng = np.random.default_rng(config_mod.get_int(cfg, "seed", 0))
    system = operator_model.CompositeSystem(n=code.n)
    report = operator_model.alice_local_invariance(system, modes, code, r, trials, rng)
    intercepted = [i for i, m in enumerate(modes) if m == "intercept"]
    posteriors = {"no_knowledge": operator_model.bob_bit_posterior(code, r, [], [])}
    per_word = []
    for word in code.codewords():
        per_word.append(
            operator_model.bob_bit_posterior(code, r, intercepted, word[intercepted])
        )
    posteriors["mean_max_with_intercepted_known"] = float(
        np.mean([max(p) for p in per_word])
    )
    _emit_json(
        cfg,
        {
            "code": f"({code.n},{code.k},{code.d})",
            "r": codes_mod.string_from_bits(r),
            "modes": modes,
            "max_deviation": report["max_deviation"],
            "max_overlap_deviation": report["max_overlap_deviation"],
            "overlaps": {
                "reduced_overlap": report["reduced_overlap"],
                "reduced_trace_distance": report["reduced_trace_distance"],
            },
            "posteriors": posteriors,
        },
    )
    return 0


def _load_code_small(cfg) -> codes_mod.LinearCode:
    path = config_mod.get_str(cfg, "code_file", None)
    if path is not None:
        return codes_mod.read_generator_file(path)
    name = config_mod.get_str(cfg, "builtin_code", "repetition")
    return codes_mod.builtin_code(name)


def cmd_counterfactual(cfg) -> int:
    cycles = config_mod.get_int(cfg, "M", 100)
    if config_mod.get_str(cfg, "format", "json") == "csv":
        m_grid = config_mod.get_int_list(cfg, "M_grid", [1, 5, 25, 100])
        points = config_mod.get_int(cfg, "theta_points", 13)
        thetas = [2 * math.pi * i / points for i in range(points)]
        rows = counterfactual.fbs_sweep_rows(m_grid, thetas)
        _emit_csv(
            cfg,
            rows,
            ["M", "theta", "Dc_bypass", "Dd_bypass", "Dc_intercept",
             "Dd_intercept", "absorbed_intercept"],
        )
        return 0
    params = _load_params(cfg)
    rng = np.random.default_rng(params.seed)
    sessions = config_mod.get_int(cfg, "sessions", 100)
    fbs = counterfactual.FbsConfig(cycles=cycles)
    reports = {}
    which = config_mod.get_str(cfg, "defense", "both")
    if which in ("off", "both"):
        reports["defense_off"] = counterfactual.attack_session(
            params, False, fbs, rng, sessions=sessions
        )
    if which in ("on", "both"):
        reports["defense_on"] = counterfactual.attack_session(
            params, True, fbs, rng, sessions=sessions
        )
    if not reports:
        raise ConfigError("defense must be on, off, or both")
    _emit_json(cfg, {"reports": reports})
    return 0


# --- verify -------------------------------------------------------------------

def cmd_verify(cfg) -> int:
    seed = config_mod.get_int(cfg, "seed", 0)
    rng = np.random.default_rng(seed)
    perturb = config_mod.get_bool(cfg, "perturb_bs", False)
    checks = [
        _check_mz_determinism(cfg, perturb),
        _check_orthogonality(cfg, rng),
        _check_beta_local(cfg, rng),
        _check_fbs_convergence(cfg),
        _check_posterior_oracle(cfg, rng),
    ]
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def _check_mz_determinism(cfg, perturb: bool):
    tol = config_mod.get_float(cfg, "tol_mz", 1e-12)
    worst = 0.0
    for R in [round(0.1 * i, 1) for i in range(1, 10)]:
        bs = optics.BeamSplitterParams(R=R, symmetric_ok=True)
        for bit in (0, 1):
            state = optics.encode(bit, bs)
            if perturb:
                # negative-control hook: a quarter-wave error on rail X
                state = optics.phase_apply(state, optics.RAIL_X, math.pi / 2)
            dist = optics.detection_distribution(state, bs)
            worst = max(worst, 1.0 - dist.get(optics.expected_event(bit), 0.0))
    return (
        "mz_determinism",
        worst <= tol,
        f"max miss probability {worst:.3e} (tol={tol:g})",
    )


def _check_orthogonality(cfg, rng):
    tol = config_mod.get_float(cfg, "tol_orthogonality", 1e-12)
    worst = 0.0
    for name in ("repetition", "hamming", "extended_hamming"):
        code = codes_mod.builtin_code(name)
        tried = 0
        while tried < 5:
            r = rng.integers(0, 2, size=code.n, dtype=np.uint8)
            if not r.any():
                continue
            c0, c1 = codes_mod.coset_split(code, r)
            if not len(c0) or not len(c1):
                continue
            tried += 1
            rho0 = operator_model.committed_density(code, r, 0)
            rho1 = operator_model.committed_density(code, r, 1)
            worst = max(worst, abs(operator_model.overlap(rho0, rho1)))
    return (
        "committed_state_orthogonality",
        worst <= tol,
        f"max overlap {worst:.3e} (tol={tol:g})",
    )


def _check_beta_local(cfg, rng):
    tol = config_mod.get_float(cfg, "tol_beta_local", 1e-9)
    code = codes_mod.repetition_code(3)
    system = operator_model.CompositeSystem(n=3)
    report = operator_model.alice_local_invariance(
        system, ["intercept", "bypass", "bypass"],
        code, np.array([1, 1, 1], dtype=np.uint8), trials=20, rng=rng,
    )
    dev = max(report["max_deviation"], report["max_overlap_deviation"])
    return (
        "sender_local_invariance",
        dev <= tol,
        f"max deviation {dev:.3e} (tol={tol:g})",
    )


def _check_fbs_convergence(cfg):
    tol = config_mod.get_float(cfg, "tol_fbs", 1e-12)
    worst = 0.0
    prev_loss = None
    monotone = True
    for m in (1, 2, 4, 8, 16, 32, 64, 128):
        dist = counterfactual.fbs_run(counterfactual.FbsConfig(cycles=m), blocked=True)
        closed = counterfactual.blocked_dd_probability(m)
        worst = max(worst, abs(dist["Dd"] - closed))
        loss = 1.0 - dist["Dd"]
        if prev_loss is not None and loss > prev_loss + 1e-12:
            monotone = False
        prev_loss = loss
    at_100 = 1.0 - counterfactual.fbs_run(
        counterfactual.FbsConfig(cycles=100), blocked=True
    )["Dd"]
    open_dc = counterfactual.fbs_run(
        counterfactual.FbsConfig(cycles=100), blocked=False
    )["Dc"]
    ok = worst <= tol and monotone and at_100 <= 0.05 and abs(open_dc - 1.0) <= tol
    return (
        "probe_chain_convergence",
        ok,
        f"closed-form dev {worst:.3e}, loss@100 {at_100:.4f} (tol={tol:g})",
    )


def _check_posterior_oracle(cfg, rng):
    sigmas = config_mod.get_float(cfg, "tol_posterior_sigmas", 3.0)
    res = protocol.sample_intercept_posterior(0.5, 0.5, 100_000, rng)
    dev = abs(res["empirical_posterior"] - res["predicted_posterior"])
    bound = sigmas * res["three_sigma"] / 3.0
    return (
        "intercept_posterior_oracle",
        dev <= bound,
        f"|empirical-predicted| {dev:.5f} <= {bound:.5f} ({sigmas:g} sigma)",
    )


if __name__ == "__main__":
    sys.exit(main())
