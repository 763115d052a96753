import json
import logging
import sys
from argparse import ArgumentParser
from pathlib import Path

import jsonschema
from rich.pretty import pprint

import fields
from analysis import cluster_report, compare, detect_defects
from errors import ConfigError, FlowStall, GlpinError, SolverError
from fields import build_grid, domain_from_dict, read_field, read_link_field, write_field, write_link_field
from scheduler import WarmupCosineStep
from sim import GLState, build_test_configuration, decomposition_check, minimize, random_state
from theory import PinningSpec, VortexConfig, bbh_gamma, build_ladder, build_pinning_term, h0c1, ladder_report, \
    london_from_xi0, lm_residual, meso_constants, minimize_w_meso, minimize_w_micro, predict, solve_lassoued_mironescu, \
    solve_london, solve_regular_part, synthetic_two_well, w_macro, w_micro_levels, wbar_table
from utils import apply_threads, check_positive, check_resolution, config_hash, load_config, none_or_str, \
    seed_all, setup_logging, write_report

logger = logging.getLogger("glpin")


class Context(object):
    """Lazily built objects shared by the subcommands of one run."""

    def __init__(self, config, verbose=False):
        self.config = config
        self.verbose = verbose
        self.method = config.get("solver", "direct")
        self._grid = self._london = self._pinning = self._U = self._ladder = None

    @property
    def spec(self):
        return PinningSpec.from_dict(self.config["pinning"])

    @property
    def epsilon(self):
        return float(self.config["pinning"]["epsilon"])

    @property
    def grid(self):
        if self._grid is None:
            self._grid = build_grid(domain_from_dict(self.config["domain"]), self.config["resolution"])
        return self._grid

    @property
    def london(self):
        if self._london is None:
            synthetic = self.config.get("synthetic_xi0")
            if synthetic:
                xi0 = synthetic_two_well(self.grid, [tuple(c) for c in synthetic["centers"]],
                                         depth=synthetic.get("depth", 0.2), width=synthetic.get("width", 0.1))
                self._london = london_from_xi0(xi0)
            else:
                self._london = solve_london(self.grid, method=self.method)
        return self._london

    @property
    def pinning(self):
        if self._pinning is None:
            self._pinning = build_pinning_term(self.spec, self.grid)
        return self._pinning

    @property
    def U(self):
        if self._U is None:
            self._U = solve_lassoued_mironescu(self.pinning, self.epsilon, verbose=self.verbose)
        return self._U

    def micro(self):
        r = self.config["renorm"]
        return minimize_w_micro(self.spec, search=r["micro_search"], Rhat=r["Rhat"], rhat=r["rhat"],
                                n_theta=r["n_theta"], levels=r["levels"], verbose=self.verbose)

    @property
    def ladder(self):
        if self._ladder is None:
            r = self.config["renorm"]
            london, spec = self.london, self.spec
            d_max = r["d_max"]
            if d_max < london.N0:
                logger.warning("renorm.d_max=%d is below N0=%d, raised to N0", d_max, london.N0)
                d_max = london.N0
            rng = seed_all(self.config["seeds"][0])
            x_star, w_min = self.micro()
            gamma, gamma_err = bbh_gamma(tuple(r["bbh_radii"]))
            H0 = h0c1(self.epsilon, spec.inclusion_size, spec.b, london.xi0_inf_norm, w_min, gamma)
            meso_C = meso_constants(london, d_max, multistart=r["multistart"], rng=rng)
            wbar = wbar_table(london, self.grid, d_max, meso_C)
            inputs = {"w_micro_min": w_min, "w_micro_argmin": list(x_star), "gamma": gamma, "gamma_error": gamma_err,
                      "xi0_inf_norm": london.xi0_inf_norm, "J0": london.J0, "epsilon": self.epsilon}
            self._ladder = build_ladder(wbar, london.N0, london.M_omega, H0, inputs=inputs)
        return self._ladder


def _out(args, config):
    out = Path(args.get("out") or config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_london(ctx, out):
    london = ctx.london
    write_field(str(out / "xi0"), london.xi0)
    if london.h0 is not None:
        write_field(str(out / "h0"), london.h0)
    return write_report(out / "london.json", {"london": london.to_dict(), "grid": ctx.grid.describe()}, ctx.config)


def run_pinning(ctx, out):
    pinning, U = ctx.pinning, ctx.U
    write_field(str(out / "a"), pinning.a)
    write_field(str(out / "U"), U)
    payload = {
        "spec": ctx.spec.to_dict(),
        "inclusions": len(pinning.inclusion_centers),
        "area_fraction": pinning.area_fraction(),
        "lm_residual": lm_residual(U, pinning, ctx.epsilon),
        "U_range": [float(U.interior().min()), float(U.interior().max())],
        "regime": ctx.spec.regime_note(),
    }
    return write_report(out / "pinning.json", payload, ctx.config)


def run_renorm_macro(ctx, out):
    items = ctx.config.get("vortices") or []
    if not items:
        raise ConfigError("vortices", "renorm-macro needs at least one vortex")
    config = VortexConfig.from_list(items)
    R = solve_regular_part(config, ctx.grid, method=ctx.method)
    write_field(str(out / "regular_part"), R)
    payload = {"vortices": config.to_list(), "w_macro": w_macro(config, ctx.grid, regular_part=R)}
    return write_report(out / "renorm_macro.json", payload, ctx.config)


def run_renorm_meso(ctx, out):
    r = ctx.config["renorm"]
    rng = seed_all(ctx.config["seeds"][0])
    rows = []
    for k, (p, H) in enumerate(zip(ctx.london.lambda_set, ctx.london.hessians)):
        for D in range(1, r["d_max"] + 1):
            result = minimize_w_meso(D, H, multistart=r["multistart"], rng=rng, verbose=ctx.verbose)
            rows.append({"k": k, "p": list(p), "D": D, "value": result.value, "converged": result.converged,
                         "points": [list(z) for z in result.config.points]})
    return write_report(out / "renorm_meso.json", {"constants": rows}, ctx.config)


def run_renorm_micro(ctx, out):
    r = ctx.config["renorm"]
    x_star, value = ctx.micro()
    levels = w_micro_levels(x_star, ctx.spec, Rhat=r["Rhat"], rhat=r["rhat"], n_theta=r["n_theta"], levels=r["levels"])
    payload = {"argmin": list(x_star), "value": value, "levels": levels, "spec": ctx.spec.to_dict()}
    return write_report(out / "renorm_micro.json", payload, ctx.config)


def run_gamma(ctx, out):
    value, error = bbh_gamma(tuple(ctx.config["renorm"]["bbh_radii"]))
    return write_report(out / "gamma_bbh.json", {"gamma": value, "error": error}, ctx.config)


def run_fields(ctx, out):
    return write_report(out / "fields.json", ladder_report(ctx.ladder), ctx.config)


def run_predict(ctx, h_ex):
    prediction = predict(h_ex, ctx.ladder, window=ctx.config.get("window", 0.0))
    payload = prediction.to_dict()
    payload["h_ex"] = h_ex
    print(json.dumps(payload, sort_keys=True))
    return payload


def _initial_state(ctx, h_ex, seed_vortices=None):
    items = None
    if seed_vortices is not None:
        with open(seed_vortices, "r") as f:
            items = json.load(f)
    elif ctx.config.get("vortices"):
        items = ctx.config["vortices"]
    if items is not None:
        config = VortexConfig.from_list(items)
        return build_test_configuration(config, ctx.london, ctx.U, ctx.epsilon, h_ex, pinning=ctx.pinning)
    rng = seed_all(ctx.config["seeds"][0])
    return random_state(ctx.grid, ctx.U, ctx.epsilon, h_ex, rng, london=ctx.london)


def simulate(ctx, h_ex, out, seed_vortices=None, max_sweeps=None):
    flow = ctx.config["flow"]
    max_sweeps = max_sweeps or flow["max_sweeps"]
    state = _initial_state(ctx, h_ex, seed_vortices)
    if flow.get("dt"):
        schedule = WarmupCosineStep(flow["dt"], warmup_steps=flow["warmup"], max_steps=max_sweeps)
    else:
        schedule = WarmupCosineStep.for_grid(ctx.grid, ctx.epsilon, warmup_steps=flow["warmup"], max_steps=max_sweeps)
    try:
        result = minimize(state, schedule=schedule, max_sweeps=max_sweeps, tol=flow["tol"], dt_min=flow["dt_min"],
                          reproject_every=flow["reproject_every"], verbose=ctx.verbose)
    except FlowStall as e:
        if e.state is not None:
            _dump_state(e.state, out)
            e.trace.to_csv(out / "trace.csv", index=False)
        raise
    _dump_state(result.state, out)
    result.trace.to_csv(out / "trace.csv", index=False)
    payload = {"h_ex": h_ex, "epsilon": ctx.epsilon, "converged": result.converged, "sweeps": result.sweeps,
               "energy": float(result.trace["energy"].iloc[-1]), "min_abs_v": result.state.min_abs_v(),
               "schedule": schedule.to_dict()}
    write_report(out / "run.json", payload, ctx.config)
    return result


def _dump_state(state, out):
    write_field(str(out / "v"), state.v)
    write_link_field(str(out / "A"), state.A)


def _load_state(ctx, directory):
    directory = Path(directory)
    with open(directory / "run.json", "r") as f:
        run = json.load(f)
    _, v = read_field(str(directory / "v"), ctx.grid)
    A = read_link_field(str(directory / "A"), ctx.grid)
    return GLState(v=v, A=A, h_ex=float(run["h_ex"]), U=ctx.U, epsilon=float(run["epsilon"]))


def analyze(ctx, directory, out):
    state = _load_state(ctx, directory)
    defects = detect_defects(state.v, pinning=ctx.pinning)
    report = cluster_report(defects, ctx.london, state.h_ex, pinning=ctx.pinning)
    prediction = predict(state.h_ex, ctx.ladder, window=ctx.config.get("window", 0.0))
    rng = seed_all(ctx.config["seeds"][0])
    meso_points = {}
    for k, (c, H) in enumerate(zip(report.clusters, ctx.london.hessians)):
        if c.D >= 2:
            meso_points[k] = [list(z) for z in minimize_w_meso(c.D, H, rng=rng).config.points]
    summary = compare(report, prediction, london=ctx.london, meso_points=meso_points)
    summary["prediction"] = prediction.to_dict()
    write_report(out / "report.json", report.to_dict(), ctx.config)
    write_report(out / "compare.json", summary, ctx.config)
    return report, summary


def check_decomposition(ctx, directory, out):
    state = _load_state(ctx, directory)
    vortices = [d for d in detect_defects(state.v, pinning=ctx.pinning) if not d.touches_boundary and d.degree != 0]
    config = VortexConfig([d.center for d in vortices], [d.degree for d in vortices])
    payload = decomposition_check(state, config, ctx.london)
    payload["vortices"] = config.to_list()
    return write_report(out / "decomposition.json", payload, ctx.config)


def dump_info():
    print("Available domain shapes:")
    for x in fields.all_domains.keys():
        print(f"\t{x}")
    print()
    print("Subcommands:")
    for x in COMMANDS:
        print(f"\t{x}")


COMMANDS = ["london", "pinning", "renorm-macro", "renorm-meso", "renorm-micro", "gamma-bbh", "fields", "predict",
            "simulate", "analyze", "check-decomposition", "sweep", "info"]


def main(args):
    if type(args) is not dict:
        args = vars(args)
    command = args["command"]
    if command == "info":
        dump_info()
        return 0

    overrides = {}
    if args.get("resolution") is not None:
        overrides["resolution"] = args["resolution"]
    if args.get("epsilon") is not None:
        overrides["pinning"] = {"epsilon": args["epsilon"]}
    config = load_config(args.get("config"), overrides=overrides)
    if args.get("verbose"):
        print("CONFIG:")
        pprint(config)
        print(f"config hash {config_hash(config)}")
    apply_threads()
    seed_all(config["seeds"][0])
    ctx = Context(config, verbose=args.get("verbose", False))

    if command == "predict":
        h_ex = args.get("hex") or config.get("h_ex")
        if h_ex is None:
            raise ConfigError("h_ex", "predict needs --hex or h_ex in the config")
        run_predict(ctx, h_ex)
        return 0

    out = _out(args, config)
    if command == "london":
        run_london(ctx, out)
    elif command == "pinning":
        run_pinning(ctx, out)
    elif command == "renorm-macro":
        run_renorm_macro(ctx, out)
    elif command == "renorm-meso":
        run_renorm_meso(ctx, out)
    elif command == "renorm-micro":
        run_renorm_micro(ctx, out)
    elif command == "gamma-bbh":
        run_gamma(ctx, out)
    elif command == "fields":
        run_fields(ctx, out)
    elif command == "simulate":
        h_ex = args.get("hex") or config.get("h_ex")
        if h_ex is None:
            raise ConfigError("h_ex", "simulate needs --hex or h_ex in the config")
        simulate(ctx, h_ex, out, seed_vortices=args.get("seed_vortices"), max_sweeps=args.get("max_sweeps"))
    elif command == "analyze":
        analyze(ctx, args["fields"], out)
    elif command == "check-decomposition":
        check_decomposition(ctx, args["fields"], out)
    elif command == "sweep":
        from sweep import run_sweep
        run_sweep(config, out, verbose=args.get("verbose", False))
    return 0


def build_parser():
    parser = ArgumentParser(prog="glpin", description="Pinned Ginzburg-Landau vortex toolkit")
    parser.add_argument("--config", type=none_or_str, default=None)  # JSON or YAML run configuration
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--resolution", type=check_resolution, default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name in ("predict", "simulate"):
            p.add_argument("--hex", type=check_positive, default=None)
        if name == "simulate":
            p.add_argument("--epsilon", type=check_positive, default=None)
            p.add_argument("--seed-vortices", dest="seed_vortices", type=str, default=None)
            p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=None)
        if name in ("analyze", "check-decomposition"):
            p.add_argument("--fields", type=str, required=True)
        # allow global flags after the subcommand too
        p.add_argument("--config", type=none_or_str, default=None, dest="sub_config")
        p.add_argument("--out", type=str, default=None, dest="sub_out")
        p.add_argument("--verbose", action="store_true", dest="sub_verbose")
    return parser


def parse(argv):
    args = vars(build_parser().parse_args(argv))
    args["config"] = args.pop("sub_config") or args.get("config")
    args["out"] = args.pop("sub_out") or args.get("out")
    args["verbose"] = args.pop("sub_verbose") or args.get("verbose")
    return args


def run(argv=None):
    """CLI entry: exit 1 on invalid input, 2 when a solver fails."""
    argv = sys.argv[1:] if argv is None else argv
    args = parse(argv)
    setup_logging(args["verbose"])
    try:
        return main(args)
    except jsonschema.ValidationError as e:
        print(f"{'.'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}", file=sys.stderr)
        return 1
    except (SolverError, FlowStall) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 2
    except (ValueError, GlpinError) as e:
        print(str(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
