import logging
from argparse import ArgumentParser
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

from errors import ConfigError
from utils import load_config, setup_logging, threads, write_report

logger = logging.getLogger(__name__)

COLUMNS = ["hex", "d_observed", "d_predicted", "energy", "min_abs_v"]


def sweep_values(config):
    sweep = config.get("sweep")
    if not sweep:
        raise ConfigError("sweep", "a sweep needs {from, to, steps}")
    if sweep["to"] < sweep["from"]:
        raise ConfigError("sweep.to", f"must not be below sweep.from={sweep['from']}")
    return [float(h) for h in np.linspace(sweep["from"], sweep["to"], sweep["steps"])]


def run_point(config, h_ex, directory, prediction):
    """One independent simulation at h_ex in its own directory; returns its sweep.csv row."""
    from analysis import detect_defects
    from glpin import Context, simulate

    torch.set_num_threads(1)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ctx = Context(config)
    result = simulate(ctx, h_ex, directory)
    defects = detect_defects(result.state.v, pinning=ctx.pinning)
    observed = sum(1 for d in defects if not d.touches_boundary and d.degree != 0)
    return {"hex": h_ex, "d_observed": observed, "d_predicted": prediction["d"],
            "energy": float(result.trace["energy"].iloc[-1]), "min_abs_v": result.state.min_abs_v()}


def _wandb_run(config):
    project = config.get("wandb")
    if not project:
        return None
    import wandb
    return wandb.init(project=project, config=config, reinit=True)


def run_sweep(config, out, verbose=False):
    """Simulate every h_ex of the sweep in parallel and write sweep.csv sorted by h_ex."""
    from glpin import Context
    from theory import ladder_report, predict

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    values = sweep_values(config)
    ladder = Context(config, verbose=verbose).ladder
    predictions = {h: predict(h, ladder, window=config.get("window", 0.0)).to_dict() for h in values}
    write_report(out / "fields.json", ladder_report(ladder), config)

    workers = min(threads(), len(values))
    logger.info("sweeping %d fields on %d workers", len(values), workers)
    rows = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_point, config, h, out / f"hex_{h:.6g}", predictions[h]) for h in values]
        for future in tqdm(futures, disable=not verbose, desc="sweep"):
            rows.append(future.result())

    frame = pd.DataFrame(rows, columns=COLUMNS).sort_values("hex").reset_index(drop=True)
    frame.to_csv(out / "sweep.csv", index=False)

    run = _wandb_run(config)
    if run is not None:
        for row in frame.to_dict("records"):
            run.log(row)
        run.finish()
    return frame


def main(args):
    if type(args) is not dict:
        args = vars(args)
    if not args['configuration_file']:
        raise FileNotFoundError
    config = load_config(args['configuration_file'])
    run_sweep(config, args['out'] or config['output_dir'], verbose=args['verbose'])


if __name__ == "__main__":
    parser = ArgumentParser()
    parser.add_argument('configuration_file')
    parser.add_argument('--out', type=str, default=None)
    parser.add_argument('--verbose', action='store_true')

    _args = parser.parse_args()
    setup_logging(_args.verbose)
    main(_args)
