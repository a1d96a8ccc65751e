"""Time the mining pipeline on synthetic datasets of increasing size.

Prints a row per size with generation time, mining time, and the stats the
miner reports (events, edges, components, sets visited, caps found).
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from capmine.miner import mine, params_from_dict
from capmine.synth import SynthConfig, generate

SIZES = [(100, 1_000), (250, 2_500), (500, 5_000)]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=99)
    parser.add_argument("--noise", type=float, default=0.01)
    parser.add_argument("--planted", type=int, default=30)
    parser.add_argument(
        "--sizes",
        default=",".join(f"{s}x{t}" for s, t in SIZES),
        help="comma separated SENSORSxTIMESTAMPS pairs",
    )
    args = parser.parse_args()

    sizes = []
    for token in args.sizes.split(","):
        sensors, _, timestamps = token.partition("x")
        sizes.append((int(sensors), int(timestamps)))

    header = f"{'size':>12}  {'generate':>9}  {'mine':>8}  stats"
    print(header)
    print("-" * len(header))
    for sensors, timestamps in sizes:
        config = SynthConfig(
            sensors=sensors,
            attributes=5,
            timestamps=timestamps,
            planted_caps=min(args.planted, sensors // 3),
            noise=args.noise,
            seed=args.seed,
        )
        started = time.perf_counter()
        output = generate(config)
        generated = time.perf_counter() - started

        params = params_from_dict(json.loads(output.manifest_bytes())["suggested_params"])
        started = time.perf_counter()
        result = mine(output.dataset, params)
        mined = time.perf_counter() - started

        print(
            f"{sensors:>5}x{timestamps:<6}  {generated:>8.2f}s  {mined:>7.2f}s  "
            f"{json.dumps(result.stats, sort_keys=True)}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
