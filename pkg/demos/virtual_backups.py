#!/usr/bin/env python3
"""Learning acceleration from statistically equivalent extra backups.

One observed slot pins down the arrival count, the realized costs, and the
frequency/type transition; only the buffer recursion depends on the buffer
level. The virtual-experience learner exploits that to update up to psi
extra buffer levels per slot with tuples it never visited. This script
sweeps psi and shows the average reward climbing at a fixed slot budget,
then contrasts a trace-decay learner that replays visited pairs instead.
"""

import numpy as np

from layerq import config_from_dict, run_single

HORIZON = 16_000
SEEDS = (1, 2, 3)


def sweep(algorithm: str, psi: int) -> float:
    cfg = config_from_dict({
        "learner": {"algorithm": algorithm, "psi": psi},
        "run": {"horizon": HORIZON, "seeds": list(SEEDS)},
        "oracle": {"enabled": False},
    })
    rewards = [run_single(cfg, seed).stats.mean_reward for seed in SEEDS]
    return float(np.median(rewards))


def main() -> None:
    print(f"median average reward over {len(SEEDS)} seeds, {HORIZON} slots\n")
    print("extra backups per slot (statistically equivalent buffer levels):")
    base = None
    for psi in (0, 1, 5, 15):
        reward = sweep("virtual-et", psi)
        base = reward if base is None else base
        print(f"  psi = {psi:>2}: {reward:+.4f}")

    td = sweep("td-lambda", 15)
    print("\nsame budget spent replaying the visited trajectory instead:")
    print(f"  psi = 15: {td:+.4f}  (no new states visited, little to gain)")


if __name__ == "__main__":
    main()
