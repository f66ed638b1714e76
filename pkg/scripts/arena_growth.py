#!/usr/bin/env python3
"""Arena growth on a parameterized chain family.

The worst case of the information-state game is doubly exponential in the
plant; that is guarded (see --size-guard), not conquered.  This sweep shows
the growth trend at desk scale.
"""

import argparse
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

import sys

sys.path.insert(0, str(ROOT / "src"))

from opactrl import (  # noqa: E402
    PlantModel,
    SizeGuardExceeded,
    SynthesisConfig,
    expand_arena,
    prune_incomplete,
)


def chain_model(n: int) -> PlantModel:
    states = [str(i) for i in range(n)]
    transitions = [["0", "a", "1"]] + [
        [str(i), "u", str(i + 1)] for i in range(1, n - 1)
    ]
    return PlantModel.from_dict(
        {
            "states": states,
            "events": ["a", "u"],
            "initial": "0",
            "secret": [states[-1]],
            "transitions": transitions,
            "observable_supervisor": ["u"],
            "observable_intruder": ["a"],
            "controllable": ["u"],
        }
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-states", type=int, default=10)
    parser.add_argument("--size-guard", type=int, default=10**6)
    args = parser.parse_args()

    print(f"{'n':>3} {'arena':>8} {'pruned':>8} {'seconds':>8}")
    for n in range(2, args.max_states + 1):
        model = chain_model(n)
        start = time.perf_counter()
        try:
            arena = expand_arena(
                model, SynthesisConfig(size_guard=args.size_guard)
            )
        except SizeGuardExceeded as exc:
            print(f"{n:>3} size guard tripped: {exc}")
            break
        pruned = prune_incomplete(arena)
        elapsed = time.perf_counter() - start
        print(f"{n:>3} {arena.n_states:>8} {pruned.n_states:>8} {elapsed:>8.3f}")


if __name__ == "__main__":
    main()
