#!/usr/bin/env python3
"""Run a full upload/access/delete/verify scenario and print the trace.

    python scripts/run_lifecycle.py [--seed N] [--profile f768] [--cheat MODE]

With --cheat skip_update or bad_gamma the fog misbehaves and the owner's
verification step reports false.
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cpad.fogsim import run_scenario
from cpad.group import get_group

SCRIPT = """
STEP aa setup universe=dummy,temp,humid,motion
STEP aa keygen to=object attrs=dummy,temp,humid
STEP aa keygen to=alice attrs=dummy,temp
STEP aa keygen to=bob attrs=dummy,motion
STEP object upload file=log1 policy="dummy AND (temp OR humid)" data="pressure=1013 temp=21.4"
STEP alice fetch file=log1 expect=ok
STEP bob fetch file=log1 expect=denied
STEP object delete file=log1
STEP object verify file=log1 {verify_expect}
STEP alice fetch file=log1 expect=gone
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--profile", default="f768")
    ap.add_argument("--cheat", choices=["skip_update", "bad_gamma"], default=None)
    args = ap.parse_args()

    script = SCRIPT.format(
        verify_expect="expect=false" if args.cheat else "expect=true"
    )
    if args.cheat:
        script = f"OPTION fog_cheat={args.cheat}\n" + script

    with tempfile.TemporaryDirectory() as root:
        trace = run_scenario(script, args.seed, root, profile=args.profile)
    print(trace.to_text(get_group(args.profile)), end="")
    print(f"# {len(trace.entries)} messages; trace digest "
          f"{trace.digest(get_group(args.profile))[:16]}…")
    for note in trace.notes():
        print(f"# {note}")


if __name__ == "__main__":
    main()
