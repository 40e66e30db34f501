"""Write every built-in fixture as instance, pattern and merger JSON files."""

import argparse
import os

from sbqc import fixtures
from sbqc.fileio import serialize_instance, serialize_merger, serialize_pattern


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "fixtures"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, build in fixtures.ALL.items():
        inst = build()
        files = {
            f"{name}.instance.json": serialize_instance(inst),
            f"{name}.u0.json": serialize_pattern(inst.u0),
            f"{name}.u1.json": serialize_pattern(inst.u1),
            f"{name}.merger.json": serialize_merger(inst.merger),
        }
        for fname, text in files.items():
            with open(os.path.join(args.out, fname), "w") as fh:
                fh.write(text)
        print(f"wrote {name}")


if __name__ == "__main__":
    main()
