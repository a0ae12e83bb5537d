"""Write the seeded surrogate corpora and their embedding table to a directory.

    python3 scripts/make_synthetic_suite.py --out /tmp/surrogates --seed 0

Point DESMINE_DATA_DIR at the output to drive the CLI without the published
datasets. The files are stand-ins for exercising the pipeline only.
"""

import argparse

from desmine import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=50, help="embedding dimension")
    args = ap.parse_args()
    suite = synthetic.make_suite(seed=args.seed, dim=args.dim)
    for path in synthetic.write_suite(suite, args.out):
        print(path)


if __name__ == "__main__":
    main()
