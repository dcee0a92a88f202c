#!/usr/bin/env python3
"""Diff harness predictions against in-process predictions.

usage: agreement.py <model.json> <dataset.csv> <predictions.csv>

Prints the agreement percentage and any mismatching rows. Rows whose
decision-path features sit within the float32 guard margin of a split
threshold are listed separately; a mismatch there is a representable
precision artifact, anywhere else it is a bug. Exits 0 only on 100%
agreement.
"""

import csv
import sys

from sirec import codegen, io


def main(argv):
    if len(argv) != 4:
        print(__doc__.strip().splitlines()[2], file=sys.stderr)
        return 1
    model = io.read_model(argv[1])
    dataset = io.read_dataset(argv[2])

    with open(argv[3], newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["row_index", "predicted_label"]:
            print(f"error: unexpected predictions header {header}", file=sys.stderr)
            return 1
        device = [int(label) for _, label in reader]

    agreement, mismatches, flagged = codegen.parity_check(model, dataset, device)
    print(f"rows: {len(dataset)}")
    print(f"agreement: {100.0 * agreement:.2f}%")
    if mismatches:
        print(f"mismatched rows: {mismatches}")
    if flagged:
        print(f"rows near a split threshold (float32 guard): {flagged}")
    return 0 if agreement == 1.0 else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
