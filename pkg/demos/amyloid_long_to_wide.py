"""Convert a long (group, value) CSV into the wide layout the CLI reads.

Usage: python amyloid_long_to_wide.py Amyloid.csv amyloid_wide.csv

Groups become columns in first-seen order; shorter columns are padded with
empty cells, which ``artest mean-eq --independent`` treats as missing.
"""

import csv
import sys
from itertools import zip_longest


def long_to_wide(src, dst, group_col="Group", value_col="Abeta"):
    groups = {}
    with open(src, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(row[group_col].strip(), []).append(row[value_col].strip())
    with open(dst, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(list(groups))
        out.writerows(zip_longest(*groups.values(), fillvalue=""))
    return list(groups)


if __name__ == "__main__":
    print("groups:", ", ".join(long_to_wide(sys.argv[1], sys.argv[2])))
