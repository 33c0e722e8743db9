"""Print the oracle verification table (same as ``resdecay verify``)."""

import argparse
import sys

from resdecay.oracle import format_report, verification_suite

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true")
    rows = verification_suite(quick=parser.parse_args().quick)
    print(format_report(rows))
    sys.exit(0 if all(r.passed for r in rows) else 1)
