#!/usr/bin/env python3
"""Port-limited compute power as a function of SRAM word packing.

For each pack count k, finds the largest balanced allocation that still
gives every MAC partition a private memory port, then prints how far the
packed design could go before the other constraints intervene.
"""

import argparse
import csv
import sys

from spatialperf import (
    InfeasibleError,
    Phase,
    PhaseWorkload,
    QuantScheme,
    get_device,
    get_model,
    search_max_m,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="gpt2")
    parser.add_argument("--device", default="u280")
    parser.add_argument("--weight-bits", type=int, default=4)
    parser.add_argument("--seq-len", type=int, default=128)
    parser.add_argument("--packs", default="1,2,9,18",
                        help="comma list of pack counts to try")
    args = parser.parse_args()

    model = get_model(args.model)
    device = get_device(args.device)
    workload = PhaseWorkload(Phase.PREFILL, seq_len=args.seq_len, layers_on_chip=1)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["pack_count", "word_bits", "ports_only_max_m", "all_constraints_max_m"])
    for k in (int(v) for v in args.packs.split(",")):
        quant = QuantScheme(weight_bits=args.weight_bits, activation_bits=8,
                            pack_count=k, dsp_pack_factor=2)
        try:
            ports_only = search_max_m(model, device, quant, workload,
                                      families=("ports",))
            overall = search_max_m(model, device, quant, workload)
        except InfeasibleError:
            ports_only = overall = 0
        writer.writerow([k, k * args.weight_bits, ports_only, overall])


if __name__ == "__main__":
    main()
