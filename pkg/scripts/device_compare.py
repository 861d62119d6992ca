#!/usr/bin/env python3
"""Prefill and decode latency across the built-in device catalog.

Each device runs at its own maximum feasible balanced allocation, so the
comparison reflects what the part can actually hold rather than a fixed
design transplanted between cards.
"""

import argparse
import csv
import sys

from spatialperf import (
    InfeasibleError,
    Phase,
    PhaseWorkload,
    balanced_allocation,
    decode_latency,
    get_device,
    get_model,
    get_quant,
    prefill_latency,
    search_max_m,
    t_mem_cycles,
)

DEVICES = ("u280", "vck5000", "vhk158", "stratix10nx", "agilex7")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="gpt2")
    parser.add_argument("--quant", default="w4a8")
    parser.add_argument("--seq-len", type=int, default=128)
    parser.add_argument("--devices", default=",".join(DEVICES))
    args = parser.parse_args()

    model = get_model(args.model)
    quant = get_quant(args.quant)
    wl_prefill = PhaseWorkload(Phase.PREFILL, seq_len=args.seq_len)
    wl_decode = PhaseWorkload(Phase.DECODE, seq_len=args.seq_len)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["device", "max_m", "prefill_ms", "prefill_binding",
                     "decode_ms", "decode_binding"])
    for name in (n.strip() for n in args.devices.split(",")):
        device = get_device(name)
        try:
            best = search_max_m(model, device, quant, wl_prefill)
        except InfeasibleError:
            writer.writerow([name, 0, "", "", "", ""])
            continue
        alloc = balanced_allocation(best, model, seq_len=args.seq_len)
        t_mem = t_mem_cycles(model, quant, device)
        pre = prefill_latency(model, alloc, wl_prefill, device, t_mem)
        dec = decode_latency(model, alloc, wl_decode, device, t_mem)
        writer.writerow([name, best,
                         f"{pre.seconds * 1e3:.4f}", pre.binding_term.value,
                         f"{dec.seconds * 1e3:.4f}", dec.binding_term.value])


if __name__ == "__main__":
    main()
