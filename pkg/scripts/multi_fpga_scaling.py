#!/usr/bin/env python3
"""Prefill scaling and per-device memory pressure across tensor-parallel shards.

Shows the two things that matter when spreading one model over several
cards: how close the speedup stays to ideal once the all-gather joins the
pipeline, and when the sharded KV and weight buffers finally fit.
"""

import argparse
import csv
import sys

from spatialperf import (
    ParallelismPlan,
    Phase,
    PhaseWorkload,
    balanced_allocation,
    buffer_plan,
    check_capacity,
    get_device,
    get_model,
    get_quant,
    multi_prefill_latency,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="vicuna")
    parser.add_argument("--device", default="u280")
    parser.add_argument("--quant", default="w4a8")
    parser.add_argument("--seq-len", type=int, default=512)
    parser.add_argument("--m", type=int, default=1024)
    parser.add_argument("--link-bw", default="100 Gb/s")
    parser.add_argument("--alpha", type=float, default=0.7)
    parser.add_argument("--tp", default="1,2,4,8")
    args = parser.parse_args()

    model = get_model(args.model)
    device = get_device(args.device)
    quant = get_quant(args.quant)
    workload = PhaseWorkload(Phase.PREFILL, seq_len=args.seq_len)
    alloc = balanced_allocation(args.m, model, seq_len=args.seq_len)
    plan_bits = buffer_plan(model, quant, workload, alloc)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["tp_size", "latency_ms", "speedup", "binding",
                     "sram_fits", "per_device_kv_mbit"])
    base = None
    for tp in (int(v) for v in args.tp.split(",")):
        if tp == 1:
            plan = ParallelismPlan()
        else:
            plan = ParallelismPlan(tp_size=tp, link_bandwidth=args.link_bw,
                                   efficiency=args.alpha)
        est = multi_prefill_latency(model, alloc, quant, workload, device, plan)
        base = base if base is not None else est.seconds
        cap = check_capacity(model, alloc, quant, workload, device, tp_size=tp)
        kv_mbit = plan_bits.scaled(tp).s_kv / 1e6
        writer.writerow([tp, f"{est.seconds * 1e3:.4f}",
                         f"{base / est.seconds:.3f}", est.binding_term.value,
                         "yes" if cap.ok else "no", f"{kv_mbit:.1f}"])


if __name__ == "__main__":
    main()
