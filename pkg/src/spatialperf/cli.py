"""Command-line front end: estimate, search-m, sweep, compare.

Exit codes: 0 when the requested design point is feasible (or the command
completed), 1 when the point or search is infeasible, 2 for input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace

from .catalog import (
    DeviceSpec,
    ModelSpec,
    Phase,
    PhaseWorkload,
    QuantScheme,
    Residency,
    get_device,
    get_model,
    get_quant,
    load_device_spec,
    load_model_spec,
    load_quant_scheme,
)
from .constraints import ConstraintReport, constraint_report
from .distributed import ParallelismPlan, multi_prefill_latency, parse_bandwidth
from .errors import InfeasibleError, InputError, SpatialPerfError
from .estimate import (
    CONSTRAINT_FAMILIES,
    LatencyEstimate,
    balanced_allocation,
    decode_latency,
    prefill_latency,
    search_max_m,
    t_mem_cycles,
)

SWEEP_AXES = ("seq_len", "m", "weight_bits", "pack_count", "tp_size",
              "pp_size", "layers_on_chip")


@dataclass
class RunContext:
    model: ModelSpec
    device: DeviceSpec
    quant: QuantScheme
    names: dict[str, str]      # display names for model/device/quant
    workload: PhaseWorkload
    packed: bool
    plan: ParallelismPlan | None
    reuse: int
    rebalance_decode: bool

    @property
    def tp_size(self) -> int:
        return self.plan.tp_size if self.plan else 1


def _add_common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="built-in or catalog model name")
    parser.add_argument("--model-file", help="YAML/JSON model spec overriding the catalog")
    parser.add_argument("--device", help="built-in or catalog device name")
    parser.add_argument("--device-file", help="YAML/JSON device spec overriding the catalog")
    parser.add_argument("--quant", default="w4a8", help="quant scheme name (default w4a8)")
    parser.add_argument("--quant-file", help="YAML/JSON quant scheme overriding the catalog")
    parser.add_argument("--phase", choices=[p.value for p in Phase], default="prefill")
    parser.add_argument("--seq-len", type=int, default=128,
                        help="prompt length (prefill) or context length (decode)")
    parser.add_argument("--seq-max", type=int, default=None,
                        help="override the model's maximum sequence length")
    parser.add_argument("-C", "--layers-on-chip", type=int, default=1, dest="layers_on_chip")
    parser.add_argument("--weights", choices=[r.value for r in Residency],
                        default="off_chip", help="weight residency (default off_chip)")
    parser.add_argument("--fifo-depth", type=int, default=2)
    parser.add_argument("--reuse", type=int, default=8,
                        help="operand reuse r per MAC unit (default 8)")
    parser.add_argument("--freq", type=float, default=None, help="override device clock, Hz")
    parser.add_argument("--no-packing", action="store_true",
                        help="check memory ports without SRAM word packing")
    parser.add_argument("--tp", type=int, default=1, help="tensor-parallel devices")
    parser.add_argument("--pp", type=int, default=1, help="pipeline-parallel devices")
    parser.add_argument("--link-bw", default=None,
                        help="inter-device link bandwidth, e.g. '100 Gb/s'")
    parser.add_argument("--alpha", type=float, default=None,
                        help="achievable fraction of the link bandwidth")
    parser.add_argument("--rebalance-decode", action="store_true",
                        help="balance the allocation for single-token passes")


def _resolve_entities(args) -> tuple[ModelSpec, DeviceSpec, QuantScheme, dict[str, str]]:
    if args.model_file:
        model = load_model_spec(args.model_file)
    elif args.model:
        model = get_model(args.model)
    else:
        raise InputError("pass --model or --model-file")
    if args.device_file:
        device = load_device_spec(args.device_file)
    elif args.device:
        device = get_device(args.device)
    else:
        raise InputError("pass --device or --device-file")
    if args.quant_file:
        quant = load_quant_scheme(args.quant_file)
        quant_name = args.quant_file
    else:
        quant = get_quant(args.quant)
        quant_name = args.quant
    names = {"model": model.name, "device": device.name, "quant": quant_name}
    return model, device, quant, names


def _build_plan(args) -> ParallelismPlan | None:
    if args.tp == 1 and args.pp == 1 and args.link_bw is None and args.alpha is None:
        return None
    if args.tp > 1:
        if args.link_bw is None:
            raise InputError("--tp > 1 needs --link-bw")
        if args.alpha is None:
            raise InputError("--tp > 1 needs --alpha (no default link efficiency)")
    return ParallelismPlan(
        tp_size=args.tp,
        pp_size=args.pp,
        link_bandwidth=parse_bandwidth(args.link_bw) if args.link_bw else 0.0,
        efficiency=args.alpha if args.alpha is not None else 1.0,
    )


def _resolve(args) -> RunContext:
    model, device, quant, names = _resolve_entities(args)
    if args.seq_max is not None:
        model = replace(model, max_seq_len=args.seq_max)
    if args.freq is not None:
        device = replace(device, freq=args.freq)
    workload = PhaseWorkload(
        phase=Phase(args.phase),
        seq_len=args.seq_len,
        layers_on_chip=args.layers_on_chip,
        weights_resident=Residency(args.weights),
        fifo_depth=args.fifo_depth,
    )
    return RunContext(
        model=model,
        device=device,
        quant=quant,
        names=names,
        workload=workload,
        packed=not args.no_packing,
        plan=_build_plan(args),
        reuse=args.reuse,
        rebalance_decode=args.rebalance_decode,
    )


def _alloc_seq_len(ctx: RunContext) -> int:
    if ctx.workload.phase is Phase.DECODE and ctx.rebalance_decode:
        return 1
    return max(1, ctx.workload.seq_len)


def _search_workload(ctx: RunContext) -> PhaseWorkload:
    """Workload handed to the search, so it balances the way we report."""
    if ctx.workload.phase is Phase.DECODE and ctx.rebalance_decode:
        return replace(ctx.workload, seq_len=1)
    return ctx.workload


def _estimate_point(ctx: RunContext, m: int) -> tuple[LatencyEstimate, ConstraintReport]:
    alloc = balanced_allocation(m, ctx.model, _alloc_seq_len(ctx), ctx.reuse)
    t_mem = t_mem_cycles(ctx.model, ctx.quant, ctx.device, ctx.workload.weights_resident)
    multi = ctx.plan is not None and (ctx.plan.tp_size > 1 or ctx.plan.pp_size > 1)
    if ctx.workload.phase is Phase.DECODE:
        if multi:
            raise InputError("decode across multiple devices is not modeled; "
                             "use --phase prefill or --tp 1 --pp 1")
        est = decode_latency(ctx.model, alloc, ctx.workload, ctx.device, t_mem)
    elif multi:
        est = multi_prefill_latency(ctx.model, alloc, ctx.quant, ctx.workload,
                                    ctx.device, ctx.plan, t_mem)
    else:
        est = prefill_latency(ctx.model, alloc, ctx.workload, ctx.device, t_mem)
    report = constraint_report(ctx.model, alloc, ctx.quant, ctx.workload, ctx.device,
                               packed=ctx.packed, tp_size=ctx.tp_size)
    return est, report


def _fmt_seconds(seconds: float) -> str:
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)):
        if seconds >= scale:
            return f"{seconds / scale:.4g} {unit}"
    return f"{seconds:.3e} s"


def _fmt_cycles(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.1f}"


def _json_doc(ctx: RunContext, m: int, est: LatencyEstimate,
              report: ConstraintReport) -> dict:
    return {
        "model": ctx.names["model"],
        "device": ctx.names["device"],
        "quant": ctx.names["quant"],
        "phase": ctx.workload.phase.value,
        "m": m,
        "seq_len": ctx.workload.seq_len,
        "seq_max": ctx.model.max_seq_len,
        "layers_on_chip": ctx.workload.layers_on_chip,
        "weights_resident": ctx.workload.weights_resident.value,
        "packed": ctx.packed,
        "tp_size": ctx.plan.tp_size if ctx.plan else 1,
        "pp_size": ctx.plan.pp_size if ctx.plan else 1,
        "freq": ctx.device.freq,
        "latency": est.as_dict(),
        "constraints": report.as_dict(),
        "feasible": report.feasible,
    }


def cmd_estimate(args) -> int:
    ctx = _resolve(args)
    est, report = _estimate_point(ctx, args.m)
    if args.json:
        print(json.dumps(_json_doc(ctx, args.m, est, report), indent=2))
        return 0 if report.feasible else 1

    w = ctx.workload
    print(f"model       {ctx.names['model']}  (N={ctx.model.num_layers}, "
          f"d={ctx.model.hidden_size}, ffn={ctx.model.ffn_size}, "
          f"l_max={ctx.model.max_seq_len})")
    print(f"device      {ctx.names['device']} @ {ctx.device.freq / 1e6:.4g} MHz, "
          f"quant {ctx.names['quant']}")
    print(f"workload    {w.phase.value}, l={w.seq_len}, C={w.layers_on_chip}, "
          f"weights {w.weights_resident.value}, m={args.m}")
    if ctx.plan:
        print(f"parallel    tp={ctx.plan.tp_size}, pp={ctx.plan.pp_size}")
    print(f"latency     {_fmt_seconds(est.seconds)}  "
          f"({_fmt_cycles(est.total_cycles)} cycles, ii {_fmt_cycles(est.ii_cycles)}, "
          f"head {_fmt_cycles(est.head_cycles)}, {est.iterations} iterations)")
    print(f"binding     {est.binding_term.value}")
    comp, cap, ports, bw = report.compute, report.capacity, report.ports, report.bandwidth
    print(f"compute     {comp.required} / {comp.available:.10g} MACs/cycle"
          f"  {'ok' if comp.ok else 'FAIL'}")
    print(f"capacity    sram {cap.sram_required} / {cap.sram_available} bits, "
          f"dram {cap.dram_required} / {cap.dram_available} bits"
          f"  {'ok' if cap.ok else 'FAIL'}")
    print(f"ports       {ports.blocks_required} / {ports.blocks_available} blocks"
          f"  {'ok' if ports.ok else 'FAIL'}")
    print(f"bandwidth   {bw.required / 1e9:.4g} / {bw.available / 1e9:.4g} Gb/s"
          f"  {'bound' if bw.bound else 'not bound'}")
    print(f"feasible    {'yes' if report.feasible else 'no'}")
    return 0 if report.feasible else 1


def _parse_families(text: str) -> tuple[str, ...]:
    families = tuple(part.strip() for part in text.split(",") if part.strip())
    unknown = set(families) - set(CONSTRAINT_FAMILIES)
    if unknown or not families:
        raise InputError(f"--constraints must name a subset of {CONSTRAINT_FAMILIES}")
    return families


def cmd_search_m(args) -> int:
    ctx = _resolve(args)
    families = _parse_families(args.constraints)
    best = search_max_m(ctx.model, ctx.device, ctx.quant, _search_workload(ctx),
                        reuse=ctx.reuse, packed=ctx.packed, families=families,
                        stride=args.stride, tp_size=ctx.tp_size, m_limit=args.m_limit)
    alloc = balanced_allocation(best, ctx.model, _alloc_seq_len(ctx), ctx.reuse)
    binding = _binding_family(ctx, best + 1, families)
    if args.json:
        doc = {
            "model": ctx.names["model"],
            "device": ctx.names["device"],
            "quant": ctx.names["quant"],
            "constraints": list(families),
            "packed": ctx.packed,
            "max_m": best,
            "binding_constraint": binding,
            "allocation": {op.value: alloc.m[op] for op in alloc.m},
        }
        print(json.dumps(doc, indent=2))
        return 0
    print(f"max_m       {best}")
    print(f"binding     {binding} constraint fails first at m={best + 1}")
    alloc_text = " ".join(f"{op.value}={alloc.m[op]}" for op in alloc.m)
    print(f"allocation  {alloc_text}")
    return 0


def _binding_family(ctx: RunContext, m: int, families: tuple[str, ...]) -> str:
    from .constraints import check_capacity, check_compute, check_ports

    alloc = balanced_allocation(m, ctx.model, _alloc_seq_len(ctx), ctx.reuse)
    if "compute" in families and not check_compute(
            alloc, ctx.workload.layers_on_chip, ctx.device, ctx.quant).ok:
        return "compute"
    if "capacity" in families and not check_capacity(
            ctx.model, alloc, ctx.quant, ctx.workload, ctx.device, ctx.tp_size).ok:
        return "capacity"
    if "ports" in families and not check_ports(
            ctx.model, alloc, ctx.quant, ctx.workload, ctx.device,
            ctx.packed, ctx.tp_size).ok:
        return "ports"
    return "none"


def _apply_axis(ctx: RunContext, axis: str, value: int) -> RunContext:
    if axis == "seq_len":
        return replace(ctx, workload=replace(ctx.workload, seq_len=value))
    if axis == "layers_on_chip":
        return replace(ctx, workload=replace(ctx.workload, layers_on_chip=value))
    if axis == "weight_bits":
        return replace(ctx, quant=replace(ctx.quant, weight_bits=value))
    if axis == "pack_count":
        return replace(ctx, quant=replace(ctx.quant, pack_count=value))
    if axis == "tp_size":
        if ctx.plan is None:
            raise InputError("axis tp_size needs --link-bw and --alpha")
        return replace(ctx, plan=replace(ctx.plan, tp_size=value))
    if axis == "pp_size":
        plan = ctx.plan or ParallelismPlan()
        return replace(ctx, plan=replace(plan, pp_size=value))
    return ctx  # axis == "m": nothing to rebind


def cmd_sweep(args) -> int:
    ctx = _resolve(args)
    families = _parse_families(args.constraints)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--values must be a comma-separated integer list: {exc}")
    if not values:
        raise InputError("--values must name at least one point")
    if args.axis == "tp_size" and max(values) > 1 and ctx.plan is None:
        raise InputError("axis tp_size needs --link-bw and --alpha")
    if args.axis in ("tp_size", "pp_size") and ctx.plan is None:
        ctx = replace(ctx, plan=ParallelismPlan())

    with_max_m = args.axis != "m"
    header = ["axis_value", "latency_s", "total_cycles", "ii_cycles",
              "binding_term", "feasible"]
    if with_max_m:
        header.append("max_m")
    header.append("error")

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for value in values:
        row: list[str] = [str(value)]
        try:
            point = _apply_axis(ctx, args.axis, value)
            if args.axis == "m":
                m_point, max_m = value, None
            elif args.m is not None:
                m_point = args.m
                max_m = _safe_search(point, families, args)
            else:
                max_m = _safe_search(point, families, args)
                if max_m == 0:
                    raise InfeasibleError("no feasible m at this point")
                m_point = max_m
            est, report = _estimate_point(point, m_point)
            row += [repr(est.seconds), _fmt_cycles(est.total_cycles),
                    _fmt_cycles(est.ii_cycles), est.binding_term.value,
                    "true" if report.feasible else "false"]
            if with_max_m:
                row.append("" if max_m is None else str(max_m))
            row.append("")
        except SpatialPerfError as exc:
            row += ["", "", "", "", "false"]
            if with_max_m:
                row.append("")
            row.append(str(exc))
        writer.writerow(row)
    return 0


def _safe_search(ctx: RunContext, families: tuple[str, ...], args) -> int:
    try:
        return search_max_m(ctx.model, ctx.device, ctx.quant, _search_workload(ctx),
                            reuse=ctx.reuse, packed=ctx.packed, families=families,
                            stride=args.stride, tp_size=ctx.tp_size,
                            m_limit=args.m_limit)
    except InfeasibleError:
        return 0


def cmd_compare(args) -> int:
    names = [part.strip() for part in args.devices.split(",") if part.strip()]
    if not names:
        raise InputError("--devices must list at least one device")
    rows = []
    had_unknown = False
    any_infeasible = False
    for name in names:
        try:
            device_args = argparse.Namespace(**vars(args))
            device_args.device = name
            device_args.device_file = None
            ctx = _resolve(device_args)
            m_point = args.m
            if m_point is None:
                m_point = search_max_m(ctx.model, ctx.device, ctx.quant,
                                       _search_workload(ctx),
                                       reuse=ctx.reuse, packed=ctx.packed,
                                       m_limit=args.m_limit)
            est, report = _estimate_point(ctx, m_point)
            feasible = report.feasible
            any_infeasible = any_infeasible or not feasible
            rows.append((name, str(m_point), _fmt_seconds(est.seconds),
                         est.binding_term.value, "yes" if feasible else "no", ""))
        except InputError as exc:
            had_unknown = True
            rows.append((name, "-", "-", "-", "-", str(exc)))
        except SpatialPerfError as exc:
            any_infeasible = True
            rows.append((name, "-", "-", "-", "no", str(exc)))
    widths = [max(len(r[i]) for r in rows + [_COMPARE_HEADER]) for i in range(6)]
    for row in [_COMPARE_HEADER] + rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    if had_unknown:
        return 2
    return 1 if any_infeasible else 0


_COMPARE_HEADER = ("device", "m", "latency", "binding", "feasible", "error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatialperf",
        description="Analytical performance estimation for spatial transformer "
                    "accelerators on FPGAs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="latency and constraints of one design point")
    _add_common_args(p_est)
    p_est.add_argument("--m", type=int, required=True,
                       help="MACs/cycle granted to each projection operator")
    p_est.add_argument("--json", action="store_true", help="machine-readable output")
    p_est.set_defaults(func=cmd_estimate)

    p_search = sub.add_parser("search-m", help="largest feasible compute allocation")
    _add_common_args(p_search)
    p_search.add_argument("--constraints", default=",".join(CONSTRAINT_FAMILIES),
                          help="comma list from compute,capacity,ports")
    p_search.add_argument("--stride", type=int, default=1)
    p_search.add_argument("--m-limit", type=int, default=1_000_000, dest="m_limit")
    p_search.add_argument("--json", action="store_true")
    p_search.set_defaults(func=cmd_search_m)

    p_sweep = sub.add_parser("sweep", help="CSV sweep along one axis")
    _add_common_args(p_sweep)
    p_sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated integers")
    p_sweep.add_argument("--m", type=int, default=None,
                         help="fixed m; defaults to each point's max feasible m")
    p_sweep.add_argument("--constraints", default=",".join(CONSTRAINT_FAMILIES))
    p_sweep.add_argument("--stride", type=int, default=1)
    p_sweep.add_argument("--m-limit", type=int, default=1_000_000, dest="m_limit")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="one design point across several devices")
    _add_common_args(p_cmp)
    p_cmp.add_argument("--devices", required=True, help="comma list of device names")
    p_cmp.add_argument("--m", type=int, default=None,
                       help="fixed m; defaults to each device's max feasible m")
    p_cmp.add_argument("--m-limit", type=int, default=1_000_000, dest="m_limit")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        code = 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    except SpatialPerfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    sys.exit(code)


if __name__ == "__main__":
    main()
