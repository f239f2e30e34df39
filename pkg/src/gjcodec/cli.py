"""Command-line interface.

Subcommands: compress, decompress, train-codebook, train-model, simulate,
sweep.  Exit codes: 0 success, 2 usage/configuration problems (including a
missing user-supplied input file), 3 operating-system I/O failures, 4
malformed data files.  Human-readable messages go to stderr; machine
output (CSV, JSON, binary artifacts) goes to stdout or --output files.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys

import numpy as np

from .context import (CausalContextModel, NeighborhoodModel, load_model,
                      train as train_context)
from .entropy import Bitstream, ac_decode, ac_encode, sequence_cost_bits
from .errors import ConfigError, FormatError, GjcError, ParameterError
from .pipelines import (CSV_COLUMNS, build_context, digital_image,
                        digital_symbols, load_scenario_file, records_to_csv,
                        run_record, sweep, validate_scenario)
from .sources import load_pgm, save_pgm
from .vq import extract_patches, load_codebook, save_codebook, vq_encode, vq_train

_CONTAINER_MAGIC = b"GJCF"
_CONTAINER_HEADER = "<BHHdHBB"
_BUNDLED = ("fig5", "fig6")


def _err(msg: str) -> None:
    print(f"gjcodec: error: {msg}", file=sys.stderr)


def _open_input(path: str):
    """Missing user-supplied inputs are usage errors, not I/O errors."""
    import os
    if not os.path.exists(path):
        raise ConfigError(f"input file not found: {path}")
    return path


def _resolve_scenario(name_or_path: str) -> dict:
    if name_or_path in _BUNDLED:
        from importlib import resources
        ref = resources.files("gjcodec") / "scenarios" / f"{name_or_path}.json"
        return validate_scenario(json.loads(ref.read_text(encoding="utf-8")))
    return load_scenario_file(_open_input(name_or_path))


def _apply_sets(scn: dict, assignments: list[str]) -> dict:
    """--set dotted.path=json_value overrides on the scenario dict."""
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = scn
        parts = path.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"--set path {path!r} does not exist")
            node = node[p]
        node[parts[-1]] = value
    return validate_scenario(scn)


# ---------------------------------------------------------------------------
# compress / decompress


def _cmd_compress(args) -> int:
    image = load_pgm(_open_input(args.input))
    if args.model:
        model = load_model(_open_input(args.model))
        if not isinstance(model, CausalContextModel):
            raise ConfigError("compress needs a causal context model")
        if model.alphabet != args.alphabet:
            raise ConfigError(
                f"model alphabet {model.alphabet} != --alphabet {args.alphabet}")
        adaptive, order = False, model.order
    else:
        model = CausalContextModel(args.alphabet, order=args.order)
        adaptive, order = True, args.order
    syms = digital_symbols(image, args.step, args.alphabet)
    cost = sequence_cost_bits(model, syms, adaptive=adaptive)
    stream = ac_encode(syms, model, adaptive=adaptive)
    header = _CONTAINER_MAGIC + struct.pack(
        _CONTAINER_HEADER, 1, image.height, image.width, args.step,
        args.alphabet, order, 0 if adaptive else 1)
    blob = header + stream.to_bytes()
    with open(args.output, "wb") as fh:
        fh.write(blob)
    # machine-readable stats line on stdout; chatter stays on stderr
    print(f"bpp={8 * len(blob) / image.pixels:.6f} "
          f"cross_entropy={cost / max(1, len(syms)):.6f}")
    print(f"{args.input}: {image.pixels} px -> "
          f"{stream.payload_bits} payload bits", file=sys.stderr)
    return 0


def _cmd_decompress(args) -> int:
    with open(_open_input(args.input), "rb") as fh:
        blob = fh.read()
    hsize = 4 + struct.calcsize(_CONTAINER_HEADER)
    if blob[:4] != _CONTAINER_MAGIC:
        raise FormatError("not a gjcodec compressed file (bad magic)")
    if len(blob) < hsize:
        raise FormatError("truncated container header")
    (version, height, width, step, alphabet, order,
     modeled) = struct.unpack(_CONTAINER_HEADER, blob[4:hsize])
    if version != 1:
        raise FormatError(f"unsupported container version {version}")
    stream = Bitstream.from_bytes(blob[hsize:])
    if modeled:
        if not args.model:
            raise ConfigError(
                "this file was compressed with a trained model; pass --model")
        model = load_model(_open_input(args.model))
        adaptive = False
    else:
        model = CausalContextModel(alphabet, order=order)
        adaptive = True
    syms = ac_decode(stream, model, adaptive=adaptive)
    save_pgm(digital_image(syms, height, width, step, alphabet), args.output)
    print(f"{args.input}: restored {height}x{width} image", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# training


def _cmd_train_codebook(args) -> int:
    patches = []
    for path in args.images:
        img = load_pgm(_open_input(path))
        patches.append(extract_patches(img.samples, args.patch))
    cb = vq_train(np.concatenate(patches, axis=0), args.size, iters=args.iters,
                  seed=args.seed)
    save_codebook(cb, args.output)
    print(f"codebook: {cb.size} x {cb.dim} (seed {args.seed}) -> {args.output}",
          file=sys.stderr)
    return 0


def _cmd_train_model(args) -> int:
    grids = []
    if args.codebook:
        cb = load_codebook(_open_input(args.codebook))
        patch = int(round(cb.dim ** 0.5))
        if patch * patch != cb.dim:
            raise ConfigError("codebook dimension is not a square patch")
        alphabet = cb.size
        for path in args.images:
            img = load_pgm(_open_input(path))
            toks = vq_encode(cb, extract_patches(img.samples, patch))
            grids.append(toks.reshape(img.height // patch, img.width // patch))
    else:
        alphabet = 256
        for path in args.images:
            grids.append(load_pgm(_open_input(path)).samples.astype(np.int64))
    if args.kind == "causal":
        model = CausalContextModel(alphabet, order=args.order, alpha=args.alpha)
    else:
        model = NeighborhoodModel(alphabet, alpha=args.alpha)
    train_context(model, grids)
    model.save(args.output)
    print(f"{args.kind} model over {alphabet} symbols "
          f"({len(grids)} grids) -> {args.output}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# experiments


def _cmd_simulate(args) -> int:
    scn = _apply_sets(_resolve_scenario(args.scenario), args.set or [])
    labels = [sp["label"] for sp in scn["schemes"]]
    if args.scheme not in labels:
        raise ConfigError(
            f"unknown scheme label {args.scheme!r}; scenario has: {', '.join(labels)}")
    values = scn["conditions"]["values"]
    if args.condition not in values:
        raise ConfigError(
            f"condition {args.condition} not in scenario values {values}")
    if not 0 <= args.trial < scn["num_seeds"]:
        raise ConfigError(
            f"trial must be in 0..{scn['num_seeds'] - 1}, got {args.trial}")
    ctx = build_context(scn)
    row = run_record(ctx, labels.index(args.scheme),
                     values.index(args.condition), args.trial)
    json.dump(row, sys.stdout, indent=2)
    print()
    return 0


def _cmd_sweep(args) -> int:
    scn = _apply_sets(_resolve_scenario(args.scenario), args.set or [])
    records = sweep(scn, jobs=args.jobs)
    csv_text = records_to_csv(records)
    if args.output == "-":
        sys.stdout.write(csv_text)
    else:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(csv_text)
        print(f"{len(records)} records -> {args.output}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gjcodec",
        description="Context-model image codec with loss concealment and "
                    "channel simulation experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a PGM image")
    p.add_argument("--input", required=True, help="input PGM (P5) image")
    p.add_argument("--output", required=True, help="output compressed file")
    p.add_argument("--step", type=float, default=16.0,
                   help="quantizer step size (default 16)")
    p.add_argument("--alphabet", type=int, default=256,
                   help="symbol alphabet size (default 256)")
    p.add_argument("--order", type=int, default=2,
                   help="context order for adaptive coding (default 2)")
    p.add_argument("--model", help="trained causal model (static coding)")
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="restore a PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--model", help="model used at compression time, if any")
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("train-codebook",
                       help="train a vector-quantizer codebook from images")
    p.add_argument("images", nargs="+", help="training PGM images")
    p.add_argument("--output", required=True)
    p.add_argument("--patch", type=int, default=4)
    p.add_argument("--size", type=int, default=256, help="codebook entries")
    p.add_argument("--iters", type=int, default=25, help="k-means iterations")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_codebook)

    p = sub.add_parser("train-model",
                       help="train a context model from images or tokens")
    p.add_argument("images", nargs="+", help="training PGM images")
    p.add_argument("--output", required=True)
    p.add_argument("--kind", choices=("causal", "neighborhood"),
                   default="causal")
    p.add_argument("--codebook",
                   help="tokenize images with this codebook first")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=_cmd_train_model)

    p = sub.add_parser("simulate", help="run one transmission record")
    p.add_argument("--scenario", required=True,
                   help="bundled name (fig5, fig6) or JSON path")
    p.add_argument("--scheme", required=True, help="scheme label")
    p.add_argument("--condition", type=float, required=True)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override scenario fields (JSON values)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a full scenario sweep to CSV")
    p.add_argument("--scenario", required=True,
                   help="bundled name (fig5, fig6) or JSON path")
    p.add_argument("--output", default="-", help="CSV path, or - for stdout")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        _err(str(exc))
        return 2
    except FormatError as exc:
        _err(str(exc))
        return 4
    except OSError as exc:
        _err(f"I/O failure: {exc}")
        return 3
    except GjcError as exc:
        _err(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
