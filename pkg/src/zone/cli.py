"""Batch command-line interface: one subcommand per pipeline operation.

Configuration precedence is flags > ZONE_* environment variables > JSON
config file > defaults.  Runtime failures exit 1 with a stage-tagged
message; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .actions import EditAction
from .classifier import (
    load_dataset,
    load_params,
    make_synthetic_dataset,
    save_params,
    SplitDataset,
    train,
)
from .classifier import classify as classify_embedding
from .compositor import (
    EditLayer,
    composite,
    load_session,
    pixel_metrics,
    save_session,
)
from .config import resolve_config
from .fixtures import FixtureSpec, generate_fixture
from .grids import (
    BinaryMask,
    Grid2D,
    Image,
    read_image,
    read_mask,
    read_tensor,
    write_image,
    write_mask,
)
from .localizer import average_maps, binarize_location, load_attention_manifest
from .pipeline import StageError, run_edit
from .refine import load_segment_set, refine
from .smoother import smooth


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("config (flags > ZONE_* env > --config file > defaults)")
    g.add_argument("--config", metavar="FILE", help="JSON config document")
    g.add_argument("--threshold-t", dest="threshold_T", type=int)
    g.add_argument("--beta-remove", dest="beta_remove", type=float)
    g.add_argument("--beta-other", dest="beta_other", type=float)
    g.add_argument("--cutoff-d0", dest="cutoff_D0", type=float)
    g.add_argument("--steps", dest="steps", type=int)
    g.add_argument("--dilation-radius", dest="dilation_radius", type=float)
    g.add_argument("--g-threshold", dest="g_threshold", type=float)
    g.add_argument("--closing-radius", dest="closing_radius", type=float)
    g.add_argument("--min-riou", dest="min_riou", type=float)
    g.add_argument(
        "--invert-localization",
        dest="invert_localization",
        action=argparse.BooleanOptionalAction,
        default=None,
    )
    return p


_CONFIG_FIELDS = (
    "threshold_T",
    "beta_remove",
    "beta_other",
    "cutoff_D0",
    "steps",
    "dilation_radius",
    "g_threshold",
    "closing_radius",
    "min_riou",
    "invert_localization",
)


def _config_from(args):
    overrides = {name: getattr(args, name, None) for name in _CONFIG_FIELDS}
    return resolve_config(config_file=getattr(args, "config", None), overrides=overrides)


def _cmd_edit(args) -> int:
    config = _config_from(args)
    report = run_edit(
        manifest_path=args.inputs,
        config=config,
        out_dir=args.out,
        original_path=args.original,
        instruction=args.instruction,
        session_dir=args.session,
        layer_name=args.layer_name,
        seed=args.seed,
    )
    print(json.dumps(report, indent=2))
    areas = report["mask_areas"]
    print(
        f"edit ok: action={report['action']} riou={report['riou']:.6f} "
        f"(segment {report['segment_index']}) masks loc/ref/final="
        f"{areas['location']}/{areas['refined']}/{areas['final']} px "
        f"l1={report['metrics_vs_original']['l1']:.6f} "
        f"preserved-l1={report['complement_l1']}",
        file=sys.stderr,
    )
    return 0


def _cmd_localize(args) -> int:
    config = _config_from(args)
    if args.original is not None:
        ref = read_image(args.original)
        target_h, target_w = ref.height, ref.width
    elif args.height is not None and args.width is not None:
        target_h, target_w = args.height, args.width
    else:
        raise ValueError("pass --original or both --height and --width")
    collection = load_attention_manifest(args.attention)
    local_cfg = config.localizer(target_h, target_w)
    mask = binarize_location(average_maps(collection, local_cfg), local_cfg)
    write_mask(mask, args.out)
    print(f"localized {mask.area} px -> {args.out}", file=sys.stderr)
    return 0


def _cmd_refine(args) -> int:
    config = _config_from(args)
    segments = load_segment_set(args.segments)
    location = read_mask(args.location)
    mask, index, score = refine(segments, location)
    if score < config.min_riou:
        raise ValueError(f"best rIoU {score:.6f} below min_riou {config.min_riou:.6f}")
    if args.out:
        write_mask(mask, args.out)
    print(f"index {index} score {score:.6f}")
    return 0


def _cmd_smooth(args) -> int:
    config = _config_from(args)
    original = read_image(args.original)
    canvas = read_image(args.canvas)
    refined = read_mask(args.refined)
    final = smooth(original, canvas, refined, config.smoother())
    write_mask(final, args.out)
    print(f"final mask {final.area} px -> {args.out}", file=sys.stderr)
    return 0


def _layer_from_png(path, index: int) -> EditLayer:
    img = read_image(path)
    if img.channels != 4:
        raise ValueError(f"layer {path!r} must be RGBA")
    mask = BinaryMask(img.samples[:, :, 3] == 255)
    rgba = np.array(img.samples, copy=True)
    rgba[:, :, :3][~mask.bits] = 0
    return EditLayer(name=f"{index:02d}_{Path(path).stem}", pixels=Image(rgba), mask=mask)


def _cmd_composite(args) -> int:
    base = read_image(args.base)
    layers = [_layer_from_png(p, i) for i, p in enumerate(args.layer)]
    write_image(composite(base, layers), args.out)
    print(f"composited {len(layers)} layer(s) -> {args.out}", file=sys.stderr)
    return 0


def _cmd_classify(args) -> int:
    params = load_params(args.params)
    tensor = read_tensor(args.embedding)
    if not isinstance(tensor, Grid2D):
        raise ValueError("embedding must be a rank-2 tensor")
    action = classify_embedding(params, np.asarray(tensor.values).ravel())
    print(action.name.lower())
    return 0


def _cmd_train_classifier(args) -> int:
    if args.synthetic:
        dataset = make_synthetic_dataset(seed=args.seed)
    else:
        needed = (args.train_embeddings, args.train_labels, args.test_embeddings, args.test_labels)
        if any(p is None for p in needed):
            raise ValueError(
                "pass --synthetic or all of --train-embeddings/--train-labels/"
                "--test-embeddings/--test-labels"
            )
        dataset = SplitDataset(
            train=load_dataset(args.train_embeddings, args.train_labels),
            test=load_dataset(args.test_embeddings, args.test_labels),
        )
    result = train(dataset, epochs=args.epochs, lr=args.lr, seed=args.seed)
    for i, loss in enumerate(result.epoch_losses, start=1):
        print(f"epoch {i:02d} loss {loss:.6f}")
    print(f"test-top1 {result.test_accuracy:.4f}")
    save_params(result.params, args.out)
    return 0


def _cmd_metrics(args) -> int:
    m = pixel_metrics(read_image(args.a), read_image(args.b))
    print(f"l1={m['l1']:.9g} l2={m['l2']:.9g}")
    return 0


def _cmd_fixtures_generate(args) -> int:
    spec = FixtureSpec(
        seed=args.seed,
        height=args.size,
        width=args.size,
        shape=args.shape,
        extent=args.extent,
        instruction=args.instruction,
        action=EditAction.from_name(args.action),
        steps=args.steps,
        att_downscale=args.att_downscale,
    )
    generate_fixture(args.out, spec)
    print(f"fixture written to {args.out}", file=sys.stderr)
    return 0


def _cmd_session_list(args) -> int:
    session = load_session(args.dir)
    for i, layer in enumerate(session.layers):
        print(f"{i:02d} {layer.name} {layer.action.name.lower()} {layer.instruction!r}")
    return 0


def _cmd_session_remove(args) -> int:
    session = load_session(args.dir)
    session.remove_layer(args.name)
    save_session(session, args.dir)
    print(f"removed {args.name!r}", file=sys.stderr)
    return 0


def _cmd_session_reorder(args) -> int:
    session = load_session(args.dir)
    session.reorder(args.name, args.index)
    save_session(session, args.dir)
    print(f"moved {args.name!r} to index {args.index}", file=sys.stderr)
    return 0


def _cmd_session_flatten(args) -> int:
    session = load_session(args.dir)
    write_image(session.flatten(), args.out)
    print(f"flattened {len(session.layers)} layer(s) -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    cfg = _config_parent()

    p = sub.add_parser("edit", parents=[cfg], help="run the full edit pipeline")
    p.add_argument("--inputs", required=True, help="case manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--original", help="original image (default: manifest entry)")
    p.add_argument("--instruction", help="edit instruction (default: manifest entry)")
    p.add_argument("--session", help="session directory to append to")
    p.add_argument("--layer-name", dest="layer_name")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("localize", parents=[cfg], help="attention stacks -> rough mask")
    p.add_argument("--attention", required=True, help="attention manifest JSON")
    p.add_argument("--original", help="image whose size the mask targets")
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--out", required=True, help="output mask PNG")
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("refine", parents=[cfg], help="pick best segment by region IoU")
    p.add_argument("--segments", required=True, help="segment set directory")
    p.add_argument("--location", required=True, help="rough mask PNG")
    p.add_argument("--out", help="write the winning mask here")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("smooth", parents=[cfg], help="final mask via the edge smoother")
    p.add_argument("--original", required=True)
    p.add_argument("--canvas", required=True)
    p.add_argument("--refined", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("composite", help="overlay RGBA layers on a base image")
    p.add_argument("--base", required=True)
    p.add_argument("--layer", action="append", default=[], help="RGBA PNG (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_composite)

    p = sub.add_parser("classify", help="action for an instruction embedding")
    p.add_argument("--params", required=True, help="classifier params directory")
    p.add_argument("--embedding", required=True, help="1x768 ZTF tensor")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("train-classifier", help="train the action classifier")
    p.add_argument("--out", required=True, help="params output directory")
    p.add_argument("--synthetic", action="store_true", help="use the bundled blob dataset")
    p.add_argument("--train-embeddings")
    p.add_argument("--train-labels")
    p.add_argument("--test-embeddings")
    p.add_argument("--test-labels")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_classifier)

    p = sub.add_parser("metrics", help="L1/L2 pixel metrics between two images")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("fixtures", help="synthetic case generation")
    fsub = p.add_subparsers(dest="fixtures_command", required=True)
    g = fsub.add_parser("generate", help="write a full synthetic case directory")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--size", type=int, default=512)
    g.add_argument("--shape", choices=("square", "disk"), default="square")
    g.add_argument("--extent", type=int, default=64)
    g.add_argument("--instruction", default="change the marked object")
    g.add_argument("--action", choices=("change", "add", "remove"), default="change")
    g.add_argument("--steps", type=int, default=20)
    g.add_argument("--att-downscale", dest="att_downscale", type=int, default=4)
    g.set_defaults(func=_cmd_fixtures_generate)

    p = sub.add_parser("session", help="manage a session directory")
    ssub = p.add_subparsers(dest="session_command", required=True)
    s = ssub.add_parser("list")
    s.add_argument("dir")
    s.set_defaults(func=_cmd_session_list)
    s = ssub.add_parser("remove")
    s.add_argument("dir")
    s.add_argument("--name", required=True)
    s.set_defaults(func=_cmd_session_remove)
    s = ssub.add_parser("reorder")
    s.add_argument("dir")
    s.add_argument("--name", required=True)
    s.add_argument("--index", type=int, required=True)
    s.set_defaults(func=_cmd_session_reorder)
    s = ssub.add_parser("flatten")
    s.add_argument("dir")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_session_flatten)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error [{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
