"""Command-line interface for tactile registration and the synthetic benchmarks."""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from tacloc.bench.config import BENCH_SETTINGS, resolve_n_workers, target_sample_count
from tacloc.bench.runner import TrialRunner
from tacloc.bench.scene import NoiseSpec, generate_scene, generate_sliding_scene
from tacloc.bench.shapes import FEATURE_RICH, MESH_SUITE, build_mesh
from tacloc.bench.studies import (
    ProfileRow,
    RecallRow,
    SensitivityRow,
    SweepRow,
    TrialRecord,
    generate_scenes,
    recall_table,
    reduction,
    run_profile,
    run_pruning_study,
    run_recall_benchmark,
    run_sensitivity_study,
    run_threshold_sweep,
    success_rates,
)
from tacloc.core.config import DEFAULT_CONFIG, MM, PipelineConfig
from tacloc.core.errors import TaclocError
from tacloc.core.geometry import OrientedPointCloud, RigidTransform
from tacloc.core.io import read_mesh, read_ply, read_transform, write_csv, write_off, write_ply, write_transform
from tacloc.features.matching import write_correspondences
from tacloc.features.sampling import sample_mesh
from tacloc.graph.cliques import write_clique_list
from tacloc.solver.pipeline import StageTimings, assemble_result, extract_front_end, solve_back_end
from tacloc.solver.verification import write_hypotheses
from tacloc.tactile.heightmap import frame_from_gradients, frame_from_heightmap
from tacloc.tactile.maps import GradientMaps, HeightMap

_MESH_SUFFIXES = {".off", ".stl", ".obj"}


def _load_config(path: Optional[str]) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else DEFAULT_CONFIG


def _load_target(args: argparse.Namespace) -> OrientedPointCloud:
    """Model cloud from a PLY file, or sampled from an OFF, STL or OBJ mesh."""
    path = Path(args.target)
    if path.suffix.lower() in _MESH_SUFFIXES:
        mesh = read_mesh(path, args.mesh_scale)
        return sample_mesh(mesh, target_sample_count(mesh.total_area, args.samples), args.seed)
    return read_ply(path)


def _write_rows(path: str, header: Sequence[str], rows: Sequence[Sequence], omit_timings: bool = False) -> None:
    keep = [i for i, name in enumerate(header) if not (omit_timings and name.endswith("milliseconds"))]
    write_csv(path, [header[i] for i in keep], ([row[i] for i in keep] for row in rows))


def register_command(args: argparse.Namespace) -> int:
    """Register a tactile submap against an object model."""
    config = _load_config(args.config)
    source = read_ply(args.source)
    target = _load_target(args)
    print(f"Registering {len(source)} source points against {len(target)} target points...")

    timings = StageTimings()
    front = extract_front_end(source, target, config, timings)
    back = solve_back_end(front, config, timings)
    result = assemble_result(front, back, timings, config)

    if args.correspondences:
        write_correspondences(args.correspondences, front.correspondences)
    if args.edges:
        back.graph.write_edge_list(args.edges)
    if args.cliques:
        write_clique_list(args.cliques, back.cliques)
    if args.all_hypotheses:
        write_hypotheses(args.all_hypotheses, result.hypotheses)
    if args.timings:
        result.timings.write_csv(args.timings)

    print(
        f"{result.n_correspondences} correspondences, {result.n_edges} edges, "
        f"{result.n_cliques} maximal cliques, {len(result.hypotheses)} hypotheses"
    )
    if result.failed:
        print(f"Registration failed: {result.reason}")
        return 1

    write_transform(args.out, result.transform)
    best = result.best
    print(f"Residual: {best.residual:.6g} m^2 (clique of {best.clique_size}, inliers {best.inlier_fraction:.1%})")
    print(f"Pose written to {args.out}")
    return 0


def tactile_cloud_command(args: argparse.Namespace) -> int:
    """Convert gradient maps or a height map into a contact point cloud."""
    ee_pose = read_transform(args.ee_pose) if args.ee_pose else RigidTransform.identity()
    offset = args.contact_offset * MM
    if args.gradients:
        frame = frame_from_gradients(GradientMaps.from_files(*args.gradients), ee_pose, offset)
    else:
        frame = frame_from_heightmap(HeightMap.from_file(args.height), ee_pose, offset)
    write_ply(args.out, frame.cloud)
    print(f"{len(frame.cloud)} contact points written to {args.out}")
    return 0


def mesh_sample_command(args: argparse.Namespace) -> int:
    """Area-weighted oriented samples of a mesh file."""
    mesh = read_mesh(args.mesh, args.mesh_scale)
    cloud = sample_mesh(mesh, target_sample_count(mesh.total_area, args.samples), args.seed)
    write_ply(args.out, cloud)
    print(f"{len(cloud)} samples of {args.mesh} written to {args.out}")
    return 0


def mesh_export_command(args: argparse.Namespace) -> int:
    """Write a procedural benchmark mesh as OFF."""
    mesh = build_mesh(args.name)
    write_off(args.out, mesh)
    print(f"{args.name}: {len(mesh.faces)} faces, area {mesh.total_area / MM**2:.1f} mm^2 -> {args.out}")
    return 0


def scene_generate_command(args: argparse.Namespace) -> int:
    """Write one synthetic scene: source.ply, target.ply and gt.txt."""
    mesh = build_mesh(args.mesh)
    if args.sliding_length is not None:
        noise = NoiseSpec(
            point_sigma=0.0,
            ee_trans_sigma=args.ee_trans_sigma * MM,
            ee_rot_sigma=math.radians(args.ee_rot_sigma),
        )
        scene = generate_sliding_scene(
            mesh, args.sliding_length * MM, noise, args.seed, _load_config(args.config), target_samples=args.samples
        )
    else:
        noise = NoiseSpec(point_sigma=args.point_sigma * MM)
        scene = generate_scene(mesh, args.patch_fraction, noise, args.seed, args.samples)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_ply(out_dir / "source.ply", scene.source)
    write_ply(out_dir / "target.ply", scene.target)
    write_transform(out_dir / "gt.txt", scene.gt)
    print(f"Scene {args.mesh} seed {args.seed}: {len(scene.source)} source points, {len(scene.target)} target points")
    print(f"Written to {out_dir}")
    return 0


def _runner(args: argparse.Namespace, default_threads: Optional[int] = None) -> TrialRunner:
    threads = args.threads if args.threads is not None else default_threads
    return TrialRunner(n_workers=resolve_n_workers(threads))


def _bench_scenes(args: argparse.Namespace, runner: TrialRunner, point_sigma: float = 0.0):
    seeds = range(args.seed, args.seed + args.trials)
    print(f"Generating {len(args.mesh) * args.trials} scenes on {', '.join(args.mesh)}...")
    return generate_scenes(
        args.mesh,
        seeds,
        patch_fraction=args.patch_fraction,
        noise=NoiseSpec(point_sigma=point_sigma),
        target_samples=args.samples,
        runner=runner,
    )


def bench_recall_command(args: argparse.Namespace) -> int:
    """Recall curves of the clique solver and the RANSAC baseline."""
    config = _load_config(args.config)
    runner = _runner(args)
    scenes = _bench_scenes(args, runner, args.point_sigma * MM)
    records = run_recall_benchmark(scenes, config, runner)
    rows = recall_table(records)
    _write_rows(args.out, RecallRow.HEADER, [r.as_row() for r in rows])
    if args.records:
        _write_rows(args.records, TrialRecord.HEADER, [r.as_row() for r in records], args.omit_timings)
    for method, rate in success_rates(records).items():
        print(f"{method}: success {rate:.1%} (RE < 5 deg, TE < 5 mm)")
    print(f"Recall table written to {args.out}")
    return 0


def bench_pruning_command(args: argparse.Namespace) -> int:
    """Graph and clique statistics as the normal-angle threshold tightens."""
    config = _load_config(args.config)
    runner = _runner(args)
    scenes = _bench_scenes(args, runner)
    angles = [math.radians(a) for a in args.delta_alpha]
    rows = run_pruning_study(scenes, angles, config, runner)
    _write_rows(args.out, SweepRow.HEADER, [r.as_row() for r in rows], args.omit_timings)
    first, last = rows[0], rows[-1]
    print(
        f"delta_alpha {math.degrees(first.delta_alpha):g} -> {math.degrees(last.delta_alpha):g} deg: "
        f"edges -{reduction(first.mean_edges, last.mean_edges):.1%}, "
        f"clique time -{reduction(first.mean_clique_milliseconds, last.mean_clique_milliseconds):.1%}"
    )
    print(f"Pruning table written to {args.out}")
    return 0


def bench_sweep_command(args: argparse.Namespace) -> int:
    """Clique statistics over a grid of distance and angle thresholds."""
    config = _load_config(args.config)
    runner = _runner(args)
    scenes = _bench_scenes(args, runner)
    rows = run_threshold_sweep(
        scenes, [d * MM for d in args.delta_d], [math.radians(a) for a in args.delta_alpha], config, runner
    )
    _write_rows(args.out, SweepRow.HEADER, [r.as_row() for r in rows], args.omit_timings)
    print(f"Sweep table ({len(rows)} settings) written to {args.out}")
    return 0


def _noise_level(text: str) -> NoiseSpec:
    try:
        trans, rot = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected TRANS_MM:ROT_DEG, got {text!r}") from None
    return NoiseSpec(ee_trans_sigma=trans * MM, ee_rot_sigma=math.radians(rot))


def bench_sensitivity_command(args: argparse.Namespace) -> int:
    """Accuracy over sliding lengths and end-effector pose noise on one mesh."""
    config = _load_config(args.config)
    name = args.mesh[0]
    mesh = build_mesh(name)
    noise_levels = args.noise or [
        NoiseSpec(ee_trans_sigma=t, ee_rot_sigma=r) for t, r in BENCH_SETTINGS.sliding_noise
    ]
    print(f"Sliding study on {name}: {len(args.lengths)} lengths x {len(noise_levels)} noise levels")
    rows = run_sensitivity_study(
        mesh, [length * MM for length in args.lengths], noise_levels, args.trials, config, args.seed, _runner(args)
    )
    _write_rows(args.out, SensitivityRow.HEADER, [r.as_row() for r in rows])
    print(f"Sensitivity table written to {args.out}")
    return 0


def bench_profile_command(args: argparse.Namespace) -> int:
    """Mean wall-clock time per pipeline stage (single worker unless --threads is given)."""
    config = _load_config(args.config)
    runner = _runner(args, default_threads=1)
    scenes = _bench_scenes(args, runner)
    report = run_profile(scenes, config, runner)
    _write_rows(args.out, ProfileRow.HEADER, [r.as_row() for r in report.rows])
    for row in report.rows:
        print(f"  {row.stage:<13} {row.mean_milliseconds:10.1f} ms  {row.share:6.1%}")
    print(f"Largest stages: {', '.join(report.largest)}")
    print(f"Profile written to {args.out}")
    return 0


def _add_bench_flags(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument(
        "--mesh",
        action="append",
        choices=sorted(MESH_SUITE),
        default=None,
        help="Procedural mesh to use; repeat for several (defaults to the feature-rich shapes)",
    )
    parser.add_argument("--config", default=None, help="Pipeline configuration file")
    parser.add_argument("--seed", type=int, default=0, help="First trial seed")
    parser.add_argument(
        "--trials",
        type=int,
        default=BENCH_SETTINGS.n_trials,
        help="Trials (seeds) per mesh or per cell",
    )
    parser.add_argument("--out", default=default_out, help="Output CSV")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker processes (defaults to N_WORKERS or the CPU count)",
    )
    parser.add_argument(
        "--patch-fraction",
        type=float,
        default=BENCH_SETTINGS.patch_fraction,
        help="Share of the surface area touched per scene",
    )
    parser.add_argument(
        "--samples",
        type=int,
        default=None,
        help="Target samples per model (default: a fixed density per unit area)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tacloc",
        description="Tactile partial-to-full registration and synthetic benchmarks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  tacloc register --source touch.ply --target model.ply --out pose.txt
  tacloc tactile cloud --gradients gx.grid gy.grid --out touch.ply
  tacloc scene generate --mesh wedge_box --seed 3 --out-dir scene3
  tacloc bench recall --trials 10 --out recall.csv
  tacloc bench profile --mesh rock --trials 5
        """,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-vv for debug)")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # register
    reg = subparsers.add_parser("register", help="Register a tactile submap against a model")
    reg.add_argument("--source", required=True, help="Submap PLY (x y z nx ny nz)")
    reg.add_argument("--target", required=True, help="Model PLY, or an OFF/STL mesh to sample")
    reg.add_argument("--config", default=None, help="Pipeline configuration file")
    reg.add_argument("--out", default="pose.txt", help="Output 4x4 pose file")
    reg.add_argument("--all-hypotheses", default=None, help="Write the ranked hypotheses as CSV")
    reg.add_argument("--timings", default=None, help="Write per-stage timings as CSV")
    reg.add_argument("--correspondences", default=None, help="Write the feature correspondences as CSV")
    reg.add_argument("--edges", default=None, help="Write the compatibility graph edge list")
    reg.add_argument("--cliques", default=None, help="Write the selected cliques")
    reg.add_argument(
        "--samples", type=int, default=None, help="Samples for a mesh target (default: by surface area)"
    )
    reg.add_argument("--seed", type=int, default=0, help="Sampling seed for a mesh target")
    reg.add_argument("--mesh-scale", type=float, default=1.0, help="Factor from mesh file units to metres")
    reg.set_defaults(func=register_command)

    # tactile
    tactile = subparsers.add_parser("tactile", help="Tactile map conversion")
    tactile_sub = tactile.add_subparsers(dest="tactile_command")
    cloud = tactile_sub.add_parser("cloud", help="Contact point cloud from gradient or height maps")
    source = cloud.add_mutually_exclusive_group(required=True)
    source.add_argument("--gradients", nargs=2, metavar=("GX", "GY"), help="Gradient grid files")
    source.add_argument("--height", help="Height grid file (values in mm)")
    cloud.add_argument("--ee-pose", default=None, help="End-effector pose file (defaults to identity)")
    cloud.add_argument("--contact-offset", type=float, default=0.1, help="Contact threshold above the median, mm")
    cloud.add_argument("--out", required=True, help="Output PLY")
    cloud.set_defaults(func=tactile_cloud_command)

    # mesh
    mesh = subparsers.add_parser("mesh", help="Mesh sampling and export")
    mesh_sub = mesh.add_subparsers(dest="mesh_command")
    sample = mesh_sub.add_parser("sample", help="Area-weighted oriented samples of a mesh")
    sample.add_argument("--mesh", required=True, help="OFF, STL, PLY or OBJ mesh file")
    sample.add_argument("--samples", type=int, default=None, help="Sample count (default: by surface area)")
    sample.add_argument("--seed", type=int, default=0, help="Sampling seed")
    sample.add_argument("--mesh-scale", type=float, default=1.0, help="Factor from mesh file units to metres")
    sample.add_argument("--out", required=True, help="Output PLY")
    sample.set_defaults(func=mesh_sample_command)
    export = mesh_sub.add_parser("export", help="Write a procedural benchmark mesh")
    export.add_argument("name", choices=sorted(MESH_SUITE), help="Mesh name")
    export.add_argument("--out", required=True, help="Output OFF file")
    export.set_defaults(func=mesh_export_command)

    # scene
    scene = subparsers.add_parser("scene", help="Synthetic scenes")
    scene_sub = scene.add_subparsers(dest="scene_command")
    generate = scene_sub.add_parser("generate", help="Generate one scene with ground truth")
    generate.add_argument("--mesh", choices=sorted(MESH_SUITE), default="rock", help="Procedural mesh")
    generate.add_argument("--seed", type=int, default=0, help="Scene seed")
    generate.add_argument("--patch-fraction", type=float, default=BENCH_SETTINGS.patch_fraction)
    generate.add_argument("--point-sigma", type=float, default=0.0, help="Point noise, mm")
    generate.add_argument("--samples", type=int, default=None, help="Target samples (default: by surface area)")
    generate.add_argument("--sliding-length", type=float, default=None, help="Simulate a sliding touch of this length, mm")
    generate.add_argument("--ee-trans-sigma", type=float, default=0.0, help="Sliding pose noise, mm")
    generate.add_argument("--ee-rot-sigma", type=float, default=0.0, help="Sliding pose noise, degrees")
    generate.add_argument("--config", default=None, help="Pipeline configuration file (sliding scenes)")
    generate.add_argument("--out-dir", required=True, help="Directory for source.ply, target.ply and gt.txt")
    generate.set_defaults(func=scene_generate_command)

    # bench
    bench = subparsers.add_parser("bench", help="Synthetic benchmark studies")
    bench_sub = bench.add_subparsers(dest="bench_command")

    recall = bench_sub.add_parser("recall", help="Recall of the clique solver and RANSAC")
    _add_bench_flags(recall, "recall.csv")
    recall.add_argument("--point-sigma", type=float, default=0.0, help="Point noise, mm")
    recall.add_argument("--records", default=None, help="Also write per-trial records as CSV")
    recall.add_argument("--omit-timings", action="store_true", help="Leave wall-clock columns out")
    recall.set_defaults(func=bench_recall_command)

    pruning = bench_sub.add_parser("pruning", help="Effect of the normal-angle threshold")
    _add_bench_flags(pruning, "pruning.csv")
    pruning.add_argument(
        "--delta-alpha",
        type=float,
        nargs="+",
        default=[math.degrees(a) for a in BENCH_SETTINGS.pruning_delta_alpha],
        help="Angle thresholds, degrees",
    )
    pruning.add_argument("--omit-timings", action="store_true", help="Leave wall-clock columns out")
    pruning.set_defaults(func=bench_pruning_command)

    sweep = bench_sub.add_parser("sweep", help="Distance and angle threshold grid")
    _add_bench_flags(sweep, "sweep.csv")
    sweep.add_argument(
        "--delta-d",
        type=float,
        nargs="+",
        default=[d / MM for d in BENCH_SETTINGS.sweep_delta_d],
        help="Distance thresholds, mm",
    )
    sweep.add_argument(
        "--delta-alpha",
        type=float,
        nargs="+",
        default=[math.degrees(a) for a in BENCH_SETTINGS.sweep_delta_alpha],
        help="Angle thresholds, degrees",
    )
    sweep.add_argument("--omit-timings", action="store_true", help="Leave wall-clock columns out")
    sweep.set_defaults(func=bench_sweep_command)

    sensitivity = bench_sub.add_parser("sensitivity", help="Sliding length and pose noise study")
    _add_bench_flags(sensitivity, "sensitivity.csv")
    sensitivity.add_argument(
        "--lengths",
        type=float,
        nargs="+",
        default=[length / MM for length in BENCH_SETTINGS.sliding_lengths],
        help="Sliding lengths, mm",
    )
    sensitivity.add_argument(
        "--noise",
        type=_noise_level,
        nargs="+",
        default=None,
        help="End-effector noise levels as TRANS_MM:ROT_DEG",
    )
    sensitivity.set_defaults(func=bench_sensitivity_command)

    profile = bench_sub.add_parser("profile", help="Per-stage wall-clock profile")
    _add_bench_flags(profile, "profile.csv")
    profile.set_defaults(func=bench_profile_command)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )

    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    if getattr(args, "mesh", "") is None:
        args.mesh = list(FEATURE_RICH)
    if getattr(args, "trials", 1) < 1:
        print(f"Error: --trials must be >= 1, got {args.trials}")
        return 1

    try:
        return args.func(args)
    except (TaclocError, ValueError) as exc:
        print(f"Error: {exc}")
        return 1
    except OSError as exc:
        print(f"Error: {exc.strerror or exc}: {exc.filename}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
