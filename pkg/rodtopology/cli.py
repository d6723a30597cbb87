#!/usr/bin/env python3

import sys
from argparse import ArgumentParser, BooleanOptionalAction
from contextlib import contextmanager

from . import RodTopologyError
from . import backend


def _common_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "input",
        type=str,
        help="Rod diagram JSON file.",
    )
    parser.add_argument(
        "--format",
        choices=["json", "text"],
        default="json",
        help="Report format (default: json)",
    )
    parser.add_argument(
        "--out",
        type=str,
        help="Write the report to this file instead of stdout.",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log debug messages to stderr.",
    )
    parser.add_argument(
        "--settings",
        default="settings.json",
        help="Settings file (default: settings.json, built-in defaults if missing)",
    )


@contextmanager
def _reporting():
    """Turn package and input errors into 'ERROR: ...' and exit status 1."""
    try:
        yield
    except RodTopologyError as e:
        print(f"ERROR: {e}")
        sys.exit(1)


def _settings(args) -> backend.Settings:
    with _reporting():
        settings = backend.load_settings(args.settings)
    backend.setup_logging(args.verbose, settings)
    return settings


def _emit(args, report: dict, diagram=None) -> None:
    backend.write_output(backend.render(report, args.format, diagram), args.out)


def validate():
    """
    Check a rod diagram against the schema and every diagram invariant.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="validate")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        diagram = backend.load_diagram(args.input)
        _emit(args, backend.validate_report(diagram), diagram)


def hnf():
    """Hermite normal form of a diagram's structure matrix or of {"matrix": ...}."""

    def parse_arguments():
        parser = ArgumentParser(prog="hnf")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.hnf_report(backend.load_matrix(args.input)))


def snf():
    """Smith normal form of a diagram's structure matrix or of {"matrix": ...}."""

    def parse_arguments():
        parser = ArgumentParser(prog="snf")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.snf_report(backend.load_matrix(args.input)))


def detk():
    """Determinant divisors Det_k."""

    def parse_arguments():
        parser = ArgumentParser(prog="detk")
        _common_arguments(parser)
        parser.add_argument(
            "--k",
            type=int,
            help="Only this k (default: every k from 1 to min(rows, cols))",
        )
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.detk_report(backend.load_matrix(args.input), args.k))


def analyze():
    """
    Corners, horizon topologies, the asymptotic end and fundamental groups.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="analyze")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        diagram = backend.load_diagram(args.input)
        _emit(args, backend.analyze_report(diagram), diagram)


def decompose():
    """
    Decompose the domain of outer communication into toric plumbings, corner
    balls, cylinders and the end.  Exits 1 when a plumbing relation fails.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="decompose")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        diagram = backend.load_diagram(args.input)
        report, passed = backend.decompose_report(diagram)
        _emit(args, report, diagram)
    if not passed:
        sys.exit(1)


def pi1():
    """Fundamental group of the total space (and of the end)."""

    def parse_arguments():
        parser = ArgumentParser(prog="pi1")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.pi1_report(backend.load_diagram(args.input)))


def fillin():
    """Fill-in chains between the rods flanking each horizon."""

    def parse_arguments():
        parser = ArgumentParser(prog="fillin")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.fillin_report(backend.load_diagram(args.input)))


def compactify():
    """
    Fill every horizon and cap the end, giving a closed disk diagram.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="compactify")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        report, disk = backend.compactify_report(backend.load_diagram(args.input))
        _emit(args, report, disk)


def classify():
    """
    Classify a closed simply connected diagram with n = 2, 3 or 4.  A
    half-plane diagram is compactified first.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="classify")
        _common_arguments(parser)
        parser.add_argument(
            "--spin",
            action="store_true",
            help="The manifold is spin (default: non-spin)",
        )
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.classify_report(backend.load_diagram(args.input), args.spin))


def cover():
    """Torsion-free cover: deck group and covering rod structures."""

    def parse_arguments():
        parser = ArgumentParser(prog="cover")
        _common_arguments(parser)
        return parser.parse_args()

    args = parse_arguments()
    _settings(args)
    with _reporting():
        _emit(args, backend.cover_report(backend.load_diagram(args.input)))


def model_verify():
    """
    Build the model map of a diagram with geometry and check the decay and
    refinement stability of its tension.  Exits 1 when a check fails.
    """

    def parse_arguments():
        parser = ArgumentParser(prog="model-verify")
        _common_arguments(parser)
        parser.add_argument(
            "--grid-h",
            type=float,
            help="Finite-difference spacing (default from settings, 0.05)",
        )
        parser.add_argument(
            "--epsilon",
            type=float,
            help="Half-angle of the axis cones of the far-field twist profile (default 0.2)",
        )
        parser.add_argument(
            "--rays",
            type=int,
            help="Number of rays for the decay fits (default 6)",
        )
        parser.add_argument(
            "--excision",
            type=float,
            help="Distance from the axis below which no samples are taken (default 10h)",
        )
        parser.add_argument(
            "--refine",
            action=BooleanOptionalAction,
            default=True,
            help="Repeat the annulus sweep at h/2 and compare (default: on)",
        )
        parser.add_argument(
            "--unpinned",
            action="store_true",
            help="Let the pinned column drift along rod transitions (negative control).",
        )
        parser.add_argument(
            "--csv",
            type=str,
            help="Write the annulus samples (rho, z, tension) to this CSV file.",
        )
        return parser.parse_args()

    args = parse_arguments()
    settings = _settings(args)
    with _reporting():
        diagram = backend.load_diagram(args.input)
        grid = backend.grid_spec(
            settings,
            h=args.grid_h,
            epsilon=args.epsilon,
            rays=args.rays,
            excision=args.excision,
            refine=args.refine,
        )
        pinned = settings.pin_transition_columns and not args.unpinned
        report, result = backend.model_verify_report(diagram, grid, pinned)
        _emit(args, report)
        if args.csv:
            backend.write_samples_csv(args.csv, result.samples)
    if not result.passed:
        sys.exit(1)
