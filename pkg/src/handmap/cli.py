"""Command-line pipeline: record, embody, eval-distance, bench, serve.

Exit codes: 0 success, 1 data error (unusable input), 2 usage/config error.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .embody import embody_frame, embody_trajectory
from .errors import ConfigError, DataError, HandmapError
from .fileio import (canonical_state, commands_from_trajectory, file_digest,
                     load_embodiment_config, load_pipeline_config,
                     load_record_config, read_trajectory,
                     states_from_trajectory, trajectory_from_commands,
                     trajectory_from_states, write_trajectory)
from .hand_model import FingerId
from .metrics import (model_contact_surfaces, robot_contact_surfaces,
                      surface_distance, timing_stats)
from .mocap import fill_gaps, parse_mocap_tsv
from .record import record_frame, record_sequence, reprojection_rms

FINGER_ORDER = tuple(FingerId)


def _fail(exc: Exception) -> int:
    click.echo(f"error: {exc}", err=True)
    if isinstance(exc, ConfigError) or isinstance(exc, FileNotFoundError):
        return 2
    if isinstance(exc, DataError):
        return 1
    raise exc


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    return p.read_text()


@click.group()
@click.version_option(__version__)
def main():
    """Hand motion retargeting: mocap markers -> hand model -> robot hands."""


@main.command("record")
@click.argument("mocap_file", type=click.Path())
@click.option("--output", "-o", required=True, type=click.Path(),
              help="Hand-state trajectory file to write (JSON).")
@click.option("--config", "record_config", type=click.Path(),
              help="Record-mapping YAML (packaged default if omitted).")
@click.option("--hand-model", type=click.Path(),
              help="Hand-model YAML (packaged default if omitted).")
@click.option("--pipeline", "pipeline_path", type=click.Path(),
              help="Pipeline YAML supplying configs and gap policy.")
@click.option("--max-gap", default=10, show_default=True,
              help="Longest occlusion gap (frames) filled by interpolation.")
@click.option("--no-fill", is_flag=True, help="Disable gap filling.")
def cli_record(mocap_file, output, record_config, hand_model, pipeline_path,
               max_gap, no_fill):
    """Estimate hand-model states from a motion-capture marker export."""
    try:
        if pipeline_path is not None:
            pipeline = load_pipeline_config(pipeline_path)
            config = pipeline.record
            max_gap = pipeline.max_gap
            record_config = pipeline.record_path
            hand_model = pipeline.hand_model_path
        else:
            config = load_record_config(record_config, hand_model)
        seq = parse_mocap_tsv(_read_text(mocap_file))
        if not no_fill:
            seq = fill_gaps(seq, max_gap)
        states = record_sequence(seq, config)
        rms = reprojection_rms(states, seq, config)
        metadata = {"source": str(mocap_file),
                    "config_digests": _config_digests(record_config, hand_model)}
        write_trajectory(trajectory_from_states(states, metadata), output)
    except (HandmapError, FileNotFoundError) as exc:
        sys.exit(_fail(exc))
    skipped = len(seq.frames) - len(states)
    click.echo(f"frames: {len(states)}")
    click.echo(f"skipped: {skipped}")
    click.echo(f"reprojection_rms_m: {rms:.6e}")


def _config_digests(*paths) -> dict:
    digests = {}
    for path in paths:
        if path is not None:
            digests[str(path)] = file_digest(path)
    return digests


@main.command("embody")
@click.argument("states_file", type=click.Path())
@click.option("--output", "-o", required=True, type=click.Path(),
              help="Robot-command trajectory file to write (JSON).")
@click.option("--hand", help="Builtin hand name or hand-config path.")
@click.option("--config", "embodiment_config", type=click.Path(),
              help="Embodiment YAML (overrides --hand).")
@click.option("--record-config", type=click.Path(),
              help="Record YAML supplying the hand-model shape.")
@click.option("--hand-model", type=click.Path(),
              help="Hand-model YAML (packaged default if omitted).")
@click.option("--pipeline", "pipeline_path", type=click.Path(),
              help="Pipeline YAML supplying configs.")
def cli_embody(states_file, output, hand, embodiment_config, record_config,
               hand_model, pipeline_path):
    """Map a hand-state trajectory to robot commands."""
    try:
        if pipeline_path is not None:
            pipeline = load_pipeline_config(pipeline_path)
            config = pipeline.embodiment
            shape = pipeline.record.shape
            embodiment_config = pipeline.embodiment_path
            record_config = pipeline.record_path
            hand_model = pipeline.hand_model_path
        else:
            config = load_embodiment_config(embodiment_config, hand)
            shape = load_record_config(record_config, hand_model).shape
        traj = read_trajectory(Path(states_file))
        states = states_from_trajectory(traj)
        commands = embody_trajectory(states, shape, config)
        metadata = {"source": str(states_file),
                    "hand": config.hand.name,
                    "config_digests": _config_digests(embodiment_config,
                                                      record_config, hand_model)}
        write_trajectory(trajectory_from_commands(commands, metadata), output)
    except (HandmapError, FileNotFoundError) as exc:
        sys.exit(_fail(exc))
    stats = timing_stats([c.solve_time for c in commands])
    fixed = [n for n in config.hand.actuated if n not in config.hand.free_actuated]
    click.echo(f"frames: {len(commands)}")
    click.echo(f"command_channels: {len(config.hand.free_actuated)}"
               + (f" (+{len(fixed)} fixed: {', '.join(fixed)})" if fixed else ""))
    click.echo("mean_residuals_mm:")
    for finger in FINGER_ORDER:
        values = [c.residuals[finger] for c in commands if finger in c.residuals]
        text = f"{np.mean(values) * 1000.0:8.2f}" if values else "       -"
        click.echo(f"  {finger.name:<7}{text}")
    click.echo(f"mapping_frequency_hz: mean {stats.mean_hz:.1f} min {stats.min_hz:.1f}")


@main.command("eval-distance")
@click.argument("robot_file", type=click.Path())
@click.option("--states", "states_file", type=click.Path(),
              help="Hand-state trajectory (defaults to the robot file's source).")
@click.option("--hand", help="Builtin hand name or hand-config path.")
@click.option("--config", "embodiment_config", type=click.Path(),
              help="Embodiment YAML (overrides --hand).")
@click.option("--record-config", type=click.Path())
@click.option("--hand-model", type=click.Path())
@click.option("--frames", required=True,
              help="Comma-separated frame indices to evaluate.")
@click.option("--samples", "-n", default=100, show_default=True,
              help="Poisson-disk samples per finger surface.")
@click.option("--seed", default=0, show_default=True)
@click.option("--mesh-segments", default=16, show_default=True)
def cli_eval_distance(robot_file, states_file, hand, embodiment_config,
                      record_config, hand_model, frames, samples, seed,
                      mesh_segments):
    """Mean contact-surface distance (robot vs hand model), per finger, in mm."""
    try:
        config = load_embodiment_config(embodiment_config, hand)
        shape = load_record_config(record_config, hand_model).shape
        robot_traj = read_trajectory(Path(robot_file))
        commands = commands_from_trajectory(robot_traj)
        if states_file is None:
            states_file = robot_traj.metadata.get("source")
            if states_file is None:
                raise ConfigError("no --states given and the robot trajectory "
                                  "carries no source path")
        states = states_from_trajectory(read_trajectory(Path(states_file)))
        try:
            indices = [int(v) for v in str(frames).split(",") if v.strip() != ""]
        except ValueError:
            raise ConfigError(f"bad --frames value {frames!r}")
        for index in indices:
            if not 0 <= index < len(commands) or index >= len(states):
                raise ConfigError(f"frame index {index} out of range "
                                  f"(0..{min(len(commands), len(states)) - 1})")

        per_finger: dict = {finger: [] for finger in FINGER_ORDER}
        for index in indices:
            command = commands[index]
            _, state = states[index]
            model_surfaces = model_contact_surfaces(shape, state, mesh_segments)
            robot_surfaces = robot_contact_surfaces(
                config.hand, command.actuated_values, command.base_pose,
                mesh_segments)
            for finger, surface in robot_surfaces.items():
                distance = surface_distance(surface, model_surfaces[finger],
                                            n=samples, seed=seed)
                per_finger[finger].append(distance)
    except (HandmapError, FileNotFoundError) as exc:
        sys.exit(_fail(exc))

    click.echo(f"hand: {config.hand.name}")
    click.echo(f"frames: {','.join(str(i) for i in indices)}  samples: {samples}  seed: {seed}")
    header = "".join(f"{finger.name:>9}" for finger in FINGER_ORDER)
    click.echo("mean contact-surface distance (mm)")
    click.echo(header)
    cells = []
    for finger in FINGER_ORDER:
        values = per_finger[finger]
        cells.append(f"{np.mean(values) * 1000.0:9.2f}" if values else f"{'-':>9}")
    click.echo("".join(cells))


@main.command("bench")
@click.argument("mocap_file", type=click.Path())
@click.option("--hands", default="mia,shadow", show_default=True,
              help="Comma-separated hand specs to benchmark.")
@click.option("--config", "record_config", type=click.Path())
@click.option("--hand-model", type=click.Path())
@click.option("--repetitions", default=1, show_default=True,
              help="Repeat the sequence this many times.")
@click.option("--max-gap", default=10, show_default=True)
def cli_bench(mocap_file, hands, record_config, hand_model, repetitions, max_gap):
    """Measure record/embodiment mapping frequencies (mean and min Hz).

    Only the mapping calls are timed; parsing and I/O are excluded.
    """
    try:
        config = load_record_config(record_config, hand_model)
        seq = fill_gaps(parse_mocap_tsv(_read_text(mocap_file)), max_gap)
        hand_specs = [h.strip() for h in str(hands).split(",") if h.strip()]
        report = run_bench(seq, config, hand_specs, repetitions)
    except (HandmapError, FileNotFoundError) as exc:
        sys.exit(_fail(exc))
    click.echo(format_bench_report(report))


def run_bench(seq, config, hand_specs, repetitions: int = 1) -> dict:
    """Timing harness used by the bench command (importable for tests)."""
    record_durations = []
    states = None
    for _ in range(repetitions):
        previous = None
        states = []
        for frame in seq.frames:
            start = time.perf_counter()
            previous = record_frame(frame, config, previous)
            record_durations.append(time.perf_counter() - start)
            states.append((frame.timestamp, previous))
    report = {"frames": len(seq.frames) * repetitions,
              "record": timing_stats(record_durations),
              "hands": {}}
    for spec in hand_specs:
        embodiment = load_embodiment_config(hand=spec)
        durations = []
        for _ in range(repetitions):
            previous = None
            for timestamp, state in states:
                start = time.perf_counter()
                previous = embody_frame(state, config.shape, embodiment,
                                        previous, timestamp=timestamp)
                durations.append(time.perf_counter() - start)
        report["hands"][embodiment.hand.name] = timing_stats(durations)
    return report


def format_bench_report(report: dict) -> str:
    names = list(report["hands"])
    lines = []
    lines.append(f"frames: {report['frames']}")
    lines.append("mapping frequency in Hz")
    header = f"{'':<10}{'record':>16}" + "".join(f"{name:>16}" for name in names)
    sub = f"{'':<10}" + f"{'mean':>8}{'min':>8}" * (1 + len(names))
    record = report["record"]
    row = f"{'':<10}{record.mean_hz:8.1f}{record.min_hz:8.1f}"
    for name in names:
        stats = report["hands"][name]
        row += f"{stats.mean_hz:8.1f}{stats.min_hz:8.1f}"
    lines.extend([header, sub, row])
    return "\n".join(lines)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8411, show_default=True)
@click.option("--hands", default="mia,shadow,robotiq_2f140", show_default=True)
@click.option("--record-config", type=click.Path())
@click.option("--hand-model", type=click.Path())
@click.option("--ui-dir", type=click.Path(),
              help="Static explorer bundle to serve at / "
                   "(defaults to ./frontend/dist when present).")
def cli_serve(host, port, hands, record_config, hand_model, ui_dir):
    """Run the interactive embodiment service (HTTP + websocket)."""
    try:
        import uvicorn

        from .service import create_app

        if ui_dir is None and Path("frontend/dist").is_dir():
            ui_dir = "frontend/dist"
        config = load_record_config(record_config, hand_model)
        hand_specs = [h.strip() for h in str(hands).split(",") if h.strip()]
        app = create_app(hand_specs, config, ui_dir=ui_dir)
    except (HandmapError, FileNotFoundError) as exc:
        sys.exit(_fail(exc))
    uvicorn.run(app, host=host, port=port, log_level="info")


def record_then_embody(seq, record_config, embodiment_config, shape=None):
    """In-process pipeline identical to cli_record followed by cli_embody.

    States pass through the same pose canonicalization the trajectory file
    applies, so the result is bit-identical to the two-step CLI run.
    """
    states = record_sequence(seq, record_config)
    canonical = [(t, canonical_state(s)) for t, s in states]
    return embody_trajectory(canonical, shape or record_config.shape,
                             embodiment_config)


if __name__ == "__main__":
    main()
