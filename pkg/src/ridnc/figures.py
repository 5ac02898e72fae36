"""Data generators for the seven published plots, one CSV per sub-plot."""

import csv
from dataclasses import replace
from pathlib import Path

from ridnc.combinatorics import ConfigurationError
from ridnc.config_io import write_report
from ridnc.harness import SPEEDUP_COLUMNS, ScenarioConfig, feedback_curves, measure_speedup, run_scenario

USER_COUNTS = (10, 50, 100, 250, 500, 750, 1000)
EPS_LEVELS = {"a": 0.1, "b": 0.2, "c": 0.3}
SPEEDUP_FEEDBACK = (1, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
# (packets, users, largest feedback count on the x-axis)
CROSS_PANELS = ((20, 100, 50), (20, 500, 100), (20, 1000, 200),
                (10, 100, 50), (10, 500, 250), (10, 1000, 500))


def _base(template: ScenarioConfig, **overrides):
    return replace(template, feedback_mode="by-id", feedback=None, **overrides)


def _gain_vs_users(template, number):
    eps = (0.1, 0.2, 0.3)[number - 1]
    for r, sub in zip(range(1, 5), "abcd"):
        rows = []
        for n in USER_COUNTS:
            cfg = _base(template, n_users=n, m_packets=20, eps_max=eps, coded_budget=r,
                        scenario=f"fig{number}_{sub}")
            for encoder in ("optimal-ridnc", "race"):
                rows.append(run_scenario(replace(cfg, encoder=encoder)))
        yield sub, rows


def _gain_vs_feedback(template, number):
    r = 1 if number == 4 else 4
    for sub, eps in EPS_LEVELS.items():
        cfg = _base(template, n_users=500, m_packets=20, eps_max=eps, coded_budget=r,
                    scenario=f"fig{number}_{sub}")
        full = run_scenario(replace(cfg, encoder="race"))
        configs = [replace(cfg, feedback=f) for f in range(1, 101)]
        yield sub, [full] + feedback_curves(cfg, ["race"], configs)["race"]


def _race_vs_crowdwifi(template):
    for m, n, fmax in CROSS_PANELS:
        sub = f"m{m}_n{n}"
        cfg = _base(template, n_users=n, m_packets=m, eps_max=0.2, coded_budget=1,
                    scenario=f"fig6_{sub}")
        configs = [replace(cfg, feedback=f) for f in range(1, fmax + 1)]
        curves = feedback_curves(cfg, ["race", "crowdwifi"], configs)
        yield sub, curves["race"] + curves["crowdwifi"]


def _speedup(template):
    for sub, eps in EPS_LEVELS.items():
        rows = []
        for m in (10, 20):
            cfg = _base(template, n_users=500, m_packets=m, eps_max=eps, coded_budget=1)
            for row in measure_speedup(cfg, SPEEDUP_FEEDBACK):
                rows.append([m] + [getattr(row, c) for c in SPEEDUP_COLUMNS])
        yield sub, rows


def write_speedup_csv(rows, destination):
    """``destination`` is a path or an open text file."""
    if hasattr(destination, "write"):
        _speedup_rows(rows, destination)
        return
    with open(destination, "w", newline="") as fh:
        _speedup_rows(rows, fh)


def _speedup_rows(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("m_packets",) + SPEEDUP_COLUMNS)
    for row in rows:
        writer.writerow([format(v, ".6g") if isinstance(v, float) else v for v in row])


def run_figure(number: int, template: ScenarioConfig, out_dir) -> list:
    """Regenerate figure ``number`` (1..7); returns the written paths.

    Only ``replications``, ``base_seed``, ``workers`` and ``measure_time``
    are taken from ``template``; everything else is fixed per figure.
    """
    if number in (1, 2, 3):
        panels = _gain_vs_users(template, number)
    elif number in (4, 5):
        panels = _gain_vs_feedback(template, number)
    elif number == 6:
        panels = _race_vs_crowdwifi(template)
    elif number == 7:
        panels = _speedup(template)
    else:
        raise ConfigurationError(f"figure number must be 1..7, got {number}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for sub, rows in panels:
        path = out_dir / f"fig{number}_{sub}.csv"
        if number == 7:
            write_speedup_csv(rows, path)
        else:
            write_report(rows, "csv", path)
        paths.append(path)
    return paths
