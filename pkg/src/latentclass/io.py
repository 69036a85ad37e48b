"""Table readers/writers, archive serialization, and run manifests.

All tables are comma-separated with a header row.  Column layouts are fixed
(documented in the README) so downstream figure scripts can rely on them.
Floats are written with shortest round-trip precision.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .config import (
    BINARY,
    CATEGORICAL,
    COUNT,
    Dataset,
    EntrySpec,
    ModelConfig,
    SamplerSchedule,
)
from .exceptions import DataError
from .gibbs import PosteriorSamples
from .postprocess import Summary, WaicResult


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_table(path, header: list, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        fh.writelines(",".join(_fmt(v) for v in row) + "\n" for row in rows)


def read_table(path):
    """Read a headered CSV into (header, list of string rows); rejects ragged rows."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"table not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty table: {path}") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: ragged row at line {lineno}")
            rows.append(row)
    return header, rows


def _numeric_matrix(path, expect_prefix: Optional[str] = None) -> np.ndarray:
    header, rows = read_table(path)
    if expect_prefix is not None:
        for k, name in enumerate(header):
            if not name.startswith(expect_prefix):
                raise DataError(f"{path}: column {k + 1} named {name!r}, expected prefix {expect_prefix!r}")
    out = np.empty((len(rows), len(header)))
    for r, row in enumerate(rows):
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.upper() in ("NA", "NAN"):
                raise DataError(f"{path}: missing value at row {r + 1}, column {header[c]!r}")
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at row {r + 1}, column {header[c]!r}"
                ) from None
    return out


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def write_dataset(out_dir, data: Dataset) -> None:
    out_dir = Path(out_dir)
    write_table(out_dir / "Y.csv", [f"y{i+1}" for i in range(data.p)], data.Y)
    if data.X.shape[1]:
        write_table(out_dir / "X.csv", [f"x{k+1}" for k in range(data.X.shape[1])], data.X)
    if data.T.shape[1]:
        write_table(out_dir / "T.csv", [f"t{k+1}" for k in range(data.T.shape[1])], data.T)


def load_dataset(
    y_path,
    x_path=None,
    t_path=None,
    entry_specs: Optional[tuple] = None,
) -> Dataset:
    """Load and validate Y/X/T tables; X and T are optional (intercept-only)."""
    Y = _numeric_matrix(y_path)
    X = _numeric_matrix(x_path) if x_path else None
    T = _numeric_matrix(t_path) if t_path else None
    data = Dataset(Y=Y, X=X, T=T)
    if entry_specs is not None:
        config = ModelConfig(
            p=data.p,
            q=1,
            d=1,
            p_x=data.X.shape[1],
            p_t=data.T.shape[1],
            entry_specs=tuple(entry_specs),
        )
        data.validate(config)
    return data


def parse_entry_specs(text: str, p: int) -> tuple:
    """Parse 'binary,categorical:3,count,...' (or 'binary' broadcast to p)."""
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if len(parts) == 1 and p > 1:
        parts = parts * p
    specs = []
    for part in parts:
        if part == BINARY:
            specs.append(EntrySpec.binary())
        elif part == COUNT:
            specs.append(EntrySpec.count())
        elif part.startswith(CATEGORICAL):
            _, _, levels = part.partition(":")
            specs.append(EntrySpec.categorical(int(levels)))
        else:
            raise DataError(f"unknown entry spec {part!r}")
    if len(specs) != p:
        raise DataError(f"entry specs describe {len(specs)} dimensions, data has {p}")
    return tuple(specs)


def entry_specs_to_text(specs) -> str:
    out = []
    for s in specs:
        out.append(f"{CATEGORICAL}:{s.levels}" if s.kind == CATEGORICAL else s.kind)
    return ",".join(out)


# ---------------------------------------------------------------------------
# Parameter and archive tables
# ---------------------------------------------------------------------------


def write_params_tables(out_dir, params, prefix: str = "params") -> None:
    out_dir = Path(out_dir)
    q, d = params.A.shape
    write_table(
        out_dir / f"{prefix}_A.csv",
        ["attribute", "class", "value"],
        ((j + 1, h + 1, params.A[j, h]) for j in range(q) for h in range(d)),
    )
    write_table(
        out_dir / f"{prefix}_B.csv",
        ["dim", "level", "coef", "value"],
        (
            (i + 1, l + 1, c, block[l, c])
            for i, block in enumerate(params.B)
            for l in range(block.shape[0])
            for c in range(block.shape[1])
        ),
    )
    write_table(
        out_dir / f"{prefix}_Gamma.csv",
        ["class", "coef", "value"],
        (
            (h + 1, c, params.Gamma[h, c])
            for h in range(params.Gamma.shape[0])
            for c in range(params.Gamma.shape[1])
        ),
    )
    write_table(
        out_dir / f"{prefix}_G.csv",
        ["dim", "attribute", "value"],
        (
            (i + 1, j + 1, int(params.G[i, j]))
            for i in range(params.G.shape[0])
            for j in range(params.G.shape[1])
        ),
    )
    write_table(
        out_dir / f"{prefix}_Theta.csv",
        ["attribute", "coef", "value"],
        (
            (j + 1, c, params.Theta[j, c])
            for j in range(params.Theta.shape[0])
            for c in range(params.Theta.shape[1])
        ),
    )


def write_archive(out_dir, samples: PosteriorSamples) -> None:
    """Long-format tables per parameter group plus compact latent/loglik tables."""
    out_dir = Path(out_dir)
    cfg = samples.config
    s_count = samples.n_kept
    write_table(
        out_dir / "samples_A.csv",
        ["iteration", "attribute", "class", "value"],
        (
            (s + 1, j + 1, h + 1, samples.A[s, j, h])
            for s in range(s_count)
            for j in range(cfg.q)
            for h in range(cfg.d)
        ),
    )
    write_table(
        out_dir / "samples_B.csv",
        ["iteration", "dim", "level", "coef", "value"],
        (
            (s + 1, i + 1, l + 1, c, samples.B[i][s, l, c])
            for s in range(s_count)
            for i in range(cfg.p)
            for l in range(samples.B[i].shape[1])
            for c in range(cfg.q + 1)
        ),
    )
    write_table(
        out_dir / "samples_Gamma.csv",
        ["iteration", "class", "coef", "value"],
        (
            (s + 1, h + 1, c, samples.Gamma[s, h, c])
            for s in range(s_count)
            for h in range(cfg.d)
            for c in range(cfg.p_x + 1)
        ),
    )
    write_table(
        out_dir / "samples_G.csv",
        ["iteration", "dim", "attribute", "value"],
        (
            (s + 1, i + 1, j + 1, int(samples.G[s, i, j]))
            for s in range(s_count)
            for i in range(cfg.p)
            for j in range(cfg.q)
        ),
    )
    write_table(
        out_dir / "samples_Theta.csv",
        ["iteration", "attribute", "coef", "value"],
        (
            (s + 1, j + 1, c, samples.Theta[s, j, c])
            for s in range(s_count)
            for j in range(cfg.q)
            for c in range(cfg.p_t + 1)
        ),
    )
    n = samples.z.shape[1]
    write_table(
        out_dir / "samples_z.csv",
        ["iteration"] + [f"z{i+1}" for i in range(n)],
        ((s + 1, *samples.z[s]) for s in range(s_count)),
    )
    write_table(
        out_dir / "samples_w.csv",
        ["iteration", "obs"] + [f"w{j+1}" for j in range(cfg.q)],
        ((s + 1, i + 1, *samples.W[s, i]) for s in range(s_count) for i in range(n)),
    )
    write_table(
        out_dir / "loglik.csv",
        ["iteration"] + [f"ll{i+1}" for i in range(n)],
        ((s + 1, *samples.loglik[s]) for s in range(s_count)),
    )


def load_archive(archive_dir, config: ModelConfig) -> PosteriorSamples:
    """Reload a written archive into memory; inverse of write_archive."""
    archive_dir = Path(archive_dir)

    def long_values(name, index_cols):
        header, rows = read_table(archive_dir / name)
        expected = ["iteration"] + index_cols + ["value"]
        if header != expected:
            raise DataError(f"{name}: header {header} != expected {expected}")
        return rows

    s_count = 0
    rows = long_values("samples_A.csv", ["attribute", "class"])
    s_count = max(int(r[0]) for r in rows)
    A = np.empty((s_count, config.q, config.d))
    for r in rows:
        A[int(r[0]) - 1, int(r[1]) - 1, int(r[2]) - 1] = float(r[3])
    B = [
        np.empty((s_count, spec.n_coef_rows, config.q + 1)) for spec in config.entry_specs
    ]
    for r in long_values("samples_B.csv", ["dim", "level", "coef"]):
        B[int(r[1]) - 1][int(r[0]) - 1, int(r[2]) - 1, int(r[3])] = float(r[4])
    Gamma = np.empty((s_count, config.d, config.p_x + 1))
    for r in long_values("samples_Gamma.csv", ["class", "coef"]):
        Gamma[int(r[0]) - 1, int(r[1]) - 1, int(r[2])] = float(r[3])
    G = np.empty((s_count, config.p, config.q), dtype=np.int8)
    for r in long_values("samples_G.csv", ["dim", "attribute"]):
        G[int(r[0]) - 1, int(r[1]) - 1, int(r[2]) - 1] = int(r[3])
    Theta = np.empty((s_count, config.q, config.p_t + 1))
    for r in long_values("samples_Theta.csv", ["attribute", "coef"]):
        Theta[int(r[0]) - 1, int(r[1]) - 1, int(r[2])] = float(r[3])

    z_mat = _numeric_matrix(archive_dir / "samples_z.csv")
    z = z_mat[:, 1:].astype(int)
    header, rows = read_table(archive_dir / "samples_w.csv")
    n = z.shape[1]
    W = np.empty((s_count, n, config.q), dtype=np.int8)
    for r in rows:
        W[int(r[0]) - 1, int(r[1]) - 1, :] = [int(float(v)) for v in r[2:]]
    ll_mat = _numeric_matrix(archive_dir / "loglik.csv")
    loglik = ll_mat[:, 1:]
    return PosteriorSamples(
        A=A, B=B, Gamma=Gamma, G=G, Theta=Theta, z=z, W=W, loglik=loglik,
        meta={"config": config}, relabeled=True,
    )


# ---------------------------------------------------------------------------
# Summaries, reports, manifest
# ---------------------------------------------------------------------------


def write_summary_tables(out_dir, summary: Summary) -> None:
    out_dir = Path(out_dir)
    q, d = summary.A_mean.shape
    write_table(
        out_dir / "summary_A.csv",
        ["attribute", "class", "mean", "lower", "upper"],
        (
            (j + 1, h + 1, summary.A_mean[j, h], summary.A_lower[j, h], summary.A_upper[j, h])
            for j in range(q)
            for h in range(d)
        ),
    )
    write_table(
        out_dir / "summary_B.csv",
        ["dim", "level", "coef", "mean", "lower", "upper"],
        (
            (i + 1, l + 1, c, summary.B_mean[i][l, c], summary.B_lower[i][l, c], summary.B_upper[i][l, c])
            for i in range(len(summary.B_mean))
            for l in range(summary.B_mean[i].shape[0])
            for c in range(summary.B_mean[i].shape[1])
        ),
    )
    write_table(
        out_dir / "summary_Gamma.csv",
        ["class", "coef", "mean", "lower", "upper"],
        (
            (h + 1, c, summary.Gamma_mean[h, c], summary.Gamma_lower[h, c], summary.Gamma_upper[h, c])
            for h in range(summary.Gamma_mean.shape[0])
            for c in range(summary.Gamma_mean.shape[1])
        ),
    )
    write_table(
        out_dir / "summary_Theta.csv",
        ["attribute", "coef", "mean", "lower", "upper"],
        (
            (j + 1, c, summary.Theta_mean[j, c], summary.Theta_lower[j, c], summary.Theta_upper[j, c])
            for j in range(summary.Theta_mean.shape[0])
            for c in range(summary.Theta_mean.shape[1])
        ),
    )
    write_table(
        out_dir / "mode_G.csv",
        ["dim", "attribute", "mean", "mode"],
        (
            (i + 1, j + 1, summary.G_mean[i, j], int(summary.G_mode[i, j]))
            for i in range(summary.G_mean.shape[0])
            for j in range(summary.G_mean.shape[1])
        ),
    )
    n, d = summary.class_probs.shape
    write_table(
        out_dir / "mode_z.csv",
        ["obs", "mode"] + [f"p{h+1}" for h in range(d)],
        ((i + 1, int(summary.z_mode[i]), *summary.class_probs[i]) for i in range(n)),
    )
    write_table(
        out_dir / "mode_w.csv",
        ["obs"] + [f"w{j+1}" for j in range(summary.W_mode.shape[1])],
        ((i + 1, *summary.W_mode[i]) for i in range(n)),
    )


def write_waic_table(path, rows) -> None:
    """rows: iterable of (q, d, WaicResult)."""
    write_table(
        path,
        ["q", "d", "waic", "lppd", "p_waic"],
        ((q, d, res.waic, res.lppd, res.p_waic) for (q, d, res) in rows),
    )


def read_waic_table(path):
    header, rows = read_table(path)
    if header[:3] != ["q", "d", "waic"]:
        raise DataError(f"{path}: not a WAIC grid table")
    return [(int(r[0]), int(r[1]), float(r[2])) for r in rows]


def write_manifest(out_dir, command: str, seed: Optional[int], config_echo: dict) -> None:
    import scipy

    from . import __version__

    manifest = {
        "command": command,
        "seed": seed,
        "config": config_echo,
        "versions": {
            "latentclass": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_echo(config: ModelConfig, schedule: Optional[SamplerSchedule] = None, **extra) -> dict:
    echo = {
        "p": config.p,
        "q": config.q,
        "d": config.d,
        "p_x": config.p_x,
        "p_t": config.p_t,
        "entry_specs": entry_specs_to_text(config.entry_specs),
    }
    if schedule is not None:
        echo["schedule"] = {
            "n_iters": schedule.n_iters,
            "burn_in": schedule.burn_in,
            "thin": schedule.thin,
            "seed": schedule.seed,
            "w_update_mode": schedule.w_update_mode,
            "g_update_mode": schedule.g_update_mode,
        }
    echo.update(extra)
    return echo
