"""CSV writers and the optional loss-versus-distance figure."""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping
from pathlib import Path

from .simulation import SimulationConfig, SweepRow
from .tables import ParameterCatalog

SNR_HEADER = ("time_s", "pathloss_db", "snr_db")
SWEEP_HEADER = ("distance_m", "condition", "mean_loss_db", "analytic_loss_db", "runs")


def metadata(cfg: SimulationConfig, catalog: ParameterCatalog) -> dict[str, str]:
    info = catalog[cfg.scenario].info

    def arr(a):
        kind = "isotropic" if a.isotropic else f"3gpp_ge{a.element_gain_db:g}dB"
        return f"{a.rows}x{a.cols}_{kind}"

    tx_pos = cfg.tx.position or (0.0, 0.0, info.h_bs)
    rx_pos = cfg.rx.position or ("sweep" if len(cfg.distances_m) > 1 else cfg.distances_m[0], 0.0, info.h_ut)
    return {
        "scenario": cfg.scenario,
        "fc_ghz": f"{cfg.fc_ghz:g}",
        "seed": str(cfg.seed),
        "runs": str(cfg.runs),
        "tx_power_dbm": f"{cfg.tx_power_dbm:g}",
        "noise_figure_db": f"{cfg.noise_figure_db:g}",
        "shadowing": str(cfg.shadowing).lower(),
        "blockage": str(cfg.blockage).lower(),
        "tx_position": " ".join(str(v) for v in tx_pos),
        "rx_position": " ".join(str(v) for v in rx_pos),
        "tx_array": arr(cfg.tx.array),
        "rx_array": arr(cfg.rx.array),
        "catalog_version": catalog.version,
        "catalog_sha256": catalog.checksum,
    }


def _write(header: Iterable[str], rows: Iterable[Iterable], meta: Mapping[str, str]) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def snr_trace_csv(rows, meta: Mapping[str, str]) -> str:
    return _write(SNR_HEADER, ((f"{t:.6f}", f"{pl:.6f}", f"{snr:.6f}") for t, pl, snr in rows), meta)


def loss_sweep_csv(rows: Iterable[SweepRow], meta: Mapping[str, str]) -> str:
    return _write(
        SWEEP_HEADER,
        (
            (f"{r.distance_m:g}", r.condition.value, f"{r.mean_loss_db:.6f}", f"{r.analytic_loss_db:.6f}", r.runs)
            for r in rows
        ),
        meta,
    )


def read_csv(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Split a file produced here into (metadata, header, rows)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line:
            body.append(line)
    parsed = list(csv.reader(body))
    return meta, parsed[0], parsed[1:]


def render_loss_figure(rows: list[SweepRow], path: str | Path, title: str = "") -> None:
    """Mean loss (solid) and analytic pathloss (dashed black) against distance."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for cond, colour in (("LOS", "tab:blue"), ("NLOS", "tab:red")):
        sel = [r for r in rows if r.condition.value == cond]
        d = [r.distance_m for r in sel]
        ax.plot(d, [r.mean_loss_db for r in sel], "-o", color=colour, ms=3, label=f"{cond} mean")
        ax.plot(d, [r.analytic_loss_db for r in sel], "--", color="black", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("distance [m]")
    ax.set_ylabel("propagation loss [dB]")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
