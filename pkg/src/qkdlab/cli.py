"""Command-line entry point: reproducible experiments from JSON configs.

Every command is a pure function of (config file, seed): outputs carry no
timestamps or machine state, so rerunning a preset yields byte-identical
files.  Exit codes: 0 success, 1 usage/config error, 2 session aborted on a
high error rate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import otp, qmath
from .detection import DetectorConfig, records_to_csv
from .protocol import (SessionConfig, run_session, transcript_summary,
                       transcript_to_dict)
from .states import (EveConfig, QuartzPlate, TwoQubitState, add_white_noise,
                     bell_phi_plus, dephase_bob, plate_gamma)
from .tomography import (TOMO_SCHEDULE, CHSH_CANONICAL_ANGLES, ReconstructionError,
                         chsh, correlator, run_tomography, simulate_counts)

BASIS_LABELS = ("HH", "HV", "VH", "VV")


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed: set, where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _take(section: dict, key: str, types, where: str, required=False, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}' in {where}")
        return default
    value = section[key]
    if types is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types if isinstance(types, tuple) else (types,)) \
            or isinstance(value, bool) and types is not bool:
        raise ConfigError(f"key '{key}' in {where} has the wrong type")
    return value


def _parse_eve(section: dict | None) -> EveConfig:
    if section is None:
        return EveConfig()
    _check_keys(section, {"mode", "basis_angle", "strength",
                          "intercept_fraction", "basis_policy"}, "eve")
    try:
        return EveConfig(
            mode=_take(section, "mode", str, "eve", default="absent"),
            basis_angle=_take(section, "basis_angle", float, "eve", default=0.0),
            strength=_take(section, "strength", float, "eve", default=1.0),
            intercept_fraction=_take(section, "intercept_fraction", float, "eve", default=1.0),
            basis_policy=_take(section, "basis_policy", str, "eve", default="fixed"),
        )
    except ValueError as exc:
        raise ConfigError(f"eve: {exc}") from exc


def _parse_plate(section: dict | None) -> QuartzPlate | None:
    if section is None:
        return None
    _check_keys(section, {"thickness_mm", "birefringence",
                          "coherence_time_fs", "axis_angle_deg"}, "plate")
    try:
        return QuartzPlate(
            thickness_mm=_take(section, "thickness_mm", float, "plate", required=True),
            birefringence=_take(section, "birefringence", float, "plate", default=0.00776),
            coherence_time_fs=_take(section, "coherence_time_fs", float, "plate", default=54.0),
            axis_angle_deg=_take(section, "axis_angle_deg", float, "plate", default=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"plate: {exc}") from exc


def _parse_detector(section: dict | None) -> DetectorConfig:
    if section is None:
        return DetectorConfig()
    _check_keys(section, {"dwell", "pair_rate", "dark_rate"}, "detector")
    try:
        return DetectorConfig(
            dwell=_take(section, "dwell", float, "detector", default=0.1),
            pair_rate=_take(section, "pair_rate", float, "detector", default=10.0),
            dark_rate=_take(section, "dark_rate", float, "detector", default=0.1),
        )
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from exc


def _apply_plate(eve: EveConfig, plate: QuartzPlate | None) -> EveConfig:
    """A configured plate pins the dephasing strength and axis."""
    if plate is None:
        return eve
    if eve.mode != "dephasing":
        raise ConfigError("a quartz plate only makes sense with eve.mode 'dephasing'")
    return EveConfig(mode="dephasing", basis_angle=plate.axis_angle_deg,
                     strength=plate_gamma(plate),
                     intercept_fraction=eve.intercept_fraction,
                     basis_policy=eve.basis_policy)


def load_config(path: str, kind: str, seed_override: int | None = None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    file_kind = raw.get("kind")
    if file_kind != kind:
        raise ConfigError(f"config kind is '{file_kind}', but this command needs '{kind}'")

    common = {"kind", "seed", "source_noise", "eve", "plate"}
    per_kind = {
        "session": common | {"n_intervals", "detector", "qber_sample_fraction",
                             "abort_threshold", "reconciliation_passes",
                             "pa_safety_bits"},
        "tomo": common | {"n_per_setting", "replicas", "counts_file"},
        "bell": common | {"angles"},
    }
    _check_keys(raw, per_kind[kind], "config")

    seed = _take(raw, "seed", int, "config", required=seed_override is None)
    if seed_override is not None:
        seed = seed_override
    eve = _apply_plate(_parse_eve(raw.get("eve")), _parse_plate(raw.get("plate")))
    out = {
        "kind": kind,
        "seed": seed,
        "source_noise": _take(raw, "source_noise", float, "config", default=0.0),
        "eve": eve,
    }
    if kind == "session":
        out["session"] = SessionConfig(
            seed=seed,
            n_intervals=_take(raw, "n_intervals", int, "config", default=10000),
            source_noise=out["source_noise"],
            eve=eve,
            detector=_parse_detector(raw.get("detector")),
            qber_sample_fraction=_take(raw, "qber_sample_fraction", float, "config", default=0.2),
            abort_threshold=_take(raw, "abort_threshold", float, "config", default=0.11),
            reconciliation_passes=_take(raw, "reconciliation_passes", int, "config", default=4),
            pa_safety_bits=_take(raw, "pa_safety_bits", int, "config", default=30),
        )
    elif kind == "tomo":
        out["n_per_setting"] = _take(raw, "n_per_setting", float, "config", default=10000.0)
        out["replicas"] = _take(raw, "replicas", int, "config", default=200)
        out["counts_file"] = _take(raw, "counts_file", str, "config", default=None)
    elif kind == "bell":
        angles = _take(raw, "angles", list, "config", default=list(CHSH_CANONICAL_ANGLES))
        if len(angles) != 4 or not all(isinstance(a, (int, float)) for a in angles):
            raise ConfigError("angles must be four numbers [a, a', b, b']")
        out["angles"] = [float(a) for a in angles]
    return out


def _prepared_state(cfg: dict) -> TwoQubitState:
    """Source state after noise and any static (analytic) Eve channel."""
    eve = cfg["eve"]
    if eve.mode == "intercept_resend":
        raise ConfigError("tomo/bell configs model Eve as a dephasing plate; "
                          "intercept_resend is a per-trial session channel")
    state = add_white_noise(bell_phi_plus(), cfg["source_noise"])
    if eve.mode == "dephasing":
        # Bernoulli gating averages linearly, so a fraction f of strength g
        # equals one plate of strength f*g.
        state = dephase_bob(state, eve.basis_angle,
                            eve.strength * eve.intercept_fraction)
    return state


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _ensure_out(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)


def cmd_session(cfg: dict, out_dir: str) -> int:
    _ensure_out(out_dir)
    transcript = run_session(cfg["session"])
    records_to_csv(transcript.records, os.path.join(out_dir, "records.csv"))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trial", "alice", "bob", "agree"])
    for r in transcript.records:
        if r.kept and r.alice_basis == r.bob_basis:
            writer.writerow([r.trial_index, r.alice_bit, r.bob_bit,
                             int(r.alice_bit == r.bob_bit)])
    with open(os.path.join(out_dir, "sifted.csv"), "w", encoding="utf-8",
              newline="") as fh:
        fh.write(buf.getvalue())

    _dump_json(transcript_to_dict(transcript), os.path.join(out_dir, "transcript.json"))
    summary = transcript_summary(transcript)
    _dump_json(summary, os.path.join(out_dir, "summary.json"))
    print(f"sifted {summary['n_sifted']} bits, agreement "
          f"{summary['sifted_agreement']:.4f}, qber "
          f"{-1.0 if summary['qber_estimate'] is None else summary['qber_estimate']:.4f}, "
          f"final key {summary['final_key_bits']} bits"
          + (" [aborted]" if summary["aborted"] else ""))
    return 2 if transcript.aborted else 0


def _read_counts_csv(path) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ConfigError(f"cannot read counts file: {exc}") from exc
    if rows and rows[0][:3] == ["setting_a", "setting_b", "count"]:
        rows = rows[1:]
    table = {}
    for row in rows:
        if len(row) != 3:
            raise ConfigError(f"counts file row has {len(row)} fields, expected 3")
        try:
            table[(row[0].strip(), row[1].strip())] = float(row[2])
        except ValueError as exc:
            raise ConfigError(f"bad count value {row[2]!r}") from exc
    counts = []
    for a, b in TOMO_SCHEDULE:
        key = (a.value, b.value)
        if key not in table:
            raise ConfigError(f"counts file is missing the {key[0]}{key[1]} setting")
        counts.append(table[key])
    if len(table) != len(TOMO_SCHEDULE):
        raise ConfigError("counts file has settings outside the 16-setting schedule")
    return np.array(counts)


def _write_counts_csv(counts, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["setting_a", "setting_b", "count"])
        for (a, b), c in zip(TOMO_SCHEDULE, counts):
            writer.writerow([a.value, b.value, f"{float(c):.10g}"])


def cmd_tomo(cfg: dict, out_dir: str) -> int:
    _ensure_out(out_dir)
    if cfg["counts_file"]:
        counts = _read_counts_csv(cfg["counts_file"])
    else:
        rng = np.random.default_rng(cfg["seed"])
        counts = simulate_counts(_prepared_state(cfg), cfg["n_per_setting"], rng)
    run = run_tomography(counts, replicas=cfg["replicas"], seed=cfg["seed"])

    _write_counts_csv(run.counts, os.path.join(out_dir, "counts.csv"))
    _dump_json({"basis_order": list(BASIS_LABELS),
                "rho": qmath.mat_to_json(run.rho_hat.rho)},
               os.path.join(out_dir, "density_matrix.json"))
    metrics = dict(run.metrics.as_dict(), total_estimate=run.total_estimate)
    _dump_json(metrics, os.path.join(out_dir, "metrics.json"))

    with open(os.path.join(out_dir, "bars.csv"), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_label", "col_label", "real_part"])
        for i, row_label in enumerate(BASIS_LABELS):
            for j, col_label in enumerate(BASIS_LABELS):
                writer.writerow([row_label, col_label,
                                 f"{run.rho_hat.rho[i, j].real:.10g}"])
    print(f"tangle {run.metrics.tangle:.4f} +- {run.metrics.tangle_sigma:.4f}, "
          f"entropy {run.metrics.von_neumann:.4f} +- {run.metrics.von_neumann_sigma:.4f}, "
          f"fidelity {run.metrics.fidelity:.4f}")
    return 0


def cmd_bell(cfg: dict, out_dir: str) -> int:
    _ensure_out(out_dir)
    state = _prepared_state(cfg)
    a, a_prime, b, b_prime = cfg["angles"]
    table = {
        "E(a,b)": correlator(state, a, b),
        "E(a,b')": correlator(state, a, b_prime),
        "E(a',b)": correlator(state, a_prime, b),
        "E(a',b')": correlator(state, a_prime, b_prime),
    }
    s_value = chsh(state, a, a_prime, b, b_prime)
    _dump_json({"angles": cfg["angles"], "correlators": table, "s_value": s_value},
               os.path.join(out_dir, "bell.json"))
    for name, value in table.items():
        print(f"{name} = {value:+.6f}")
    print(f"{s_value:.6f}")
    return 0


def _load_key_bits(args) -> np.ndarray:
    if args.key_hex:
        return otp.hex_to_bits(args.key_hex)
    with open(args.key_file, encoding="utf-8") as fh:
        transcript = json.load(fh)
    bits = otp.hex_to_bits(transcript["final_key_hex"])
    return bits[:transcript["final_key_len"]]


def cmd_otp(args) -> int:
    if args.text is not None:
        data = otp.text_to_bits(args.text)
    else:
        data = otp.hex_to_bits(args.hex)
    key = _load_key_bits(args)[args.offset:]
    out = otp.encrypt(data, key) if args.op == "encrypt" else otp.decrypt(data, key)
    print(otp.bits_to_hex(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdlab",
        description="Entanglement-based BB84 simulator: sessions, state "
                    "tomography, Bell tests and one-time-pad messaging.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("session", "run a key-distribution session"),
                       ("tomo", "state tomography (simulated or from a counts file)"),
                       ("bell", "CHSH correlation test of the configured state")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("otp", help="one-time-pad encrypt/decrypt")
    p.add_argument("op", choices=["encrypt", "decrypt"])
    payload = p.add_mutually_exclusive_group(required=True)
    payload.add_argument("--text", help="payload as UTF-8 text")
    payload.add_argument("--hex", help="payload as hex")
    keysrc = p.add_mutually_exclusive_group(required=True)
    keysrc.add_argument("--key-hex", help="key material as hex")
    keysrc.add_argument("--key-file", help="transcript JSON holding final_key_hex")
    p.add_argument("--offset", type=int, default=0,
                   help="skip this many already-consumed key bits")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; 2 is reserved for protocol aborts
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "otp":
            return cmd_otp(args)
        cfg = load_config(args.config, args.command, args.seed)
        handler = {"session": cmd_session, "tomo": cmd_tomo, "bell": cmd_bell}
        return handler[args.command](cfg, args.out)
    except (ConfigError, ReconstructionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
