"""Command-line front end.

Every subcommand writes a table (CSV or JSON) of 12-significant-digit
numbers to stdout or ``--out``.  Exit status: 0 success, 1 invalid input,
2 a randomized property check failed, 3 a numerical guard tripped
(truncation leakage, misaligned cutoff, failed factorization).

Randomized checks draw from numpy's PCG64 generator
(``numpy.random.default_rng(seed)``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

import numpy as np

from .errors import NumericalGuardError
from .fock import DEFAULT_TOL, Tolerances, make_coherent
from .metrics import concurrence, entanglement_entropy, phi_k_entropy_closed_form, tmsv_entropy
from .pipeline import (
    FACTORIZATION_PURITY,
    QubitPairState,
    ad_cascade,
    ad_convert,
    da_convert,
    single_mode_ad,
)
from .rate_distortion import required_qubits, simulate_rd_point, thermal_distortion

DEFAULT_SEED = 20240229
ROUNDTRIP_TOL = 1e-9

LAMBDA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
V_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _tol_overrides(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"--tol expects KEY=VALUE, got {item!r}")
        out[key.strip()] = float(val)
    return out


def _fmt(x) -> str | int | float | None:
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "fail"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.12g}")
    return x


def emit(rows: list[dict], fmt: str, out) -> None:
    rows = [{k: _fmt(v) for k, v in row.items()} for row in rows]
    if fmt == "json":
        out.write(json.dumps(rows, indent=1) + "\n")
        return
    if not rows:
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(rows[0].keys())
    for row in rows:
        w.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v) for v in row.values()])


# ---------------------------------------------------------------------------
# commands


def cmd_transfer(lam: float, k: int, n_trunc: int | None, tol: dict) -> list[dict]:
    n = n_trunc or 2**k * 8
    res = ad_cascade(lam, k, n, min_purity=tol.get("purity", FACTORIZATION_PURITY))
    rows = []
    for rec in res.ledger.stages:
        rows.append(
            {
                "stage": rec.stage,
                "e_transferred": rec.e_transferred,
                "e_transferred_closed_form": rec.e_transferred_closed_form,
                "e_remaining": rec.e_remaining,
                "e_remaining_closed_form": rec.e_remaining_closed_form,
                "pair_purity": rec.pair_purity,
                "pair_fidelity": rec.pair_fidelity,
                "conservation_defect": rec.conservation_defect,
            }
        )
    return rows


def cmd_fig1(lambdas: Sequence[float], ks: Sequence[int]) -> list[dict]:
    rows = []
    for lam in lambdas:
        total = tmsv_entropy(lam)
        for k in ks:
            moved = sum(phi_k_entropy_closed_form(lam, j) for j in range(1, k + 1))
            rows.append({"lambda": lam, "k": k, "E_transferred": moved, "E_total": total})
    return rows


def alpha_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise ValueError("alpha grid needs step > 0 and alpha-max >= alpha-min")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def cmd_coherent_sweep(alphas: Sequence[float], phase: float, n_trunc: int, tol: Tolerances) -> list[dict]:
    rows = []
    for a in alphas:
        alpha = a * np.exp(1j * phase)
        state = make_coherent(alpha, n_trunc, tol=tol)
        rows.append({"alpha": a, "phase": phase, "concurrence": concurrence(single_mode_ad(state, 2))})
    return rows


def cmd_thermal_rd(vs: Sequence[float], ks: Sequence[int], n_trunc: int | None, target: float) -> list[dict]:
    rows = []
    for v in vs:
        need = required_qubits(v, target) if v > 0 else None
        for k in ks:
            rows.append(
                {
                    "v": v,
                    "k": k,
                    "D_formula": thermal_distortion(v, k).distortion,
                    "D_sim": simulate_rd_point(v, k, n_trunc).distortion,
                    "target_D": target,
                    "k_required_real": need.k_real if need else None,
                    "k_required": need.k if need else 1,
                }
            )
    return rows


def random_pairs(rng: np.random.Generator, k: int) -> list[QubitPairState]:
    pairs = []
    for j in range(1, k + 1):
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        pairs.append(QubitPairState.from_amplitudes(j, z / np.linalg.norm(z)))
    return pairs


def roundtrip_trial(pairs: list[QubitPairState], n_trunc: int) -> dict:
    """D/A of ``pairs`` followed by A/D of the result; returns the defects."""
    k = len(pairs)
    da = da_convert(pairs, n_trunc, ground_tol=1.0)
    psi = da.state
    additivity = abs(entanglement_entropy(psi, {"A"}) - sum(p.entropy() for p in pairs))
    back = ad_convert(psi, k, min_purity=0.0)
    rt = max(1 - abs(np.vdot(p.amplitudes, q.amplitudes)) for p, q in zip(pairs, back.pairs))
    return {
        "additivity_defect": additivity,
        "ground_defect": 1 - da.ground_overlap,
        "formula_defect": 1 - da.formula_fidelity,
        "roundtrip_defect": rt,
    }


def _instance(pairs: list[QubitPairState], n_trunc: int) -> dict:
    return {
        "n_trunc": n_trunc,
        "pairs": [[[float(z.real), float(z.imag)] for z in p.amplitudes] for p in pairs],
    }


def _pairs_from_instance(doc: dict) -> list[QubitPairState]:
    return [
        QubitPairState.from_amplitudes(j, [complex(re, im) for re, im in amps])
        for j, amps in enumerate(doc["pairs"], start=1)
    ]


def cmd_roundtrip(
    seed: int, k: int, trials: int, n_trunc: int | None, tol: dict, replay: list[dict] | None = None
) -> tuple[list[dict], list[dict]]:
    """Returns (rows, failing instances)."""
    limit = {
        key: tol.get(key, ROUNDTRIP_TOL)
        for key in ("additivity_defect", "ground_defect", "formula_defect", "roundtrip_defect")
    }
    if replay is not None:
        instances = [(_pairs_from_instance(doc), doc["n_trunc"]) for doc in replay]
    else:
        rng = np.random.default_rng(seed)
        n = n_trunc or 2**k
        instances = [(random_pairs(rng, k), n) for _ in range(trials)]
    rows, failures = [], []
    for i, (pairs, n) in enumerate(instances):
        defects = roundtrip_trial(pairs, n)
        ok = all(defects[key] < limit[key] for key in limit)
        rows.append({"trial": i, "k": len(pairs), **defects, "result": ok})
        if not ok:
            failures.append({"trial": i, **_instance(pairs, n), **defects})
    return rows, failures


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entadc", description="Entanglement A/D conversion experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override")
    common.add_argument("--truncation", type=int, metavar="N", help="Fock cutoff per mode")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("transfer", parents=[common], help="A/D cascade ledger for one squeezing value")
    s.add_argument("--lambda", dest="lam", type=float, default=0.8)
    s.add_argument("--stages", type=int, default=3)

    s = sub.add_parser("fig1", parents=[common], help="closed-form transfer curves")
    s.add_argument("--lambda", dest="lam", type=_floats, default=list(LAMBDA_GRID))
    s.add_argument("--stages", type=_ints, default=[1, 2, 3, 4, 5, 6])

    s = sub.add_parser("coherent-sweep", parents=[common], help="two-qubit concurrence from |alpha>")
    s.add_argument("--alpha-min", type=float, default=0.0)
    s.add_argument("--alpha-max", type=float, default=3.5)
    s.add_argument("--alpha-step", type=float, default=0.01)
    s.add_argument("--phase", type=float, default=0.0, help="arg(alpha) in radians")

    s = sub.add_parser("thermal-rd", parents=[common], help="thermal-source distortion table")
    s.add_argument("--v", type=_floats, default=list(V_GRID))
    s.add_argument("--stages", type=_ints, default=[1, 2, 3])
    s.add_argument("--target-d", type=float, default=0.01)

    s = sub.add_parser("roundtrip", parents=[common], help="randomized D/A -> A/D property checks")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--stages", type=int, default=2)
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--replay", metavar="PATH", help="re-run failing instances from a JSON file")
    s.add_argument("--failures", metavar="PATH", help="write failing instances here as JSON")
    return p


def _run(args) -> tuple[list[dict], int]:
    tol = _tol_overrides(args.tol)
    if args.truncation is not None and args.truncation < 2:
        raise ValueError("--truncation must be at least 2")
    if args.command == "transfer":
        return cmd_transfer(args.lam, args.stages, args.truncation, tol), 0
    if args.command == "fig1":
        if not args.lam or not args.stages:
            raise ValueError("grids must be non-empty")
        return cmd_fig1(args.lam, args.stages), 0
    if args.command == "coherent-sweep":
        t = Tolerances(**{**DEFAULT_TOL.__dict__, **{k: v for k, v in tol.items() if k in DEFAULT_TOL.__dict__}})
        grid = alpha_grid(args.alpha_min, args.alpha_max, args.alpha_step)
        return cmd_coherent_sweep(grid, args.phase, args.truncation or 64, t), 0
    if args.command == "thermal-rd":
        if not args.v or not args.stages:
            raise ValueError("grids must be non-empty")
        return cmd_thermal_rd(args.v, args.stages, args.truncation, args.target_d), 0
    if args.command == "roundtrip":
        if args.trials < 0:
            raise ValueError("--trials must be non-negative")
        replay = None
        if args.replay:
            with open(args.replay) as fh:
                doc = json.load(fh)
            replay = doc if isinstance(doc, list) else [doc]
        rows, failures = cmd_roundtrip(args.seed, args.stages, args.trials, args.truncation, tol, replay)
        if failures:
            text = json.dumps(failures, indent=1)
            if args.failures:
                with open(args.failures, "w") as fh:
                    fh.write(text + "\n")
            sys.stderr.write(text + "\n")
        return rows, 2 if failures else 0
    raise ValueError(f"unknown command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rows, code = _run(args)
    except NumericalGuardError as exc:
        sys.stderr.write(f"numerical guard: {exc}\n")
        return 3
    except ValueError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return 1
    buf = io.StringIO()
    emit(rows, args.format, buf)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
