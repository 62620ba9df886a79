"""Smoke test of the nhdfem Python module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math
import pathlib
import sys

import nhdfem

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check(cond, what):
    if not cond:
        sys.exit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    re, im = nhdfem.permittivity(omega=1.0, k=0.0, omega_p=1.0, gamma=1.0, beta=1.0)
    check(abs(re - 0.5) < 1e-14 and abs(im - 0.5) < 1e-14, "eps(1, 0) = 0.5 + 0.5i")

    try:
        nhdfem.Config.from_toml('[problem]\nkind = "manufactured"\nbogus = 1\n')
        check(False, "unknown key rejected")
    except ValueError:
        check(True, "unknown key rejected")

    cfg = nhdfem.Config.load(str(ROOT / "configs" / "convergence_r1.toml"))
    check(cfg.kind == "manufactured", "config kind")
    check(nhdfem.Config.from_toml(cfg.to_toml()).to_toml() == cfg.to_toml(), "config round trip")

    info = nhdfem.mesh_info(cfg)
    check(info["cells"] == 48 and info["ndofs_j"] is not None, "mesh info of the 2x2x2 box")

    coarse = nhdfem.solve_manufactured(2)
    fine = nhdfem.solve_manufactured(4)
    order = math.log2(coarse["err_e"] / fine["err_e"])
    check(0.7 < order < 1.3, f"first order E error decay ({order:.3f})")
    check(fine["residual_e"] < 1e-9 and fine["power_balance_defect"] < 1e-9, "residual and power balance")

    it = nhdfem.solve_manufactured(4, solver="gmres", tol=1e-10)
    check(abs(it["err_e"] - fine["err_e"]) < 1e-8 * fine["err_e"], "gmres agrees with direct")

    rows = nhdfem.dispersion(nhdfem.Config.load(str(ROOT / "configs" / "dispersion.toml")))
    check(len(rows) == 420 and all(e is None or math.isfinite(e[0]) for _, _, e in rows), "dispersion grid")

    print("smoke test passed")


if __name__ == "__main__":
    main()
