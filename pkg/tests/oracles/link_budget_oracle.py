"""High-precision reference values for the free-space factor and the
backscatter power equation, evaluated with mpmath at 50 digits.

Run ``python tests/oracles/link_budget_oracle.py`` to regenerate
``link_budget_values.json``. The package code is deliberately not imported.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
C = mp.mpf(299792458)

CASES = {
    "path_loss_902MHz_2m": {"freq_hz": "902e6", "d_m": "2"},
    "backscatter_lab_2m": {
        "freq_hz": "902e6", "d_m": "2", "p_tx_dbm": "31.5", "g_r_dbi": "7.5",
        "g_t_dbi": "2", "alpha": "0.3", "rho_l": "0.5", "gamma": "0.5", "h": "1",
    },
    "backscatter_lab_2m_round_trip": {
        "freq_hz": "902e6", "d_m": "2", "p_tx_dbm": "31.5", "g_r_dbi": "7.5",
        "g_t_dbi": "2", "alpha": "0.3", "rho_l": "0.5", "gamma": "0.5", "h": "1",
        "round_trip": True,
    },
    "backscatter_calibrated_lab_geometry_round_trip": {
        "freq_hz": "902e6", "d_m": "2.008083663595718", "p_tx_dbm": "31.5", "g_r_dbi": "7.5",
        "g_t_dbi": "0", "alpha": "0.1", "rho_l": "0.5", "gamma": "0.25", "h": "1",
        "round_trip": True,
    },
}


def free_space(freq_hz, d_m):
    lam = C / mp.mpf(freq_hz)
    return lam / (4 * mp.pi * mp.mpf(d_m))


def backscatter_dbm(c):
    L = free_space(c["freq_hz"], c["d_m"])
    if c.get("round_trip"):
        L = L * L
    lin = lambda db: mp.power(10, mp.mpf(db) / 10)
    p_tx = mp.power(10, (mp.mpf(c["p_tx_dbm"]) - 30) / 10)
    amp = lin(c["g_t_dbi"]) * lin(c["g_r_dbi"]) * L * mp.mpf(c["gamma"])
    y = mp.mpf(c["alpha"]) * mp.mpf(c["rho_l"]) * p_tx * amp ** 2 * mp.mpf(c["h"]) ** 4
    return 10 * mp.log10(y) + 30


def compute():
    out = {}
    for name, case in CASES.items():
        if name.startswith("path_loss"):
            value = free_space(case["freq_hz"], case["d_m"])
        else:
            value = backscatter_dbm(case)
        out[name] = {"inputs": case, "value": mp.nstr(value, 30)}
    return out


if __name__ == "__main__":
    path = Path(__file__).with_name("link_budget_values.json")
    path.write_text(json.dumps(compute(), indent=2) + "\n")
    print(path.read_text())
