"""Draws the synthetic base alloys once; the output is pasted into src/sim/base_alloys.cpp.

Each series has a per-element range and a probability that the element is absent.
"""
import numpy as np

ELEMENTS = ["Cr", "Cu", "Mg", "Ti", "Zn", "Zr", "Mn", "Si", "Ni"]

# element: (lo, hi, probability of being present)
SERIES = {
    "2": {"Cr": (0.02, 0.10, 0.6), "Cu": (3.5, 6.3, 1.0), "Mg": (0.2, 1.8, 0.85), "Ti": (0.02, 0.15, 1.0),
          "Zn": (0.05, 0.25, 1.0), "Zr": (0.10, 0.20, 0.3), "Mn": (0.2, 1.1, 0.9), "Si": (0.1, 0.9, 1.0),
          "Ni": (0.5, 2.0, 0.3)},
    "6": {"Cr": (0.04, 0.30, 0.8), "Cu": (0.1, 1.0, 1.0), "Mg": (0.4, 1.3, 1.0), "Ti": (0.02, 0.15, 1.0),
          "Zn": (0.05, 0.20, 1.0), "Zr": (0.05, 0.15, 0.1), "Mn": (0.03, 0.9, 1.0), "Si": (0.3, 1.4, 1.0),
          "Ni": (0.0, 0.0, 0.0)},
    "7": {"Cr": (0.10, 0.30, 0.7), "Cu": (0.1, 2.6, 1.0), "Mg": (1.0, 3.0, 1.0), "Ti": (0.02, 0.10, 1.0),
          "Zn": (3.5, 8.0, 1.0), "Zr": (0.08, 0.15, 0.4), "Mn": (0.05, 0.5, 1.0), "Si": (0.05, 0.4, 1.0),
          "Ni": (0.0, 0.0, 0.0)},
}

IDS = ["2014", "2018", "2218", "2219", "2618", "6053", "6063", "6070", "6082", "6101", "6151", "6201",
       "6351", "6463", "6951", "7001", "7005", "7020", "7034", "7039", "7068", "7075", "7076", "7175",
       "7178", "7475"]


def main():
    rng = np.random.default_rng(20190604)
    for alloy in IDS:
        ranges = SERIES[alloy[0]]
        row = []
        for el in ELEMENTS:
            lo, hi, present = ranges[el]
            value = round(rng.uniform(lo, hi), 3) if rng.uniform() < present else 0.0
            row.append(value)
        al = round(100.0 - sum(row), 3)
        print('    {"%s", {%s, %s}},' % (alloy, ", ".join(f"{v:g}" for v in row), f"{al:g}"))


if __name__ == "__main__":
    main()
