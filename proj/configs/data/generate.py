"""Writes the synthetic hourly series used by case_study.json (fixed seed)."""
import csv
import datetime as dt
import json
import math
import random

rng = random.Random(20240601)
start = dt.datetime(2023, 6, 1, tzinfo=dt.timezone.utc)
hours = 92 * 24
delta_x = 0.1548

with open("demand.csv", "w", newline="") as fd, open("price.csv", "w", newline="") as fp:
    wd, wp = csv.writer(fd), csv.writer(fp)
    wd.writerow(["timestamp", "demand_ml"])
    wp.writerow(["timestamp", "price"])
    for h in range(hours):
        t = start + dt.timedelta(hours=h)
        stamp = t.strftime("%Y-%m-%dT%H:%MZ")
        hod = t.hour
        level = 3.2 + 1.5 * math.sin(2 * math.pi * (hod - 9) / 24) + rng.gauss(0.0, 1.2)
        level = min(11.0, max(1.0, level))
        wd.writerow([stamp, f"{level * delta_x:.5f}"])
        price = 89.77 + 25.0 * math.sin(2 * math.pi * (hod - 12) / 24) + rng.gauss(0.0, 35.0)
        if rng.random() < 0.003:
            price += 1500.0
        wp.writerow([stamp, f"{price:.2f}"])

# Inline demand model for the config: every hour keeps all levels 1..11.
probs = []
for hod in range(24):
    mean = 3.2 + 1.5 * math.sin(2 * math.pi * (hod - 9) / 24)
    w = [0.0] + [math.exp(-0.5 * ((k - mean) / 1.5) ** 2) + 0.002 for k in range(1, 12)]
    s = sum(w)
    probs.append([round(x / s, 12) for x in w])
    probs[-1][-1] = round(1.0 - sum(probs[-1][:-1]), 12)
print(json.dumps(probs))
