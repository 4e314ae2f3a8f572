#!/usr/bin/env python3
"""Fit the shipped operator profiles to the reference group moments.

Runs the simulator with many sessions per iteration and nudges latency
means, error probabilities and the participant speed spread until the
simulated means match the targets. Writes the fitted profiles in place.

usage: calibrate_profiles.py <replica-sync binary> [--sessions N] [--iterations K]
"""
import argparse
import csv
import json
import pathlib
import statistics
import subprocess
import tempfile

DATA = pathlib.Path(__file__).resolve().parent.parent / "data" / "profiles"

# total, 1-handed and 2-handed block seconds, total SD, and per-session
# simple / critical / repetition counts.
TARGETS = {
    "tablet": dict(total=763.65, sd=76.80, one=193.26, two=146.7, simple=49 / 19, critical=6 / 19, repetition=3 / 19),
    "hmd": dict(total=623.55, sd=67.70, one=146.43, two=105.86, simple=3 / 20, critical=1 / 20, repetition=0.0),
}


def simulate(binary, condition, profile, sessions, seed, workdir):
    path = workdir / f"{condition}.json"
    path.write_text(json.dumps(profile, indent=2))
    out = workdir / f"out-{condition}"
    subprocess.run([binary, "simulate", "--condition", condition, "--sessions", str(sessions), "--seed", str(seed),
                    "--profile", str(path), "--out", str(out), "--workers", "0"], check=True, stdout=subprocess.DEVNULL)
    with open(out / "metrics.csv") as f:
        rows = list(csv.DictReader(f))
    col = lambda k: [float(r[k]) for r in rows]
    return dict(total=statistics.mean(col("total_s")), sd=statistics.stdev(col("total_s")),
                one=statistics.mean(col("one_handed_s")), two=statistics.mean(col("two_handed_s")),
                simple=statistics.mean(col("simple")), critical=statistics.mean(col("critical")),
                repetition=statistics.mean(col("repetition")))


def scale_latency(lat, delta):
    cv = lat["sd_ms"] / lat["mean_ms"]
    lat["mean_ms"] = max(500.0, lat["mean_ms"] + delta)
    lat["sd_ms"] = cv * lat["mean_ms"]


def step(profile, got, want):
    scale_latency(profile["manipulate_latency_1h"], 1000 * (want["one"] - got["one"]) / 8)
    scale_latency(profile["manipulate_latency_2h"], 1000 * (want["two"] - got["two"]) / 4)
    rest_want = want["total"] - want["one"] - want["two"]
    rest_got = got["total"] - got["one"] - got["two"]
    scale_latency(profile["describe_latency"], 1000 * (rest_want - rest_got) / 3)
    for key, field in (("simple", "p_simple"), ("critical", "p_critical"), ("repetition", "p_repeat")):
        if want[key] == 0:
            profile[field] = 0.0
        elif got[key] > 0:
            profile[field] = min(0.9, profile[field] * want[key] / got[key])
    profile["participant_speed_sd"] *= (want["sd"] / got["sd"]) ** 1.5


def tidy(profile):
    for key in ("identify_latency", "manipulate_latency_1h", "manipulate_latency_2h", "describe_latency"):
        profile[key] = {k: round(v) for k, v in profile[key].items()}
    for key in ("p_simple", "p_critical", "p_repeat"):
        profile[key] = round(profile[key], 5)
    profile["participant_speed_sd"] = round(profile["participant_speed_sd"], 4)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("binary")
    ap.add_argument("--sessions", type=int, default=4000)
    ap.add_argument("--iterations", type=int, default=8)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        workdir = pathlib.Path(tmp)
        for condition, want in TARGETS.items():
            path = DATA / f"{condition}.json"
            profile = json.loads(path.read_text())
            for i in range(args.iterations):
                got = simulate(args.binary, condition, profile, args.sessions, 1000 + i, workdir)
                print(condition, i, {k: round(v, 3) for k, v in got.items()})
                step(profile, got, want)
            tidy(profile)
            got = simulate(args.binary, condition, profile, args.sessions, 4242, workdir)
            print(condition, "final", {k: round(v, 3) for k, v in got.items()})
            path.write_text(json.dumps(profile, indent=2) + "\n")


if __name__ == "__main__":
    main()
