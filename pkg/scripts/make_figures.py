"""Produce the swiss roll figure inputs and render both figure types.

Trains one extreme-value net and one mixture model on a seed-1 swiss roll
training set, dumps 3e4 samples from each plus a histogram resample of the
training data, and copies the training set itself alongside them:

    results/swiss_train.txt  swiss_empirical.txt  swiss_gmm.txt  swiss_evl.txt

Then, if the plotkit console scripts are installed, renders the grouped-bar
charts from results/acceptance.csv and the four-panel scatter grid. Model
training takes a few minutes; files already present are not rebuilt.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from evlgen.harness import EVL_SWISSROLL, main as harness

RESULTS = Path("results")
WORK = RESULTS / "swiss_work"
DUMP_N = "30000"
LABELS = "Training set,Empirical,Gaussian mixture,Extreme value net"

# Train and sample the net exactly as the evaluation grid does for the
# roll, so the panels show the same model the CSV scores.
ROLL_EVL_TRAIN = ["--guesses", str(EVL_SWISSROLL["guesses"]),
                  "--lr", str(EVL_SWISSROLL["lr0"]),
                  "--noise-dim", str(EVL_SWISSROLL["noise_dim"])]
ROLL_EVL_SAMPLE = ["--guesses", str(EVL_SWISSROLL["guesses"]),
                   "--draws-per-batch", str(EVL_SWISSROLL["draws_per_batch"])]


def build_inputs() -> list[Path]:
    WORK.mkdir(parents=True, exist_ok=True)
    train = WORK / "swissroll_s1_train.txt"
    if not train.exists():
        run(["gen-data", "swissroll", "--seed", "1", "--out-dir", str(WORK)])

    copied = RESULTS / "swiss_train.txt"
    if not copied.exists():
        shutil.copyfile(train, copied)

    for model in ("evl", "gmm"):
        ckpt = WORK / f"{model}.json"
        if not ckpt.exists():
            extra = ROLL_EVL_TRAIN if model == "evl" else []
            run(["train", "--model", model, "--data", str(train),
                 "--out", str(ckpt), "--seed", "1", *extra])

    dumps = {
        RESULTS / "swiss_empirical.txt": ["--empirical-train", str(train)],
        RESULTS / "swiss_gmm.txt": ["--model-file", str(WORK / "gmm.json")],
        RESULTS / "swiss_evl.txt": ["--model-file", str(WORK / "evl.json"),
                                    *ROLL_EVL_SAMPLE],
    }
    for out, source in dumps.items():
        if not out.exists():
            run(["sample", *source, "--out", str(out), "--n", DUMP_N,
                 "--seed", "1"])
    return [copied, *dumps]


def run(argv) -> None:
    print("evlgen " + " ".join(argv), flush=True)
    rc = harness(argv)
    if rc != 0:
        sys.exit(rc)


def render(panel_files) -> None:
    for tool in ("plotkit-bars", "plotkit-scatter"):
        if shutil.which(tool) is None:
            print(f"{tool} not on PATH; install plotkit to render figures")
            return
    for metric in ("kl", "fisher"):
        subprocess.run(
            ["plotkit-bars", str(RESULTS / "acceptance.csv"),
             "--metric", metric, "--out", str(RESULTS / f"bars_{metric}.png")],
            check=True)
    subprocess.run(
        ["plotkit-scatter", *map(str, panel_files),
         "--labels", LABELS, "--out", str(RESULTS / "swissroll_panels.png")],
        check=True)


def main() -> int:
    panels = build_inputs()
    if (RESULTS / "acceptance.csv").exists():
        render(panels)
    else:
        print("results/acceptance.csv missing; skipped figure rendering")
    return 0


if __name__ == "__main__":
    sys.exit(main())
