"""End-to-end acceptance: the desk preset against every stated target.

The desk sweep runs once per session through the installed command
line (a second run backs the determinism check), and each test below
holds one criterion to its stated tolerance, reading only the emitted
artifacts.  Block wall-clock budgets come from timings.csv, which is
deliberately kept outside the deterministic JSON payload.

One known red: the band-density margin moves the wrong way when the
zero-padding doubles (the larger box samples the supremum of the same
band field more finely, so the max grows), which breaks the
"both margins improve" clause asserted at the end of the window test.
The effect is real, reproducible across resolutions, and documented
with measurements; the assertion stays faithful rather than adjusted
to pass.
"""

import json
import math
import subprocess
import sys

import pytest

_SEED = "7"


@pytest.fixture(scope="session")
def desk(tmp_path_factory):
    """Two desk runs: (payloads, timings, raw JSON texts)."""
    payloads, timings, texts = [], [], []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"desk-{tag}")
        proc = subprocess.run(
            [sys.executable, "-m", "mtlab.cli", "suite",
             "--preset", "desk", "--seed", _SEED, "--out", str(out)],
            capture_output=True, text=True, timeout=3600,
        )
        # exit 1 is expected while the padding-refinement red stands
        assert proc.returncode in (0, 1), proc.stderr
        texts.append((out / "reports.json").read_text())
        payloads.append(json.loads(texts[-1]))
        blocks = {}
        for line in (out / "timings.csv").read_text().strip().split("\n")[1:]:
            name, seconds, _ = line.split(",")
            blocks[name] = float(seconds)
        timings.append(blocks)
    return payloads, timings, texts


def _pick(payload, check, **params):
    rows = [
        r for r in payload["reports"]
        if r["check"] == check and all(r["params"].get(k) == v for k, v in params.items())
    ]
    assert rows, f"no report {check} with {params}"
    return rows


def _one(payload, check, **params):
    rows = _pick(payload, check, **params)
    assert len(rows) == 1, f"ambiguous report {check} with {params}"
    return rows[0]


def test_criterion_01_constants(desk):
    payloads, timings, _ = desk
    p = payloads[0]
    gn = _one(p, "constants.lambda-gn")
    # independent oracle straight from the Gamma factors
    oracle = (
        (4.0 * math.pi) ** -0.25
        * math.sqrt(math.gamma(0.5) / math.gamma(1.5))
        * (math.gamma(2.0) / math.gamma(1.0)) ** 0.25
    )
    assert abs(gn["extra"]["value"] - oracle) <= 1e-10
    assert gn["status"] == "PASS" and gn["lhs"] <= 1e-10

    bound = _one(p, "constants.lambda-bound")
    assert bound["status"] == "PASS" and bound["lhs"] < 1.5

    bz = _one(p, "constants.bessel-zero")
    assert bz["status"] == "PASS"
    assert abs(bz["extra"]["value"] - 2.4048) <= 1e-4
    assert timings[0]["constants"] < 1.0


def test_criterion_02_weyl(desk):
    payloads, timings, _ = desk
    p = payloads[0]
    point = _one(p, "weyl.point-ratio", N=10_000)
    assert point["status"] == "PASS" and point["lhs"] <= 0.05

    log = _one(p, "weyl.log-ratio", N=1000)
    assert log["status"] == "PASS" and log["lhs"] <= 0.25

    trend = _one(p, "weyl.log-ratio-trend")
    assert trend["status"] == "PASS" and trend["lhs"] < trend["rhs"]
    assert timings[0]["weyl"] < 5.0


def test_criterion_03_point_bound(desk):
    payloads, timings, _ = desk
    p = payloads[0]
    for N in (1, 25, 100):
        for eps in (0.25, 0.125):
            r = _one(p, "density.point-bound", N=N, epsilon=eps)
            assert r["status"] == "PASS"
            assert r["rhs"] == pytest.approx(math.exp(8.0) * N / eps**4, rel=1e-12)
            # margin strictly positive after subtracting, not adding,
            # the Richardson estimate
            assert r["rhs"] * (1.0 - r["disc_error"]) - r["lhs"] > 0.0
    assert timings[0]["point-bound"] < 60.0


def test_criterion_04_log_bound_sandwich(desk):
    payloads, timings, _ = desk
    p = payloads[0]
    for alpha in (2.0 * math.pi, 4.0 * math.pi):
        for N in (100, 1000, 10_000):
            log = _one(p, "density.log-bound", alpha=alpha, N=N)
            assert log["status"] == "PASS"
            ln_n = math.log(N)
            ceiling = (alpha / (4.0 * math.pi)) * (1.0 + 14.0 * math.log(ln_n) / ln_n)
            assert log["ln_rhs"] == pytest.approx(ceiling, rel=1e-12)

            row = _one(p, "density.sandwich", alpha=alpha, N=N)
            assert row["status"] == "PASS"
            assert row["extra"]["lower"] <= row["lhs"] <= row["rhs"] * (1 + row["disc_error"])
    assert timings[0]["log-sandwich"] < 300.0


def test_criterion_05_cutoff_window(desk):
    payloads, _, _ = desk
    p = payloads[0]
    delta = math.pi**2  # half the ground eigenvalue of the unit square
    band4 = _one(p, "cutoff.band-bound", padding=4)
    assert band4["rhs"] == pytest.approx(math.log(1e3 / delta) / (4.0 * math.pi), rel=1e-12)
    assert band4["lhs"] <= band4["rhs"] * 1.05
    low4 = _one(p, "cutoff.low-bound", padding=4)
    assert low4["lhs"] <= low4["rhs"] * 1.05

    low_ref = _one(p, "cutoff.low-refinement")
    assert low_ref["status"] == "PASS"
    band_ref = _one(p, "cutoff.band-refinement")
    # faithful clause; currently red, see the padding notes in the README
    assert band_ref["status"] == "PASS", (
        "band margin moved from "
        f"{band_ref['lhs']:.6f} (padding 4) to {band_ref['rhs']:.6f} (padding 8)"
    )


def test_criterion_06_layer_cake(desk):
    payloads, _, _ = desk
    p = payloads[0]
    cake = _one(p, "cutoff.layer-cake", N=25)
    assert cake["status"] == "PASS"
    assert cake["extra"]["identity_rel_diff"] <= 1e-6
    assert cake["extra"]["constraint_value"] <= 25.0 * (1.0 + 1e-12)


def test_criterion_07_gradient_of_root(desk):
    payloads, _, _ = desk
    p = payloads[0]
    for N in (10, 50):
        r = _one(p, "family.hoffmann-ostenhof", N=N, h=1 / 512)
        assert r["status"] == "PASS"
        assert r["lhs"] <= 1.02 * N
        ref = _one(p, "family.root-gradient-refinement", N=N)
        # the excess over N, if any, should near-halve when h halves
        # (0.6 leaves room for the next-order term); the excess clips at
        # zero, so a discrete form already below N passes vacuously
        assert ref["status"] == "PASS"
        assert ref["extra"]["excess_fine"] <= 0.6 * ref["extra"]["excess_coarse"]


def test_criterion_08_operator_pencil(desk):
    payloads, timings, _ = desk
    p = payloads[0]
    gap = _one(p, "pencil.constant-gap", n_side=65)
    assert gap["status"] == "PASS" and gap["lhs"] <= 1e-9
    assert abs(gap["extra"]["eta"] - 0.5) <= 1e-9

    assert _one(p, "resolvent.simple")["status"] == "PASS"

    oracle = _one(p, "pencil.commuting-oracle")
    assert oracle["status"] == "PASS" and oracle["lhs"] <= 1e-6

    psd = _one(p, "pencil.sign-changing-psd")
    assert psd["status"] == "PASS"
    assert timings[0]["operator-pencil"] < 120.0


def test_criterion_09_remainder_trend(desk):
    payloads, _, _ = desk
    p = payloads[0]
    minimal = {}
    for N in (100, 1000):
        r = _one(p, "density.remainder", N=N)
        assert r["status"] == "PASS" and r["params"]["t"] == 0.5
        minimal[N] = r["extra"]["minimal_C"]
    trend = _one(p, "density.remainder-trend")
    assert trend["status"] == "PASS"
    assert minimal[1000] <= minimal[100]


def test_criterion_10_interval_halflap(desk):
    payloads, timings, _ = desk
    p = payloads[0]

    semi = _one(p, "density.semiclassical", d=1, N=100)
    assert semi["status"] == "PASS"
    # exponent constant omega_1 / 2 pi = 1 / pi
    ln_n = math.log(100)
    lead = math.pi / math.pi  # alpha * (1/pi) with alpha = pi
    assert semi["ln_rhs"] == pytest.approx(
        lead * (1.0 + 4.0 * math.pi * math.log(ln_n) / ln_n), rel=1e-12
    )

    lem = _one(p, "cutoff.general-d", d=1)
    assert lem["status"] == "PASS"
    assert lem["extra"]["allowance"] == 0.05
    assert lem["extra"]["low_margin"] >= 0.0

    weyl = _one(p, "fractional.weyl-ratio")
    assert weyl["status"] == "PASS"
    assert weyl["params"]["n"] == 64 and weyl["lhs"] <= 0.10

    iso = _one(p, "fractional.extension-isometry")
    assert iso["status"] == "PASS" and iso["lhs"] <= 1e-10
    assert timings[0]["interval-halflap"] < 120.0


def test_criterion_11_determinism(desk):
    payloads, _, texts = desk
    stamps = [p["meta"]["timestamp"] for p in payloads]
    normalized = [t.replace(s, "TIMESTAMP") for t, s in zip(texts, stamps)]
    assert normalized[0] == normalized[1]
