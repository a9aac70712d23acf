import pytest

import latkin


def test_identity_suite_passes():
    results = latkin.identity_suite(graph_instances=30, probability_fields=20)
    assert len(results) == 11
    assert all(r["passed"] for r in results)
    assert max(r["max_residual"] for r in results) < 1e-12


def test_classify_cycle_is_flow():
    c = latkin.classify_generator(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    assert c["kind"] == "flow"
    assert sorted(c["site_map"]) == [0, 1, 2]
    assert latkin.classify_generator(2, [(1, 0, 0.5)])["kind"] == "general"


def test_diffusion_variance_is_t():
    rep = latkin.simulate({"scenario": "diffusion1d", "eps": 0.05, "T": 0.5})
    assert rep["header"][:3] == ["t", "mass", "mean_x1"]
    for row in rep["rows"]:
        assert abs(row["cov"][0] - row["t"]) <= 1e-12 * max(row["t"], 1e-300)
    assert rep["csv"].startswith("t,mass,mean_x1,cov_1_1")


def test_text_config_and_jobs_agree():
    text = "scenario = randomwalk_nd\ndim = 2\neps = 0.1\nT = 0.1\n"
    assert latkin.simulate(text, jobs=1)["csv"] == latkin.simulate(text, jobs=3)["csv"]


def test_ou_window_domain_violation():
    with pytest.raises(latkin.DomainViolation, match=r"\|x\| <= 10"):
        latkin.simulate({"scenario": "ou", "eps": 0.05, "window": 30})


def test_config_errors():
    with pytest.raises(latkin.ConfigError):
        latkin.simulate({"colour": "blue"})
    assert issubclass(latkin.ConfigError, latkin.LatkinError)


def test_converge_heat_order():
    t = latkin.converge({"scenario": "diffusion1d"})
    assert t["rows"][0]["order"] is None
    assert t["rows"][-1]["order"] >= 1.9
    assert t["monotone"]


def test_kramers_gauge():
    g = latkin.kramers_gauge([0, 1, 0, 1, 0, -1])
    assert (g["p_hat"], g["q_hat"], g["r_hat"]) == pytest.approx((0.5, 0.0, 0.5))
    assert g["eta22"] == pytest.approx(1.0)
    fams = latkin.kramers_gauge_solve()
    assert sorted(f["name"] for f in fams) == ["Kramers", "Liouville"]


def test_scaling_diagnose():
    d = latkin.scaling_diagnose(None)
    assert d["rows"][0]["family"] == "sqrt_two_group"
    assert d["rows"][0]["status"] == "ok"
    cubic = latkin.scaling_diagnose({"partition": "cubic"})
    assert all(r["status"] == "requires_constraint" for r in cubic["rows"])
    assert any("C^{ij}_a" in n for r in cubic["rows"] for n in r["notes"])
    assert {t["name"]: t["theta2_bounded"] for t in d["theta"]} == {"lightcone_cubic": False, "tilted_lightcone": True}
