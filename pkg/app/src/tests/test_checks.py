from checks import funcs, run_checks
from serialize import load_config


def statuses(results):
    return {r.name: r.status for r in results}


def test_quick_suite(sample_config):
    results = run_checks(load_config(sample_config))
    assert set(statuses(results)) == set(funcs)
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results]
    assert statuses(results)["circuit-preparation"] == "skip"
    assert statuses(results)["artifact"] == "skip"


def test_full_suite_in_threads(sample_config):
    results = run_checks(load_config(sample_config), level="full", jobs=3)
    assert statuses(results)["circuit-preparation"] == "pass"
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results]


def test_generalized_skips(generalized_config):
    results = run_checks(
        load_config(generalized_config),
        names=["t-normalization", "homogeneous-networks", "network-mps", "network-ttn"],
    )
    assert statuses(results) == {
        "t-normalization": "skip",
        "homogeneous-networks": "skip",
        "network-mps": "pass",
        "network-ttn": "pass",
    }
