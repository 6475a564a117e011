import pytest

from compcode.taxonomy import (
    IndustryCode,
    IndustryTaxonomy,
    ProductServiceCode,
    ProductServiceTaxonomy,
    SourceCodeTriple,
    SourceMapping,
)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    line = f"{'PASS' if report.passed else 'FAIL'}: {marker.args[0]}"
    capman = item.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


@pytest.fixture
def abc_industries():
    return IndustryTaxonomy(
        [
            IndustryCode("IND_A", "Alpha", "alpha industry"),
            IndustryCode("IND_B", "Beta", "beta industry"),
            IndustryCode("IND_C", "Gamma", "gamma industry"),
        ]
    )


@pytest.fixture
def abc_ps(abc_industries):
    return ProductServiceTaxonomy(
        [
            ProductServiceCode("PS_A1", "IND_A", "A one", "alpha product one"),
            ProductServiceCode("PS_A2", "IND_A", "A two", "alpha product two"),
            ProductServiceCode("PS_B1", "IND_B", "B one", "beta product one"),
            ProductServiceCode("PS_C1", "IND_C", "C one", "gamma product one"),
        ],
        abc_industries,
    )


@pytest.fixture
def abc_mapping(abc_industries):
    return SourceMapping(
        [
            (SourceCodeTriple("S1", "G1", "C1"), "IND_A"),
            (SourceCodeTriple("S1", "G1", "C2"), "IND_A"),
            (SourceCodeTriple("S1", "G2", "C3"), "IND_A"),
        ],
        abc_industries,
    )
