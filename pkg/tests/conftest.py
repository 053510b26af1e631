import numpy as np
import pytest
import torch

from mvpref.dataset import ImagePrompt, RankingRecord
from mvpref.dataset.synthetic import (
    SyntheticAssetConfig,
    generate_prompt_image,
    generate_synthetic_asset,
)

torch.set_num_threads(2)

_criterion_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(id, title): acceptance criterion with a summary line")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        cid, title = marker.args
        _criterion_outcomes[cid] = (report.passed, title)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for cid in sorted(_criterion_outcomes):
        passed, title = _criterion_outcomes[cid]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {cid}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_prompt(pid: str = "p0") -> ImagePrompt:
    return ImagePrompt(id=pid, source="generated", image_path=f"{pid}.png",
                       complexity_tags=frozenset({"geometry_simple"}))


def make_asset(pid: str = "p0", quality: float = 1.0, seed: int = 0,
               n_views: int = 2, image_size: int = 16, **kw):
    prompt = make_prompt(pid)
    cfg = SyntheticAssetConfig(n_views=n_views, image_size=image_size)
    img = generate_prompt_image(pid, image_size, seed)
    return generate_synthetic_asset(prompt, quality, seed, cfg,
                                    prompt_image=img, **kw)


def record(annotator: str, list_id: str, *groups) -> RankingRecord:
    return RankingRecord(annotator_id=annotator, asset_list_id=list_id,
                         ranking=[set(g) if isinstance(g, (set, list, tuple)) else {g}
                                  for g in groups])
