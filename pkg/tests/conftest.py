"""Session fixtures: the synthetic county is built once and the full
pipeline run once; read-only tests share both."""

from __future__ import annotations

import pytest
from hypothesis import settings

from vrimap.config import load_config
from vrimap.pipeline import run_pipeline
from vrimap.synth import build_county

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def county_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("county")
    build_county(out, seed=42)
    return out


@pytest.fixture(scope="session")
def county_config(county_dir):
    return load_config(county_dir / "config.yaml")


@pytest.fixture(scope="session")
def county_out(tmp_path_factory, county_config):
    out = tmp_path_factory.mktemp("county_out")
    run_pipeline(county_config, ["fit", "simulate", "map", "assess", "render"], out)
    return out


@pytest.fixture(scope="session")
def county_snapshot(county_config, county_out):
    from vrimap.pipeline import build_snapshot

    return build_snapshot(county_config, county_out)
