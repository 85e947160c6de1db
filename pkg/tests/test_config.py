"""Config schema: versioning, strict keys, curve specs, round trips."""

import copy
from pathlib import Path

import pytest
import tomli

from confmod import (ConfigError, DomainValidationError, SolverOptions,
                     domain_fingerprint, dump_domain, load_domain)
from confmod.config import parse_domain_mapping, to_config_dict
from confmod.fixtures import FIXTURE_NAMES, named_domain

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture()
def base():
    with open(FIXTURE_DIR / "frame.toml", "rb") as fh:
        return tomli.load(fh)


def test_fixture_files_match_their_builders():
    for name in FIXTURE_NAMES:
        dom, opts = load_domain(FIXTURE_DIR / f"{name}.toml")
        assert domain_fingerprint(dom) == domain_fingerprint(named_domain(name))
        assert opts == {}


def test_dump_then_load_round_trips(tmp_path):
    for name in FIXTURE_NAMES:  # wavy exercises the sampled-curve path
        dom = named_domain(name)
        path = tmp_path / f"{name}.toml"
        dump_domain(dom, path)
        reloaded, _ = load_domain(path)
        assert domain_fingerprint(reloaded) == domain_fingerprint(dom)


def test_schema_version_is_required(base):
    del base["confmod_config"]
    with pytest.raises(ConfigError, match="confmod_config"):
        parse_domain_mapping(base)
    base["confmod_config"] = 2
    with pytest.raises(ConfigError, match="confmod_config"):
        parse_domain_mapping(base)


def test_unknown_keys_are_errors_not_warnings(base):
    top = copy.deepcopy(base)
    top["extra"] = 1
    with pytest.raises(ConfigError, match="unknown key"):
        parse_domain_mapping(top)

    curve = copy.deepcopy(base)
    curve["outer"]["upper"]["mystery"] = True
    with pytest.raises(ConfigError, match="unknown key"):
        parse_domain_mapping(curve)

    solver = copy.deepcopy(base)
    solver["solver"] = {"grid": {"h0": 0.1, "spacing": 2}}
    with pytest.raises(ConfigError, match="unknown key"):
        parse_domain_mapping(solver)


def test_missing_tables_are_reported(base):
    missing_side = copy.deepcopy(base)
    del missing_side["inner"]
    with pytest.raises(ConfigError, match="inner"):
        parse_domain_mapping(missing_side)

    missing_part = copy.deepcopy(base)
    del missing_part["outer"]["lower"]
    with pytest.raises(ConfigError, match="outer.lower"):
        parse_domain_mapping(missing_part)


def test_interval_validation(base):
    base["interval_outer"] = [1.0, -1.0]
    with pytest.raises(ConfigError, match="lo < hi"):
        parse_domain_mapping(base)
    base["interval_outer"] = 3.5
    with pytest.raises(ConfigError, match="pair"):
        parse_domain_mapping(base)


def test_curve_spec_validation(base):
    bad_kind = copy.deepcopy(base)
    bad_kind["inner"]["upper"] = {"kind": "spline"}
    with pytest.raises(ConfigError, match="kind"):
        parse_domain_mapping(bad_kind)

    bad_name = copy.deepcopy(base)
    bad_name["inner"]["upper"] = {"kind": "builtin", "name": "helix",
                                  "params": {}}
    with pytest.raises(ConfigError, match="builtin"):
        parse_domain_mapping(bad_name)

    no_points = copy.deepcopy(base)
    no_points["inner"]["upper"] = {"kind": "samples"}
    with pytest.raises(ConfigError, match="points"):
        parse_domain_mapping(no_points)

    wrong_span = copy.deepcopy(base)
    c, d = wrong_span["interval_inner"]
    wrong_span["inner"]["upper"] = {
        "kind": "samples",
        "points": [[c + 0.1, 0.6], [0.0, 0.6], [d, 0.6]]}
    with pytest.raises(ConfigError, match="declared interval"):
        parse_domain_mapping(wrong_span)


def test_geometry_violations_surface_on_load(base):
    # swap the bands vertically: config parses, the domain does not validate
    base["outer"], base["inner"] = base["inner"], base["outer"]
    base["interval_outer"], base["interval_inner"] = (
        base["interval_inner"], base["interval_outer"])
    with pytest.raises(DomainValidationError):
        parse_domain_mapping(base)


def test_solver_block_parses_to_flat_options(base):
    base["solver"] = {
        "grid": {"h0": 0.05, "levels": 4, "gap_cells": 32, "aspect": 2},
        "cg": {"tol": 1e-9, "max_iters": 5000},
        "truncation": {"box_factor": 4.0},
    }
    _, flat = parse_domain_mapping(base)
    assert flat == {"h0": 0.05, "levels": 4, "gap_cells": 32, "aspect": 2,
                    "cg_tol": 1e-9, "cg_max_iters": 5000, "box_factor": 4.0}
    opts = SolverOptions.from_flat(flat)
    assert opts.cg_tol == 1e-9 and opts.box_factor == 4.0


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_domain(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("confmod_config = [unclosed\n")
    with pytest.raises(ConfigError, match="TOML"):
        load_domain(bad)


def test_fingerprint_tracks_content():
    frame = named_domain("frame")
    assert domain_fingerprint(frame) == domain_fingerprint(named_domain("frame"))
    assert domain_fingerprint(frame) != domain_fingerprint(named_domain("tilted"))
    doc = to_config_dict(frame)
    assert doc["confmod_config"] == 1
