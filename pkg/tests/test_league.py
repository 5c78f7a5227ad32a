import io
import warnings

import numpy as np
import pytest

from cbscm.league import (
    DEFAULT_ADOPTION_YEARS,
    THREE_POINTS,
    TWO_POINTS,
    DataWarning,
    MatchParseError,
    MatchRecord,
    PointsRule,
    RuleSchedule,
    build_season_table,
    build_season_tables,
    group_by_season,
    parse_matches,
    season_covariates,
    write_matches,
)

from .conftest import cascade_results, season_from_results

HEADER = "league_id,season_start_year,home_team,away_team,home_goals,away_goals\n"


def test_parse_round_trip():
    recs = season_from_results(cascade_results(3))
    buf = io.StringIO()
    write_matches(recs, buf)
    assert parse_matches(buf.getvalue()) == recs


def test_parse_reports_line_and_field():
    text = HEADER + "ENG,1980,A,B,1,0\nENG,1980,B,A,x,0\n"
    with pytest.raises(MatchParseError) as e:
        parse_matches(text)
    assert e.value.line == 3 and e.value.field == "home_goals"


@pytest.mark.parametrize(
    "row, field",
    [
        ("ENG,1980,A,B,-1,0", "home_goals"),
        ("ENG,1980,A,A,1,0", "away_team"),
        ("ENG,1980,A,B,1", "row"),
        (",1980,A,B,1,0", "league_id"),
        ("ENG,nineteen,A,B,1,0", "season_start_year"),
    ],
)
def test_parse_rejects(row, field):
    with pytest.raises(MatchParseError) as e:
        parse_matches(HEADER + row + "\n")
    assert e.value.field == field


def test_parse_bad_header():
    with pytest.raises(MatchParseError) as e:
        parse_matches("a,b,c\n")
    assert e.value.line == 1


def test_duplicate_fixture_warns_and_is_kept():
    text = HEADER + "ENG,1980,A,B,1,0\nENG,1980,A,B,2,0\n"
    with pytest.warns(DataWarning, match="duplicate fixture"):
        recs = parse_matches(text)
    assert len(recs) == 2


def test_match_record_validation():
    with pytest.raises(ValueError):
        MatchRecord("L", 1, "A", "A", 0, 0)
    with pytest.raises(ValueError):
        MatchRecord("L", 1, "A", "B", -1, 0)


def test_points_rules():
    assert TWO_POINTS.label == "2-1-0" and THREE_POINTS.label == "3-1-0"
    with pytest.raises(ValueError):
        PointsRule(1, 2, 0)


def test_rule_schedule():
    s = RuleSchedule.historical()
    assert s.rule_for("ENG", 1980) == TWO_POINTS
    assert s.rule_for("ENG", 1981) == THREE_POINTS
    assert s.rule_for("GER", 1993) == TWO_POINTS
    assert RuleSchedule().rule_for("ENG", 2000) == TWO_POINTS
    assert dict(s.adoption_years) == DEFAULT_ADOPTION_YEARS
    with pytest.raises(ValueError, match="twice"):
        RuleSchedule.from_pairs([("ENG", 1981), ("ENG", 1982)])


def test_season_table_counts():
    t = build_season_table(season_from_results(cascade_results(4)))
    assert t.K == 4 and t.n_matches == 12
    assert list(t.wins) == [6, 4, 2, 0]
    assert np.all(t.matches_played == 6)
    assert t.points.sum() == 2 * 12
    assert t.with_rule(THREE_POINTS).points.sum() == 3 * 12


def test_season_table_all_draws():
    t = build_season_table(season_from_results(np.ones((3, 3), dtype=int)))
    assert np.allclose(t.shares, 1 / 3)
    assert np.allclose(t.draw_shares, 1.0) and np.all(t.wins == 0)


def test_build_season_tables_applies_schedule():
    recs = season_from_results(cascade_results(3), league="ENG", season=1980)
    recs += season_from_results(cascade_results(3), league="ENG", season=1981)
    tables = build_season_tables(recs, RuleSchedule.historical())
    assert tables[("ENG", 1980)].rule == TWO_POINTS
    assert tables[("ENG", 1981)].rule == THREE_POINTS
    assert list(group_by_season(recs)) == [("ENG", 1980), ("ENG", 1981)]


def test_build_season_table_rejects_mixed_input():
    recs = season_from_results(cascade_results(2), season=1) + season_from_results(cascade_results(2), season=2)
    with pytest.raises(ValueError, match="span several"):
        build_season_table(recs)
    with pytest.raises(ValueError):
        build_season_table([])


def test_covariate_identity_on_complete_round_robin():
    # every team plays the same number of matches, so mean win share is (1 - mean draw share) / 2
    rng = np.random.default_rng(4)
    r = rng.integers(0, 3, size=(6, 6))
    t = build_season_table(season_from_results(r))
    w, d, K = season_covariates(t)
    assert K == 6
    assert w == pytest.approx((1 - d) / 2, abs=1e-15)


def test_uneven_fixtures_no_warning_on_build():
    recs = season_from_results(cascade_results(3))[:-1]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        t = build_season_table(recs)
    assert t.matches_played.min() < t.matches_played.max()
