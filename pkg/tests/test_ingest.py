import json

import pytest

from fundlens.errors import EmptyDataset, ParseError, SchemaError
from fundlens.ingest import (
    join_population,
    load_campaigns,
    load_population_table,
    normalize_place,
)


def test_load_campaigns_happy_path(snapshot_file, campaign_record, registry):
    campaigns, report = load_campaigns(snapshot_file([campaign_record]), registry)
    assert report.total_records == 1
    assert report.accepted == 1
    assert report.rejected == 0
    assert campaigns[0].id == "c1"
    assert campaigns[0].ratio == pytest.approx(0.5)


def test_load_campaigns_reason_codes(snapshot_file, campaign_record, registry):
    records = [
        campaign_record,                                        # good
        "{not json",                                            # bad_json
        {**campaign_record, "id": "c2", "launch_date": "junk"},  # bad_date
        {k: v for k, v in campaign_record.items() if k != "goal_amount"},  # missing_key
        {**campaign_record, "id": "c3", "goal_amount": "lots"},  # bad_number
        {**campaign_record, "id": "c4", "num_donors": 1.5},      # bad_count
        {**campaign_record, "id": "c5", "country": "CA"},        # non_us
        {**campaign_record, "id": "c6", "goal_amount": -10.0},   # InvalidGoal
        {**campaign_record, "id": "c7", "category": "Bogus"},    # unknown category
    ]
    campaigns, report = load_campaigns(snapshot_file(records), registry)
    assert [c.id for c in campaigns] == ["c1"]
    assert report.total_records == 9
    assert report.accepted == 1
    assert report.rejected == 8
    assert report.non_us == 1
    assert report.reasons["bad_json"] == 1
    assert report.reasons["bad_date"] == 1
    assert report.reasons["missing_key"] == 1
    assert report.reasons["bad_number"] == 1
    assert report.reasons["bad_count"] == 1
    assert report.reasons["non_us"] == 1
    assert sum(report.reasons.values()) == 8


def test_outlier_records_accepted_but_counted(snapshot_file, campaign_record, registry):
    records = [
        campaign_record,
        {**campaign_record, "id": "big", "goal_amount": 500_000.0, "raised_amount": 100.0},
        {**campaign_record, "id": "viral", "goal_amount": 100.0, "raised_amount": 1000.0},
    ]
    campaigns, report = load_campaigns(snapshot_file(records), registry)
    assert report.accepted == 3
    assert report.out_of_band == 1
    assert report.dropped_ratio_gt_2_5 == 1
    assert {c.id for c in campaigns} == {"c1", "big", "viral"}


def test_empty_snapshot_raises(snapshot_file, registry):
    with pytest.raises(EmptyDataset):
        load_campaigns(snapshot_file(["{broken"]), registry)


def test_missing_file_raises_oserror(tmp_path, registry):
    with pytest.raises(OSError):
        load_campaigns(tmp_path / "nope.jsonl", registry)


def test_report_as_dict_roundtrips_through_json(snapshot_file, campaign_record, registry):
    _, report = load_campaigns(snapshot_file([campaign_record]), registry)
    assert json.loads(json.dumps(report.as_dict())) == report.as_dict()


# ---------------------------------------------------------------------------
# population join
# ---------------------------------------------------------------------------

def test_normalize_place():
    assert normalize_place("  New   York ", "ny") == ("new york", "ny")
    assert normalize_place("CHICAGO", "IL") == ("chicago", "il")


def _census(tmp_path, rows, header="city,state,population"):
    p = tmp_path / "census.csv"
    p.write_text(header + "\n" + "\n".join(rows) + "\n")
    return p


def test_population_table_lookup(tmp_path):
    table = load_population_table(
        _census(tmp_path, ["Springfield,IL,114230", "Portland,OR,653115", "Portland,ME,66882"])
    )
    assert table.lookup("springfield", "il") == 114230
    assert table.lookup(" SPRINGFIELD ", "IL") == 114230
    assert table.lookup("Portland", "ME") == 66882
    assert table.lookup("Nowhere", "KS") is None
    assert table.median_population() == 114230


def test_population_duplicates_keep_larger(tmp_path):
    table = load_population_table(
        _census(tmp_path, ["Springfield,IL,100", "Springfield,IL,999"])
    )
    assert table.lookup("Springfield", "IL") == 999


def test_population_schema_errors(tmp_path):
    with pytest.raises(SchemaError):
        load_population_table(_census(tmp_path, ["a,b"], header="city,state"))
    with pytest.raises(ParseError):
        load_population_table(_census(tmp_path, ["Springfield,IL,lots"]))


def test_join_population(tmp_path, campaign_record, snapshot_file, registry):
    campaigns, _ = load_campaigns(
        snapshot_file([campaign_record, {**campaign_record, "id": "c2", "city": "Nowhere"}]),
        registry,
    )
    table = load_population_table(_census(tmp_path, ["Springfield,IL,114230"]))
    joined, missing = join_population(campaigns, table)
    assert joined.as_dict()["city_population"] == 114230
    assert joined.as_dict()["population_missing"] == 0

    assert missing.as_dict()["population_missing"] == 1
    assert "city_population" not in missing.as_dict()
