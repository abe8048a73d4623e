import json
from pathlib import Path

import pytest

from fundlens.core import CategoryRegistry
from fundlens.text import load_lexicon


@pytest.fixture(scope="session")
def registry():
    return CategoryRegistry.default()


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture()
def campaign_record():
    return {
        "id": "c1",
        "launch_date": "2019-06-01",
        "city": "Springfield",
        "state": "IL",
        "country": "US",
        "title": "Help our team",
        "description": "We think we can win this together",
        "category": "Sports, Teams & Clubs",
        "goal_amount": 5000.0,
        "raised_amount": 2500.0,
        "num_followers": 10,
        "num_shares": 4,
        "num_donors": 3,
        "cover_image": "images/img_c1.ppm",
    }


@pytest.fixture()
def snapshot_file(tmp_path, campaign_record):
    def write(records, name="campaigns.jsonl"):
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write((rec if isinstance(rec, str) else json.dumps(rec)) + "\n")
        return path

    return write
