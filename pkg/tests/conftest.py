from pathlib import Path

import pytest

from polling_lab import build_model

MODELS = Path(__file__).resolve().parent.parent / "models"


def exp(rate):
    return {"family": "exponential", "params": {"rate": rate}}


def det(value):
    return {"family": "deterministic", "params": {"value": value}}


def two_queue(switch=0.5, disciplines=("exhaustive", "gated"), rates=(0.3, 0.2)):
    return build_model({
        "queues": [
            {"lambda": rates[0], "discipline": disciplines[0], "service": exp(1.0)},
            {"lambda": rates[1], "discipline": disciplines[1], "service": exp(1.0)},
        ],
        "switchovers": [det(switch), det(switch)],
    })


def mm1(lam=0.5):
    return build_model({
        "queues": [{"lambda": lam, "discipline": "exhaustive", "service": exp(1.0)}],
        "switchovers": [det(0.0)],
    })


def one_limited():
    return build_model({
        "queues": [
            {"lambda": 0.2, "discipline": "1-limited", "service": exp(1.0)},
            {"lambda": 0.2, "discipline": "1-limited", "service": exp(1.0)},
        ],
        "switchovers": [det(0.3), det(0.3)],
    })


@pytest.fixture
def canonical():
    return two_queue()


@pytest.fixture
def canonical_zero():
    return two_queue(switch=0.0)
