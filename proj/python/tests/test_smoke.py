import math
import os
from pathlib import Path

import pytest

import g2p

DATA = Path(os.environ.get("G2P_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


@pytest.fixture(scope="module")
def toy():
    return g2p.load_lexicon(DATA / "toy50.dict").entries


@pytest.fixture(scope="module")
def trained(toy):
    split = g2p.DatasetSplit()
    split.train = toy
    config = g2p.TrainConfig()
    config.epochs = 3
    config.hidden = 16
    config.embed = 8
    seen = []
    result = g2p.train(split, config, seen.append)
    assert [r.epoch for r in seen] == [1, 2, 3]
    return result


def test_lexicon_parsing():
    lex = g2p.parse_lexicon(";;; comment\nbola B O L A\nBOLA B O L\n")
    assert lex.entries == [g2p.LexiconEntry("BOLA", ["B", "O", "L", "A"])]
    assert len(lex.alternates) == 1
    with pytest.raises(g2p.ParseError):
        g2p.parse_lexicon("WORD\n")
    assert g2p.normalize_word("  ação ") == "AÇÃO"
    assert g2p.graphemes_of("AÇÃO") == ["A", "Ç", "Ã", "O"]


def test_split(toy):
    s = g2p.split_dataset(toy, 0)
    assert (len(s.train), len(s.validation), len(s.test)) == (35, 10, 5)
    words = {e.word for e in s.train + s.validation + s.test}
    assert len(words) == 50


def test_train_decode_roundtrip(trained, tmp_path):
    model = trained.model
    assert trained.best_epoch >= 1
    assert len(trained.history) == 3
    assert model.hidden_dim == 16 and model.attention_dim == 16

    g = g2p.greedy_decode(model, "casa")
    b = g2p.beam_decode(model, "casa", 1)
    assert len(b) == 1
    assert b[0].ids == g.ids and b[0].log_prob == g.log_prob
    assert math.isclose(sum(g.step_log_probs), g.log_prob, rel_tol=1e-12, abs_tol=1e-12)
    for row in g.attention:
        assert math.isclose(sum(row), 1.0, abs_tol=1e-6)
    assert g2p.pronounce(model, "casa") == g.tokens

    path = tmp_path / "m.g2pm"
    g2p.save_model(model, path)
    loaded = g2p.load_model(path)
    assert g2p.serialize_model(loaded) == g2p.serialize_model(model)
    assert g2p.greedy_decode(loaded, "casa").ids == g.ids

    with pytest.raises(g2p.FormatError):
        g2p.deserialize_model(b"G2PM garbage")
    with pytest.raises(ValueError):
        g2p.greedy_decode(model, "  ")


def test_evaluate_and_edit_distance(trained, toy):
    report = g2p.evaluate(trained.model, toy, toy)
    assert report["overall"]["words"] == 50
    assert report["oov"] is None
    assert 0.0 <= report["overall"]["word_accuracy"] <= 1.0
    d = g2p.edit_distance(["A", "X", "C"], ["A", "B", "C", "D"])
    assert d == {"distance": 2, "substitutions": 1, "insertions": 0, "deletions": 1}
