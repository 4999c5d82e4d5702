"""Smoke tests for the pratyaya Python module.

Run from ctest (PYTHONPATH points at the build tree) or by hand:
    PYTHONPATH=build/python python3 tests/python/smoke_test.py
"""

import os
import sys
import tempfile

import pratyaya


def test_transliteration(table):
    assert pratyaya.itrans_to_slp1(table, "paTh") == "paW"
    assert pratyaya.itrans_to_slp1(table, "shiva") == "Siva"
    assert pratyaya.slp1_to_itrans(table, "Endra") == "aindra"
    assert pratyaya.itrans_to_slp1(table, pratyaya.slp1_to_itrans(table, "tolanam")) == "tolanam"
    violations = pratyaya.validate_slp1(table, "tul+lyuw")
    assert violations == [(3, "+")]
    assert pratyaya.validate_slp1(table, "tul+lyuw", allow_control=True) == []
    assert pratyaya.convert_line(table, "paTh+tavya", to_slp1=True) == "paW+tavya"


def test_corpus(table, data_dir):
    records = pratyaya.load_corpus(table, os.path.join(data_dir, "sample_corpus.tsv"))
    assert len(records) == 12
    assert records[0].stem == "tul" and records[0].pada == "tolanam"

    kept = pratyaya.filter_krit_suffixes(records)
    assert len(kept) == 10  # Satf~ and SAnac rows drop

    split = pratyaya.make_split(records, 0.8, seed=3)
    assert len(split.train) == 9 and len(split.test) == 3

    vocab = pratyaya.build_vocabulary(records)
    pair = pratyaya.encode_formation_pair(records[0], vocab, 17, 18)
    assert len(pair.source_indices) == 17
    assert len(pair.target_indices) == 20
    assert pratyaya.decode_output_string(pair.target_indices, vocab) == "tolanam"

    stats = pratyaya.corpus_stats(records, machine=True)
    assert "krit.total=8" in stats

    source_max, target_max = pratyaya.compute_maxima(records, "formation")
    assert (source_max, target_max) == (12, 10)


def make_toy_records():
    # tiny deterministic suffix language: plain concatenation
    stems = ["kama", "nila", "vasu", "mati", "soma", "tara", "bala", "rani",
             "dipa", "maya", "kusa", "lata", "gita", "puma", "hari", "jaya"]
    suffixes = ["ti", "na", "su"]
    records = []
    for stem in stems:
        for suffix in suffixes:
            records.append(pratyaya.DerivationRecord(stem, suffix, stem + suffix, "krit"))
    return records


def test_training_and_checkpoint():
    records = make_toy_records()
    vocab = pratyaya.build_vocabulary(records)
    source_max, target_max = pratyaya.compute_maxima(records, "formation")

    mconfig = pratyaya.ModelConfig()
    mconfig.latent_dim = 16
    mconfig.vocab_size = vocab.size
    mconfig.source_max = source_max
    mconfig.target_max = target_max

    tconfig = pratyaya.TrainConfig()
    tconfig.batch_size = 16
    tconfig.epochs = 3
    tconfig.seed = 11

    model, history = pratyaya.train(records, "formation", vocab, mconfig, tconfig)
    assert len(history) == 3
    assert history[-1][1] < history[0][1]  # train loss fell

    prediction = model.predict_formation("kama", "ti")
    assert isinstance(prediction, str)

    with tempfile.TemporaryDirectory() as scratch:
        path = os.path.join(scratch, "toy.pksq")
        model.save(path)
        loaded = pratyaya.load_checkpoint(path)
        assert loaded.direction == "formation"
        for record in records[:10]:
            assert (loaded.predict_formation(record.stem, record.suffix_name)
                    == model.predict_formation(record.stem, record.suffix_name))


def test_eval_helpers():
    successes, total, ratio = pratyaya.exact_match_accuracy(["a", "b"], ["a", "c"])
    assert (successes, total) == (1, 2) and abs(ratio - 0.5) < 1e-12
    assert abs(pratyaya.char_accuracy(["tolanam"], ["tolanan"]) - 6 / 7) < 1e-12
    assert pratyaya.split_success(("tul", "lyuw"), False, ("tul", "lyuw"))
    assert not pratyaya.split_success(("tUl", "lyuw"), False, ("tul", "lyuw"))
    assert not pratyaya.split_success(("tul", ""), True, ("tul", "lyuw"))
    assert pratyaya.format_result_cell(3903, 4396) == "3903 / 4396 (88.79%)"


def test_error_mapping(table):
    try:
        pratyaya.itrans_to_slp1(table, "q#q")
    except pratyaya.PratyayaError:
        pass
    else:
        raise AssertionError("expected PratyayaError")


def main():
    data_dir = pratyaya.default_data_dir()
    table = pratyaya.TransliterationTable.load(os.path.join(data_dir, "itrans_slp1.tsv"))
    test_transliteration(table)
    test_corpus(table, data_dir)
    test_training_and_checkpoint()
    test_eval_helpers()
    test_error_mapping(table)
    print("python smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
