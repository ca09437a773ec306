"""Grapheme-to-phoneme conversion with an attentive GRU encoder-decoder."""

from ._core import (
    DatasetSplit,
    DecodeError,
    DecodeResult,
    Error,
    FormatError,
    InvalidArgument,
    Lexicon,
    LexiconEntry,
    Model,
    ParseError,
    TrainConfig,
    beam_decode,
    deserialize_model,
    edit_distance,
    evaluate,
    graphemes_of,
    greedy_decode,
    load_lexicon,
    load_model,
    normalize_word,
    parse_lexicon,
    save_model,
    serialize_model,
    split_dataset,
    train,
)


def pronounce(model, word, beam=1):
    """Phoneme tokens for one word, greedy when beam is 1."""
    if beam <= 1:
        return greedy_decode(model, word).tokens
    return beam_decode(model, word, beam)[0].tokens
